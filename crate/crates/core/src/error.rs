use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prime table limit must be at least 1")]
    EmptyTable,
    #[error("{n} is outside the table range 1..={limit}")]
    OutOfRange { n: u64, limit: u64 },
    #[error("sieving primes stop at {have}, need primes up to {need}")]
    SievingPrimesTooShort { have: u64, need: u64 },
    #[error("index 0 is not a Dirichlet index")]
    ZeroIndex,
    #[error("index {index} exceeds truncation {truncation}")]
    BeyondTruncation { index: u64, truncation: u64 },
    #[error("antiderivative needs a vanishing constant term, got a_1 = {0}")]
    NonzeroConstant(Complex64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("indices {a} and {b} share the factor {gcd}")]
    NotCoprime { a: u64, b: u64, gcd: u64 },
    #[error("truncation {truncation} is too small, need at least {required}")]
    TruncationTooSmall { truncation: u64, required: u64 },
    #[error("support would have {size} terms, limit is {limit}")]
    SupportTooLarge { size: u128, limit: u128 },
    #[error("weight is undefined at index {0}")]
    UndefinedWeight(u64),
    #[error("coefficient at index {0} is not real")]
    ComplexEntry(u64),
    #[error("coefficient at index {0} is negative")]
    NegativeCoefficient(u64),
    #[error("index {index} has a prime factor outside the first {d} primes")]
    SupportLeak { index: u64, d: usize },
    #[error("test vector is zero")]
    ZeroVector,
    #[error("data point {0} is not positive")]
    NonPositiveData(usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("report row has {got} cells, expected {expected}")]
    RaggedRow { expected: usize, got: usize },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
