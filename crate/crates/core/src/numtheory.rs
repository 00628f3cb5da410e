//! Sieve-backed arithmetic: factorizations, divisors, multiplicative
//! functions and smooth-number counts.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Smallest-prime-factor sieve over `1..=limit`.
#[derive(Clone)]
pub struct PrimeTable {
    limit: u64,
    spf: Vec<u32>,
    primes: Vec<u64>,
}

impl fmt::Debug for PrimeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrimeTable")
            .field("limit", &self.limit)
            .field("prime_count", &self.primes.len())
            .finish()
    }
}

/// Linear sieve; every composite is crossed out exactly once by its least prime.
pub fn build_prime_table(limit: u64) -> Result<PrimeTable> {
    if limit == 0 {
        return Err(Error::EmptyTable);
    }
    if limit > u32::MAX as u64 {
        return Err(invalid(format!("prime table limit {limit} exceeds u32 range")));
    }
    let size = limit as usize + 1;
    let mut spf = vec![0u32; size];
    let mut primes: Vec<u64> = Vec::new();
    for n in 2..size {
        if spf[n] == 0 {
            spf[n] = n as u32;
            primes.push(n as u64);
        }
        let p_n = spf[n] as u64;
        for &p in &primes {
            if p > p_n {
                break;
            }
            let m = p as usize * n;
            if m >= size {
                break;
            }
            spf[m] = p as u32;
        }
    }
    Ok(PrimeTable { limit, spf, primes })
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes `p <= y` (clipped to the table).
    pub fn primes_up_to(&self, y: u64) -> &[u64] {
        let end = self.primes.partition_point(|&p| p <= y);
        &self.primes[..end]
    }

    pub fn smallest_prime_factor(&self, n: u64) -> Option<u64> {
        if n < 2 || n > self.limit {
            None
        } else {
            Some(self.spf[n as usize] as u64)
        }
    }

    pub fn is_prime(&self, n: u64) -> Result<bool> {
        self.check(n)?;
        Ok(n >= 2 && self.spf[n as usize] as u64 == n)
    }

    fn check(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.limit {
            Err(Error::OutOfRange { n, limit: self.limit })
        } else {
            Ok(())
        }
    }

    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        self.check(n)?;
        let mut prime_powers: Vec<(u64, u32)> = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            prime_powers.push((p as u64, e));
        }
        Ok(Factorization { prime_powers })
    }

    pub fn divisors(&self, n: u64) -> Result<Vec<u64>> {
        Ok(self.factorize(n)?.divisors())
    }

    pub fn arithmetic_statistics(&self, n: u64) -> Result<ArithmeticStatistics> {
        Ok(self.factorize(n)?.statistics())
    }

    /// Σ_{p≤y} (log p)/p over the sieved primes.
    pub fn mertens_sum(&self, y: u64) -> Result<f64> {
        if y < 2 {
            return Err(invalid(format!("mertens_sum needs y >= 2, got {y}")));
        }
        if y > self.limit {
            return Err(Error::OutOfRange { n: y, limit: self.limit });
        }
        Ok(self
            .primes_up_to(y)
            .iter()
            .map(|&p| (p as f64).ln() / p as f64)
            .sum())
    }
}

/// Prime factorization as `(p, e)` pairs with strictly increasing primes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization {
    prime_powers: Vec<(u64, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArithmeticStatistics {
    /// Ω(n), prime factors counted with multiplicity.
    pub big_omega: u32,
    /// ω(n), distinct prime factors.
    pub omega: u32,
    pub divisor_count: u64,
    /// P⁺(n), with P⁺(1) = 1.
    pub largest_prime_factor: u64,
    pub mobius: i8,
}

impl Factorization {
    pub fn from_prime_powers(mut prime_powers: Vec<(u64, u32)>) -> Result<Self> {
        prime_powers.sort_unstable();
        for w in prime_powers.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(invalid(format!("prime {} listed twice", w[0].0)));
            }
        }
        if let Some(&(p, e)) = prime_powers.iter().find(|&&(p, e)| p < 2 || e == 0) {
            return Err(invalid(format!("bad prime power {p}^{e}")));
        }
        Ok(Factorization { prime_powers })
    }

    /// Trial division, for indices beyond any sieve.
    pub fn by_trial_division(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        let mut prime_powers = Vec::new();
        let mut m = n;
        let mut p = 2u64;
        while p * p <= m {
            if m % p == 0 {
                let mut e = 0;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                prime_powers.push((p, e));
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if m > 1 {
            prime_powers.push((m, 1));
        }
        Ok(Factorization { prime_powers })
    }

    pub fn prime_powers(&self) -> &[(u64, u32)] {
        &self.prime_powers
    }

    pub fn value(&self) -> u64 {
        self.prime_powers.iter().map(|&(p, e)| p.pow(e)).product()
    }

    pub fn big_omega(&self) -> u32 {
        self.prime_powers.iter().map(|&(_, e)| e).sum()
    }

    pub fn omega(&self) -> u32 {
        self.prime_powers.len() as u32
    }

    pub fn divisor_count(&self) -> u64 {
        self.prime_powers.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    pub fn largest_prime_factor(&self) -> u64 {
        self.prime_powers.last().map_or(1, |&(p, _)| p)
    }

    pub fn mobius(&self) -> i8 {
        if self.prime_powers.iter().any(|&(_, e)| e > 1) {
            0
        } else if self.prime_powers.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn is_squarefree(&self) -> bool {
        self.prime_powers.iter().all(|&(_, e)| e == 1)
    }

    pub fn statistics(&self) -> ArithmeticStatistics {
        ArithmeticStatistics {
            big_omega: self.big_omega(),
            omega: self.omega(),
            divisor_count: self.divisor_count(),
            largest_prime_factor: self.largest_prime_factor(),
            mobius: self.mobius(),
        }
    }

    /// Sorted list of all divisors.
    pub fn divisors(&self) -> Vec<u64> {
        let mut out = vec![1u64];
        for &(p, e) in &self.prime_powers {
            let len = out.len();
            let mut pk = 1;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    out.push(out[i] * pk);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Bohr-lift exponent vector κ(n) over the given primes, or `None` if
    /// some prime factor is missing from the list.
    pub fn exponents_over(&self, primes: &[u64]) -> Option<Vec<u32>> {
        let mut kappa = vec![0u32; primes.len()];
        for &(p, e) in &self.prime_powers {
            let j = primes.iter().position(|&q| q == p)?;
            kappa[j] = e;
        }
        Some(kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplicativeKind {
    Completely,
    General,
}

#[derive(Clone)]
enum Rule {
    Prime(Arc<dyn Fn(u64) -> Complex64 + Send + Sync>),
    PrimePower(Arc<dyn Fn(u64, u32) -> Complex64 + Send + Sync>),
}

/// Multiplicative function given by its values at prime powers; f(1) = 1.
#[derive(Clone)]
pub struct MultiplicativeFunction {
    rule: Rule,
}

impl fmt::Debug for MultiplicativeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplicativeFunction")
            .field("kind", &self.kind())
            .finish()
    }
}

impl MultiplicativeFunction {
    /// Completely multiplicative: f(p^e) = f(p)^e.
    pub fn completely(prime_value: impl Fn(u64) -> Complex64 + Send + Sync + 'static) -> Self {
        MultiplicativeFunction { rule: Rule::Prime(Arc::new(prime_value)) }
    }

    pub fn from_prime_powers(
        value: impl Fn(u64, u32) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        MultiplicativeFunction { rule: Rule::PrimePower(Arc::new(value)) }
    }

    pub fn kind(&self) -> MultiplicativeKind {
        match self.rule {
            Rule::Prime(_) => MultiplicativeKind::Completely,
            Rule::PrimePower(_) => MultiplicativeKind::General,
        }
    }

    pub fn prime_power_value(&self, p: u64, e: u32) -> Complex64 {
        match &self.rule {
            Rule::Prime(v) => v(p).powu(e),
            Rule::PrimePower(v) => v(p, e),
        }
    }

    pub fn at(&self, factorization: &Factorization) -> Complex64 {
        factorization
            .prime_powers()
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &(p, e)| acc * self.prime_power_value(p, e))
    }

    /// Values at every n in `lo..hi` by a segmented sieve. `sieving_primes`
    /// must contain all primes up to √(hi − 1).
    pub fn evaluate_range(&self, lo: u64, hi: u64, sieving_primes: &[u64]) -> Result<Vec<Complex64>> {
        if lo == 0 {
            return Err(Error::ZeroIndex);
        }
        if hi <= lo {
            return Ok(Vec::new());
        }
        let need = isqrt(hi - 1);
        let have = sieving_primes.last().copied().unwrap_or(1);
        if have < need && next_prime_after(have) <= need {
            return Err(Error::SievingPrimesTooShort { have, need });
        }
        let len = (hi - lo) as usize;
        let mut value = vec![Complex64::new(1.0, 0.0); len];
        let mut rest: Vec<u64> = (lo..hi).collect();
        for &p in sieving_primes {
            if p > need {
                break;
            }
            let start = lo.div_ceil(p) * p;
            let mut m = start;
            while m < hi {
                let i = (m - lo) as usize;
                let mut e = 0;
                while rest[i] % p == 0 {
                    rest[i] /= p;
                    e += 1;
                }
                value[i] *= self.prime_power_value(p, e);
                m += p;
            }
        }
        for (v, &r) in value.iter_mut().zip(&rest) {
            if r > 1 {
                *v *= self.prime_power_value(r, 1);
            }
        }
        Ok(value)
    }
}

pub fn evaluate_multiplicative(f: &MultiplicativeFunction, n: u64, table: &PrimeTable) -> Result<Complex64> {
    Ok(f.at(&table.factorize(n)?))
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn next_prime_after(p: u64) -> u64 {
    let mut q = p + 1;
    while Factorization::by_trial_division(q).map_or(false, |f| f.big_omega() != 1) {
        q += 1;
    }
    q
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut limit = 16u64;
    loop {
        let table = build_prime_table(limit).expect("positive limit");
        if table.primes().len() >= count {
            return table.primes()[..count].to_vec();
        }
        limit *= 2;
    }
}

/// Ψ(x, y): the number of n ≤ x with P⁺(n) ≤ y (n = 1 included).
pub fn smooth_count(x: u64, y: u64) -> u64 {
    if x == 0 {
        return 0;
    }
    if y >= x {
        return x;
    }
    if y < 2 {
        return 1;
    }
    let table = build_prime_table(y).expect("y >= 2");
    psi(x, table.primes())
}

// Ψ(x, p_k) = Ψ(x, p_{k-1}) + Ψ(x/p_k, p_k), depth-first over the primes.
fn psi(x: u64, primes: &[u64]) -> u64 {
    match primes.len() {
        _ if x == 0 => 0,
        0 => 1,
        1 => 64 - u64::from(x.leading_zeros()),
        k => {
            let p = primes[k - 1];
            if p >= x {
                x
            } else {
                psi(x, &primes[..k - 1]) + psi(x / p, primes)
            }
        }
    }
}

/// All n ≤ x whose prime factors lie in `primes` (ascending), sorted.
pub fn smooth_numbers(x: u64, primes: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    if x == 0 {
        return out;
    }
    // Each n is generated once: multiply only by primes >= its largest factor.
    let mut stack = vec![(1u64, 0usize)];
    while let Some((n, i)) = stack.pop() {
        out.push(n);
        for (j, &p) in primes.iter().enumerate().skip(i) {
            if p > x / n {
                break;
            }
            stack.push((n * p, j));
        }
    }
    out.sort_unstable();
    out
}

/// Σ_{p≤y} (log p)/p.
pub fn mertens_sum(y: u64) -> Result<f64> {
    if y < 2 {
        return Err(invalid(format!("mertens_sum needs y >= 2, got {y}")));
    }
    build_prime_table(y)?.mertens_sum(y)
}

/// k-fold iterated natural logarithm with the floor convention
/// log_k x = 1 for x ≤ x_k, where x_2 = e^e and x_{k+1} = e^{x_k}.
/// For k = 1 this is the plain logarithm.
pub fn iterated_log(x: f64, k: u32) -> f64 {
    assert!(k >= 1, "iterated_log needs k >= 1");
    if k == 1 {
        return x.ln();
    }
    let mut threshold = std::f64::consts::E.exp();
    for _ in 2..k {
        threshold = threshold.exp();
    }
    if x <= threshold {
        return 1.0;
    }
    (0..k).fold(x, |v, _| v.ln())
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
