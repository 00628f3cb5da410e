//! Named symbol families g = Σ b_n n^{-s} and the weighted statistics
//! attached to them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletPolynomial;
use crate::error::{invalid, Error, Result};
use crate::numtheory::{build_prime_table, gcd, iterated_log, Factorization, MultiplicativeFunction, PrimeTable};

/// Largest index for which statistics use a sieve rather than trial division.
const SIEVE_STATISTICS_LIMIT: u64 = 1 << 24;

/// b_n = n^{-α}/log n for 2 ≤ n ≤ N: the primitive of ζ(s + α) − 1.
pub fn zeta_primitive_symbol(alpha: f64, truncation: u64) -> Result<DirichletPolynomial> {
    if truncation < 2 {
        return Err(invalid(format!("zeta primitive needs N >= 2, got {truncation}")));
    }
    DirichletPolynomial::from_real_terms(
        truncation,
        (2..=truncation).map(|n| {
            let x = n as f64;
            (n, x.powf(-alpha) / x.ln())
        }),
    )
}

/// ψ completely multiplicative with ψ(p) = λ log p / p.
pub fn lambda_psi(lambda: f64) -> MultiplicativeFunction {
    MultiplicativeFunction::completely(move |p| Complex64::new(lambda * (p as f64).ln() / p as f64, 0.0))
}

/// b_n = ψ(n)/log n with ψ from [`lambda_psi`]; b_p = λ/p.
pub fn lambda_symbol(lambda: f64, truncation: u64) -> Result<DirichletPolynomial> {
    if !(lambda >= 0.0) {
        return Err(invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    if truncation < 2 {
        return Err(invalid(format!("lambda symbol needs N >= 2, got {truncation}")));
    }
    let table = build_prime_table(truncation)?;
    let n = truncation as usize;
    let mut psi = vec![0.0f64; n + 1];
    psi[1] = 1.0;
    for m in 2..=n {
        let p = table.smallest_prime_factor(m as u64).expect("m in table") as usize;
        psi[m] = lambda * (p as f64).ln() / p as f64 * psi[m / p];
    }
    let dense: Vec<Complex64> = psi
        .iter()
        .enumerate()
        .map(|(m, &v)| if m < 2 { Complex64::new(0.0, 0.0) } else { Complex64::new(v / (m as f64).ln(), 0.0) })
        .collect();
    Ok(DirichletPolynomial::from_dense(truncation, &dense))
}

/// g = Σ_j c_j p_j^{-s} on the given primes.
pub fn linear_symbol(prime_coefficients: &[(u64, Complex64)], truncation: u64) -> Result<DirichletPolynomial> {
    for &(p, _) in prime_coefficients {
        if Factorization::by_trial_division(p).map_or(true, |f| f.big_omega() != 1) {
            return Err(Error::NotPrime(p));
        }
    }
    DirichletPolynomial::from_terms(truncation, prime_coefficients.iter().copied())
}

/// Symbol supported on pairwise coprime indices n_j ≥ 2.
pub fn coprime_symbol(indices: &[u64], coefficients: &[Complex64], truncation: u64) -> Result<DirichletPolynomial> {
    if indices.len() != coefficients.len() {
        return Err(invalid(format!("{} indices but {} coefficients", indices.len(), coefficients.len())));
    }
    if let Some(&n) = indices.iter().find(|&&n| n < 2) {
        return Err(invalid(format!("coprime symbol index {n} is below 2")));
    }
    for (i, &a) in indices.iter().enumerate() {
        for &b in &indices[i + 1..] {
            let d = gcd(a, b);
            if d != 1 {
                return Err(Error::NotCoprime { a, b, gcd: d });
            }
        }
    }
    DirichletPolynomial::from_terms(truncation, indices.iter().copied().zip(coefficients.iter().copied()))
}

/// m-homogeneous symbol: b_n = rule(n) on {n ≤ N : Ω(n) = m}.
pub fn homogeneous_symbol(
    m: u32,
    truncation: u64,
    table: &PrimeTable,
    rule: impl Fn(u64) -> Complex64,
) -> Result<DirichletPolynomial> {
    if table.limit() < truncation {
        return Err(Error::OutOfRange { n: truncation, limit: table.limit() });
    }
    let mut terms = Vec::new();
    for n in 2..=truncation {
        if table.factorize(n)?.big_omega() == m {
            terms.push((n, rule(n)));
        }
    }
    DirichletPolynomial::from_terms(truncation, terms)
}

/// Declarative symbol description, as read from scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub family: SymbolFamily,
    pub truncation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolFamily {
    ZetaPrimitive { alpha: f64 },
    LambdaMultiplicative { lambda: f64 },
    Linear { primes: Vec<u64>, coefficients: Vec<f64> },
    /// b_n = n^{-alpha} on Ω(n) = m.
    Homogeneous { m: u32, alpha: f64 },
    Coprime { indices: Vec<u64>, coefficients: Vec<f64> },
}

impl SymbolSpec {
    pub fn build(&self) -> Result<DirichletPolynomial> {
        let n = self.truncation;
        let real = |c: &[f64]| c.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
        match &self.family {
            SymbolFamily::ZetaPrimitive { alpha } => zeta_primitive_symbol(*alpha, n),
            SymbolFamily::LambdaMultiplicative { lambda } => lambda_symbol(*lambda, n),
            SymbolFamily::Linear { primes, coefficients } => {
                if primes.len() != coefficients.len() {
                    return Err(invalid(format!("{} primes but {} coefficients", primes.len(), coefficients.len())));
                }
                let pairs: Vec<_> = primes.iter().copied().zip(real(coefficients)).collect();
                linear_symbol(&pairs, n)
            }
            SymbolFamily::Homogeneous { m, alpha } => {
                let table = build_prime_table(n.max(1))?;
                homogeneous_symbol(*m, n, &table, |k| Complex64::new((k as f64).powf(-alpha), 0.0))
            }
            SymbolFamily::Coprime { indices, coefficients } => coprime_symbol(indices, &real(coefficients), n),
        }
    }
}

fn check_weight_index(n: u64) -> Result<f64> {
    if n < 2 {
        Err(Error::UndefinedWeight(n))
    } else {
        Ok(n as f64)
    }
}

/// w₂(n) = log n / log₂ n (constant omitted).
pub fn weight_w2(n: u64) -> Result<f64> {
    let x = check_weight_index(n)?;
    Ok(x.ln() / iterated_log(x, 2))
}

/// w_m(n) = n^{(m−2)/m} / (log n)^{m−2}, m ≥ 3.
pub fn weight_wm(n: u64, m: u32) -> Result<f64> {
    if m < 3 {
        return Err(invalid(format!("w_m needs m >= 3, got {m}")));
    }
    let x = check_weight_index(n)?;
    let m = m as f64;
    Ok(x.powf((m - 2.0) / m) / x.ln().powf(m - 2.0))
}

/// n exp(−c √(log n log₂ n)).
pub fn weight_general(n: u64, c: f64) -> Result<f64> {
    let x = check_weight_index(n)?;
    Ok(x * (-c * (x.ln() * iterated_log(x, 2)).sqrt()).exp())
}

/// (Σ |b_n|² w(n))^{1/2} over the support of g.
pub fn weighted_l2_statistic(g: &DirichletPolynomial, weight: impl Fn(u64) -> Result<f64>) -> Result<f64> {
    let mut total = 0.0;
    for &(n, b) in g.terms() {
        total += b.norm_sqr() * weight(n)?;
    }
    Ok(total.sqrt())
}

/// Σ |b_n|² d(n).
pub fn helson_statistic(g: &DirichletPolynomial) -> f64 {
    let top = g.max_index();
    let table = (top >= 2 && top <= SIEVE_STATISTICS_LIMIT).then(|| build_prime_table(top).expect("positive limit"));
    g.terms()
        .iter()
        .map(|&(n, b)| {
            let f = match &table {
                Some(t) => t.factorize(n).expect("n <= limit"),
                None => Factorization::by_trial_division(n).expect("n >= 1"),
            };
            b.norm_sqr() * f.divisor_count() as f64
        })
        .sum()
}

/// Sharpness symbol for the w₂ condition:
/// g = Σ_{x/2<p≤x} (log₂(pq))^{1+ε/2}/p · (pq)^{-s}, with q the least prime
/// above `q_floor` (standing in for a prime q ~ e^x).
pub fn w2_sharpness_symbol(x: u64, epsilon: f64, q_floor: u64) -> Result<(DirichletPolynomial, Vec<u64>, u64)> {
    let primes = primes_in_half_interval(x)?;
    let q = least_prime_above(q_floor.max(x));
    let terms: Vec<(u64, f64)> = primes
        .iter()
        .map(|&p| {
            let n = p * q;
            (n, iterated_log(n as f64, 2).powf(1.0 + epsilon / 2.0) / p as f64)
        })
        .collect();
    let top = terms.iter().map(|&(n, _)| n).max().unwrap_or(1);
    Ok((DirichletPolynomial::from_real_terms(top, terms)?, primes, q))
}

/// Sharpness symbol for the w_m condition:
/// g = Σ_{n ∈ S_x, ω(n)=m} n^{-1+1/m} (log n)^{m−1+ε/2} n^{-s}, where S_x is
/// generated by the primes in (x/2, x].
pub fn wm_sharpness_symbol(m: u32, x: u64, epsilon: f64) -> Result<(DirichletPolynomial, Vec<u64>)> {
    if m < 3 {
        return Err(invalid(format!("w_m sharpness needs m >= 3, got {m}")));
    }
    let primes = primes_in_half_interval(x)?;
    let mut terms = Vec::new();
    let count = primes.len();
    if count >= 64 {
        return Err(Error::SupportTooLarge { size: 1u128 << count.min(127), limit: 1u128 << 63 });
    }
    for mask in 0u64..(1u64 << count) {
        if mask.count_ones() != m {
            continue;
        }
        let n: u64 = (0..count).filter(|&i| mask >> i & 1 == 1).map(|i| primes[i]).product();
        let ln = (n as f64).ln();
        let mf = m as f64;
        terms.push((n, (n as f64).powf(-1.0 + 1.0 / mf) * ln.powf(mf - 1.0 + epsilon / 2.0)));
    }
    let top = terms.iter().map(|&(n, _)| n).max().unwrap_or(1);
    Ok((DirichletPolynomial::from_real_terms(top, terms)?, primes))
}

/// Primes p with x/2 < p ≤ x.
pub fn primes_in_half_interval(x: u64) -> Result<Vec<u64>> {
    if x < 2 {
        return Err(invalid(format!("need x >= 2, got {x}")));
    }
    let table = build_prime_table(x)?;
    Ok(table.primes().iter().copied().filter(|&p| 2 * p > x).collect())
}

pub fn least_prime_above(n: u64) -> u64 {
    let mut q = n + 1;
    while Factorization::by_trial_division(q).map_or(true, |f| f.big_omega() != 1) {
        q += 1;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zeta_primitive_coefficients() {
        let g = zeta_primitive_symbol(1.0, 100).unwrap();
        assert!((g.coefficient(2).re - 0.721348).abs() < 1e-6);
        assert_eq!(g.constant_term(), Complex64::new(0.0, 0.0));
        let g0 = zeta_primitive_symbol(0.0, 100).unwrap();
        assert!((g0.coefficient(17).re - 1.0 / 17f64.ln()).abs() < 1e-15);
        let norm: f64 = (2..=100u64).map(|n| (n as f64).powi(-2) / (n as f64).ln().powi(2)).sum();
        assert!((g.norm_sqr() - norm).abs() < 1e-14);
        assert!(zeta_primitive_symbol(1.0, 1).is_err());
    }

    #[test]
    fn lambda_coefficients() {
        let lambda = 1.3;
        let g = lambda_symbol(lambda, 10_000).unwrap();
        let table = build_prime_table(10_000).unwrap();
        for &p in table.primes() {
            assert!((g.coefficient(p).re - lambda / p as f64).abs() < 1e-15 * lambda);
        }
        assert!((g.coefficient(4).re - lambda * lambda * 2f64.ln() / 8.0).abs() < 1e-15);
        assert!(lambda_symbol(0.0, 100).unwrap().is_zero());
        assert!(lambda_symbol(-1.0, 100).is_err());
        let psi = lambda_psi(lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let (m, n) = (rng.random_range(1..=100u64), rng.random_range(1..=100u64));
            if gcd(m, n) != 1 {
                continue;
            }
            let lhs = psi.at(&table.factorize(m * n).unwrap());
            let rhs = psi.at(&table.factorize(m).unwrap()) * psi.at(&table.factorize(n).unwrap());
            assert!((lhs - rhs).norm() < 1e-15);
            let from_symbol = g.coefficient(m * n).re * ((m * n) as f64).ln();
            if m * n >= 2 {
                assert!((from_symbol - lhs.re).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_and_coprime() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let g = linear_symbol(&[(2, c(0.6)), (3, c(0.8))], 10).unwrap();
        assert!((g.h2_norm() - 1.0).abs() < 1e-15);
        assert!(linear_symbol(&[], 10).unwrap().is_zero());
        assert!(matches!(linear_symbol(&[(4, c(1.0))], 10), Err(Error::NotPrime(4))));
        assert!(g.support().all(|n| Factorization::by_trial_division(n).unwrap().big_omega() == 1));

        assert!(coprime_symbol(&[2, 15, 1001], &[c(1.0); 3], 1001).is_ok());
        assert!(matches!(
            coprime_symbol(&[2, 4], &[c(1.0); 2], 10),
            Err(Error::NotCoprime { a: 2, b: 4, gcd: 2 })
        ));
        assert!(coprime_symbol(&[12], &[c(1.0)], 12).is_ok());
        assert!(coprime_symbol(&[1, 3], &[c(1.0); 2], 12).is_err());
    }

    #[test]
    fn homogeneous_support() {
        let table = build_prime_table(2000).unwrap();
        for m in 1..5 {
            let g = homogeneous_symbol(m, 2000, &table, |n| Complex64::new(1.0 / n as f64, 0.0)).unwrap();
            assert!(g.support().all(|n| table.factorize(n).unwrap().big_omega() == m));
            assert!(g.support_len() > 0);
        }
    }

    #[test]
    fn spec_roundtrip_and_unknown_keys() {
        let text = r#"
truncation = 1024
family = { kind = "linear", primes = [2, 3], coefficients = [0.6, 0.8] }
"#;
        let spec: SymbolSpec = toml::from_str(text).unwrap();
        assert!((spec.build().unwrap().h2_norm() - 1.0).abs() < 1e-15);
        let bad = r#"
truncation = 1024
family = { kind = "linear", primes = [2], coefficients = [1.0], colour = 1 }
"#;
        assert!(toml::from_str::<SymbolSpec>(bad).is_err());
        let bad_top = "truncation = 4\nextra = 1\nfamily = { kind = \"zeta-primitive\", alpha = 1.0 }\n";
        assert!(toml::from_str::<SymbolSpec>(bad_top).is_err());
        let spec = SymbolSpec { family: SymbolFamily::Homogeneous { m: 2, alpha: 0.5 }, truncation: 100 };
        let back: SymbolSpec = toml::from_str(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn weights() {
        assert!((weight_w2(4).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(weight_w2(1).is_err());
        assert!(weight_wm(10, 2).is_err());
        // at m = √(2 log n / log₂ n), w_m(n) = n (log n)² exp(−2√2 √(log n log₂ n))
        for &n in &[1_000u64, 123_457, 10_000_000] {
            let x = n as f64;
            let (l, ll) = (x.ln(), iterated_log(x, 2));
            let m = (2.0 * l / ll).sqrt();
            let lhs = x.powf((m - 2.0) / m) / l.powf(m - 2.0);
            let rhs = x * l * l * (-2.0 * 2f64.sqrt() * (l * ll).sqrt()).exp();
            assert!((lhs - rhs).abs() < 1e-9 * rhs, "n={n}: {lhs} vs {rhs}");
            let general = weight_general(n, 2.0 * 2f64.sqrt()).unwrap();
            assert!((general * l * l - rhs).abs() < 1e-9 * rhs);
        }
        for n in 2..=1_000_000u64 {
            for w in [weight_w2(n).unwrap(), weight_wm(n, 3).unwrap(), weight_wm(n, 5).unwrap(), weight_general(n, 1.5).unwrap()] {
                assert!(w.is_finite() && w > 0.0, "n={n}");
            }
        }
    }

    #[test]
    fn statistics() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let zero = DirichletPolynomial::zero(10);
        assert_eq!(weighted_l2_statistic(&zero, weight_w2).unwrap(), 0.0);
        let single = DirichletPolynomial::from_real_terms(100, [(30, 2.0)]).unwrap();
        let s = weighted_l2_statistic(&single, |n| weight_wm(n, 3)).unwrap();
        assert!((s - 2.0 * weight_wm(30, 3).unwrap().sqrt()).abs() < 1e-14);
        let with_one = DirichletPolynomial::from_real_terms(10, [(1, 1.0)]).unwrap();
        assert!(matches!(weighted_l2_statistic(&with_one, weight_w2), Err(Error::UndefinedWeight(1))));

        let g = coprime_symbol(&[2, 15, 1001], &[c(1.0); 3], 1001).unwrap();
        assert_eq!(helson_statistic(&g), 14.0);
        assert_eq!(helson_statistic(&zero), 0.0);
        assert_eq!(helson_statistic(&DirichletPolynomial::from_real_terms(7, [(7, 1.0)]).unwrap()), 2.0);
        let far = DirichletPolynomial::from_real_terms(u64::MAX, [(1u64 << 40, 1.0)]).unwrap();
        assert_eq!(helson_statistic(&far), 41.0);
    }

    #[test]
    fn helson_trends() {
        let mut prev_half = 0.0;
        let mut prev_one = 0.0;
        let mut one_increments = Vec::new();
        for n in [10_000u64, 100_000, 1_000_000] {
            let half = helson_statistic(&zeta_primitive_symbol(0.5, n).unwrap());
            let one = helson_statistic(&zeta_primitive_symbol(1.0, n).unwrap());
            assert!(half > prev_half + 0.05);
            one_increments.push(one - prev_one);
            prev_half = half;
            prev_one = one;
        }
        assert!(one_increments[2] < 1e-4 && one_increments[2] < one_increments[1]);
    }

    #[test]
    fn sharpness_symbols() {
        let (g, primes, q) = w2_sharpness_symbol(30, 0.5, 27_000).unwrap();
        assert_eq!(primes, vec![17, 19, 23, 29]);
        assert_eq!(q, 27_011);
        assert_eq!(g.support().collect::<Vec<_>>(), primes.iter().map(|p| p * q).collect::<Vec<_>>());
        let (h, primes) = wm_sharpness_symbol(3, 60, 0.5).unwrap();
        assert_eq!(primes.len(), 7);
        assert_eq!(h.support_len(), 35);
        assert!(h.support().all(|n| Factorization::by_trial_division(n).unwrap().big_omega() == 3));
    }
}
