//! Carleson-type integrals over the boundary torus: the σ-weighted quarter
//! identity and a seeded Monte Carlo estimate of
//! ∫_{T^d} ∫_0^∞ |f_χ(σ)|^p |g′_χ(σ)|² σ dσ dχ.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletPolynomial;
use crate::error::{invalid, Error, Result};
use crate::numtheory::{first_primes, Factorization};
use crate::quadrature::integrate_adaptive;

/// ∫_0^∞ (log a)² a^{-2σ} σ dσ, which is 1/4 for every a > 1.
pub fn quarter_identity(a: f64, tol: f64) -> Result<f64> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(invalid(format!("quarter identity needs a > 1, got {a}")));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let l = a.ln();
    // ∫_S^∞ l² σ e^{-2lσ} dσ = e^{-2lS}(2lS + 1)/4
    let tail = |s: f64| (-2.0 * l * s).exp() * (2.0 * l * s + 1.0) / 4.0;
    let mut cut = 1.0 / l;
    while tail(cut) > 1e-3 * tol {
        cut *= 2.0;
    }
    Ok(integrate_adaptive(|s| l * l * s * (-2.0 * l * s).exp(), 0.0, cut, 1e-3 * tol).value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Largest σ cutoff used by any sample.
    pub sigma_max: f64,
}

struct Lifted {
    /// (coefficient, log n, exponent vector over the first d primes)
    terms: Vec<(Complex64, f64, Vec<u32>)>,
}

impl Lifted {
    fn new(f: &DirichletPolynomial, primes: &[u64]) -> Result<Self> {
        let mut terms = Vec::with_capacity(f.support_len());
        for &(n, c) in f.terms() {
            let kappa = Factorization::by_trial_division(n)?
                .exponents_over(primes)
                .ok_or(Error::SupportLeak { index: n, d: primes.len() })?;
            terms.push((c, (n as f64).ln(), kappa));
        }
        Ok(Lifted { terms })
    }

    /// Coefficients rotated by χ(n) = e^{2πi⟨κ(n), θ⟩}.
    fn rotated(&self, theta: &[f64]) -> Vec<(Complex64, f64)> {
        self.terms
            .iter()
            .map(|(c, l, kappa)| {
                let phase: f64 = kappa.iter().zip(theta).map(|(&e, &t)| e as f64 * t).sum();
                (c * Complex64::from_polar(1.0, TAU * phase), *l)
            })
            .collect()
    }
}

fn along_ray(terms: &[(Complex64, f64)], sigma: f64) -> Complex64 {
    terms.iter().map(|&(c, l)| c * (-sigma * l).exp()).sum()
}

/// Mean and standard error over `samples` characters. Sample i draws its d
/// phases from ChaCha8 seeded with `seed` on stream i, so every sample is
/// independent of evaluation order. The σ-range is extended until the
/// envelope A^p B² σ 4^{-σ} (A = Σ|a_n|, B = Σ|b_n| log n) leaves a tail
/// below 1e-9 of the sample's value.
pub fn carleson_integral_mc(
    g: &DirichletPolynomial,
    f: &DirichletPolynomial,
    d: usize,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<CarlesonEstimate> {
    if !(p > 0.0) {
        return Err(invalid(format!("exponent p must be positive, got {p}")));
    }
    if samples < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: samples });
    }
    let primes = first_primes(d);
    let lf = Lifted::new(f, &primes)?;
    // g′ has coefficients −b_n log n
    let lg = Lifted::new(&g.derivative(), &primes)?;
    let a: f64 = lf.terms.iter().map(|t| t.0.norm()).sum();
    let b: f64 = lg.terms.iter().map(|t| t.0.norm()).sum();
    let envelope = a.powf(p) * b * b;
    if envelope == 0.0 {
        return Ok(CarlesonEstimate { estimate: 0.0, stderr: 0.0, samples, sigma_max: 0.0 });
    }
    let ln4 = 4f64.ln();
    let envelope_tail = |s: f64| envelope * (-s * ln4).exp() * (s / ln4 + 1.0 / (ln4 * ln4));
    let quad_tol = 1e-10 * envelope;

    let values: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let theta: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let ft = lf.rotated(&theta);
            let gt = lg.rotated(&theta);
            let integrand = |s: f64| along_ray(&ft, s).norm().powf(p) * along_ray(&gt, s).norm_sqr() * s;
            let mut cut = 8.0;
            let mut value = integrate_adaptive(integrand, 0.0, cut, quad_tol).value;
            while envelope_tail(cut) > 1e-9 * value && cut < 4096.0 {
                value += integrate_adaptive(integrand, cut, 2.0 * cut, quad_tol).value;
                cut *= 2.0;
            }
            (value, cut)
        })
        .collect();

    let n = samples as f64;
    let mean = values.iter().map(|v| v.0).sum::<f64>() / n;
    let var = values.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sigma_max = values.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(CarlesonEstimate { estimate: mean, stderr: (var / n).sqrt(), samples, sigma_max })
}
