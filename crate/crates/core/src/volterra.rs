//! The Volterra operator T_g f = −∫_s^∞ f(w) g′(w) dw on coefficient
//! vectors, its tilde variant, truncated multipliers and finite sections.
//!
//! Symbols are stored as plain coefficients g = Σ b_n n^{-s}; the operator
//! carries the weight log(n/k)/log n, so T_g 1 = g − b_1 exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{multiply, Accumulator, DirichletPolynomial};
use crate::error::{invalid, Error, Result};
use crate::numtheory::{build_prime_table, isqrt, MultiplicativeFunction};
use crate::sparse::{spectral_norm, Scalar, SparseMatrix, ITERATION_CAP};

pub use crate::sparse::SpectralEstimate;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// (T_g f)_n = (1/log n) Σ_{k|n, k<n} a_k b_{n/k} log(n/k), for 2 ≤ n ≤ N.
pub fn apply_volterra(g: &DirichletPolynomial, f: &DirichletPolynomial, truncation: u64) -> DirichletPolynomial {
    volterra_core(g, f, truncation, false)
}

/// T̃_g: as T_g plus the diagonal a_n / log n, i.e. the divisor sum taken
/// over all k | n with the unit weight ψ(1) = 1 at k = n.
pub fn apply_volterra_tilde(g: &DirichletPolynomial, f: &DirichletPolynomial, truncation: u64) -> DirichletPolynomial {
    volterra_core(g, f, truncation, true)
}

fn volterra_core(g: &DirichletPolynomial, f: &DirichletPolynomial, truncation: u64, tilde: bool) -> DirichletPolynomial {
    let weighted: Vec<(u64, Complex64)> =
        g.terms().iter().filter(|&&(m, _)| m >= 2).map(|&(m, b)| (m, b * (m as f64).ln())).collect();
    let g_max = weighted.last().map_or(1, |&(m, _)| m);
    let bound = truncation.min(f.max_index().saturating_mul(g_max));
    let mut acc = Accumulator::new(bound);
    for &(k, a) in f.terms() {
        if tilde && k >= 2 && k <= bound {
            acc.add(k, a);
        }
        for &(m, psi) in &weighted {
            match k.checked_mul(m) {
                Some(n) if n <= bound => acc.add(n, a * psi),
                _ => break,
            }
        }
    }
    acc.finish(truncation, |n, c| if n < 2 { ZERO } else { c / (n as f64).ln() })
}

/// M_{h,x} f: the Dirichlet product h·f with every index above x dropped.
pub fn truncated_multiplier(h: &DirichletPolynomial, x: u64, f: &DirichletPolynomial) -> DirichletPolynomial {
    multiply(h, f, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionKind {
    /// T_g on span{n^{-s} : n ≤ N}.
    Volterra,
    /// T̃_g on the same span.
    VolterraTilde,
    /// M_{h,N}: rows and columns n ≤ N, entry (n, k) = c_{n/k}.
    Multiplier,
}

/// Finite section of T_g, T̃_g or M_{h,x}; row and column n hold the basis
/// vector n^{-s}.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSectionMatrix<T = Complex64> {
    dimension: u64,
    kind: SectionKind,
    matrix: SparseMatrix<T>,
}

/// Builds the N-section. Entries are generated divisor-first: for every
/// support index m of the symbol, the multiples n = km ≤ N.
pub fn build_finite_section<T: Scalar>(
    g: &DirichletPolynomial,
    dimension: u64,
    kind: SectionKind,
) -> Result<FiniteSectionMatrix<T>> {
    if dimension == 0 {
        return Err(invalid("finite section needs N >= 1"));
    }
    if dimension > u32::MAX as u64 {
        return Err(invalid(format!("section dimension {dimension} exceeds u32 range")));
    }
    let mut weights: Vec<(u64, T)> = Vec::new();
    for &(m, b) in g.terms() {
        if m > dimension || (kind != SectionKind::Multiplier && m < 2) {
            continue;
        }
        let w = match kind {
            SectionKind::Multiplier => b,
            _ => b * (m as f64).ln(),
        };
        weights.push((m, T::from_complex(w).ok_or(Error::ComplexEntry(m))?));
    }
    let n = dimension as usize;
    let logs: Vec<f64> = if kind == SectionKind::Multiplier {
        Vec::new()
    } else {
        (0..=n).map(|i| (i as f64).ln()).collect()
    };
    let matrix = SparseMatrix::from_generator(n, n, |emit| {
        for &(m, w) in &weights {
            let m = m as usize;
            for k in 1..=n / m {
                let row = k * m;
                let value = match kind {
                    SectionKind::Multiplier => w,
                    _ => w.scale(1.0 / logs[row]),
                };
                emit(row - 1, k - 1, value);
            }
        }
        if kind == SectionKind::VolterraTilde {
            for row in 2..=n {
                emit(row - 1, row - 1, T::from_complex(ONE).expect("1 is real").scale(1.0 / logs[row]));
            }
        }
    });
    Ok(FiniteSectionMatrix { dimension, kind, matrix })
}

impl<T: Scalar> FiniteSectionMatrix<T> {
    pub fn dimension(&self) -> u64 {
        self.dimension
    }

    pub fn kind(&self) -> SectionKind {
        self.kind
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn sparse(&self) -> &SparseMatrix<T> {
        &self.matrix
    }

    /// Entries as (row n, column k, value) with 1-based indices.
    pub fn entries(&self) -> impl Iterator<Item = (u64, u64, T)> + '_ {
        self.matrix.entries().map(|(r, c, v)| (r as u64 + 1, c as u64 + 1, v))
    }

    /// Euclidean norm of column k (1-based).
    pub fn column_norm(&self, k: u64) -> f64 {
        self.matrix.column_norm(k as usize - 1)
    }

    /// Matrix–vector product on coefficient vectors; coefficients of f
    /// beyond the dimension are ignored.
    pub fn apply(&self, f: &DirichletPolynomial) -> Result<DirichletPolynomial> {
        let mut x = vec![T::zero(); self.dimension as usize];
        for &(n, a) in f.terms() {
            if n <= self.dimension {
                x[n as usize - 1] = T::from_complex(a).ok_or(Error::ComplexEntry(n))?;
            }
        }
        let y = self.matrix.mul_vec(&x);
        let terms = y.into_iter().enumerate().map(|(i, v)| (i as u64 + 1, v.to_complex()));
        DirichletPolynomial::from_terms(self.dimension, terms)
    }
}

/// Largest singular value of the section. Finite-section norms are lower
/// bounds for the norm of the operator on H².
pub fn operator_norm<T: Scalar>(m: &FiniteSectionMatrix<T>, tol: f64, seed: u64) -> Result<SpectralEstimate> {
    spectral_norm(&m.matrix, tol, seed, ITERATION_CAP)
}

/// ‖T_g e_n‖ = (Σ_{m≥2} |b_m|² (log m)² / (log mn)²)^{1/2}, untruncated.
pub fn column_norm(g: &DirichletPolynomial, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    let ln_n = (n as f64).ln();
    Ok(g.terms()
        .iter()
        .filter(|&&(m, _)| m >= 2)
        .map(|&(m, b)| {
            let ln_m = (m as f64).ln();
            b.norm_sqr() * (ln_m / (ln_m + ln_n)).powi(2)
        })
        .sum::<f64>()
        .sqrt())
}

/// Σ_{n≤N} ‖T_g e_n‖^p, a lower bound for the p-th power of the S_p norm.
pub fn schatten_partial_sum(g: &DirichletPolynomial, truncation: u64, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(invalid(format!("Schatten exponent must be at least 2, got {p}")));
    }
    if truncation < 2 {
        return Err(invalid(format!("Schatten partial sum needs N >= 2, got {truncation}")));
    }
    let mut total = 0.0;
    for n in 1..=truncation {
        total += column_norm(g, n)?.powf(p);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichBounds {
    /// ¾ Σ_k 4^{-k} ‖M_{g′, e^{2^k}} f‖².
    pub lower: f64,
    /// ‖T_g f‖².
    pub middle: f64,
    /// 4 Σ_k 4^{-k} ‖M_{g′, e^{2^k}} f‖².
    pub upper: f64,
}

impl SandwichBounds {
    pub fn holds(&self) -> bool {
        self.lower <= self.middle && self.middle <= self.upper
    }
}

/// Evaluates both sides of the dyadic comparison between ‖T_g f‖² and the
/// truncated multipliers M_{g′,x} at x = e^{2^k}. Once x exceeds every
/// product index the remaining k-sum is geometric and is added in closed form.
pub fn dyadic_sandwich_check(g: &DirichletPolynomial, f: &DirichletPolynomial) -> SandwichBounds {
    let top = f.max_index().saturating_mul(g.max_index()).max(1);
    let middle = apply_volterra(g, f, top).norm_sqr();
    let g_prime = g.derivative();
    let mut sum = 0.0;
    let mut k = 0i32;
    loop {
        let x = (2f64.powi(k)).exp();
        let weight = 4f64.powi(-k);
        if x >= top as f64 {
            let full = truncated_multiplier(&g_prime, top, f).norm_sqr();
            sum += full * weight * 4.0 / 3.0;
            break;
        }
        sum += weight * truncated_multiplier(&g_prime, x.floor() as u64, f).norm_sqr();
        k += 1;
    }
    SandwichBounds { lower: 0.75 * sum, middle, upper: 4.0 * sum }
}

/// H_g(f, h) = ⟨fh, g⟩. The product fh is formed without truncation, so
/// the value is exact for finitely supported inputs.
pub fn hankel_form(g: &DirichletPolynomial, f: &DirichletPolynomial, h: &DirichletPolynomial) -> Complex64 {
    let top = f.max_index().saturating_mul(h.max_index()).max(1);
    multiply(f, h, top).inner_product(g)
}

/// ‖M_{h,x} f‖ for the multiplier h = Σ_{n≥2} ψ(n) n^{-s} with ψ
/// multiplicative (so h = −g′ for g = Σ ψ(n)/log n · n^{-s}). The output is
/// produced in segments of indices, with ψ evaluated by a segmented sieve,
/// so x can be far beyond what a stored symbol allows.
pub fn multiplicative_multiplier_norm(psi: &MultiplicativeFunction, f: &DirichletPolynomial, x: u64) -> Result<f64> {
    const SEGMENT: u64 = 1 << 16;
    if x == 0 {
        return Err(invalid("multiplier truncation must be at least 1"));
    }
    let sieve_limit = (isqrt(x) + 1).max(2);
    let table = build_prime_table(sieve_limit)?;
    let primes = table.primes();
    let mut total = 0.0;
    let mut lo = 1u64;
    let mut out = vec![ZERO; SEGMENT as usize];
    while lo <= x {
        let hi = (lo + SEGMENT).min(x + 1);
        out[..(hi - lo) as usize].iter_mut().for_each(|v| *v = ZERO);
        for &(j, a) in f.terms() {
            let k_lo = lo.div_ceil(j).max(2);
            let k_hi = (hi - 1) / j;
            if k_lo > k_hi {
                continue;
            }
            let values = psi.evaluate_range(k_lo, k_hi + 1, primes)?;
            for (i, v) in values.into_iter().enumerate() {
                let n = (k_lo + i as u64) * j;
                out[(n - lo) as usize] += a * v;
            }
        }
        total += out[..(hi - lo) as usize].iter().map(|v| v.norm_sqr()).sum::<f64>();
        lo = hi;
    }
    Ok(total.sqrt())
}
