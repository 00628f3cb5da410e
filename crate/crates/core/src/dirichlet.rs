//! Truncated Dirichlet series Σ_{n≤N} a_n n^{-s} stored as sparse coefficient lists.

use std::collections::HashMap;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense scratch arrays are used for outputs bounded by this index.
const DENSE_LIMIT: u64 = 1 << 22;

/// Coefficients are kept sorted by index, without explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPolynomial {
    truncation: u64,
    terms: Vec<(u64, Complex64)>,
}

impl DirichletPolynomial {
    pub fn zero(truncation: u64) -> Self {
        DirichletPolynomial { truncation, terms: Vec::new() }
    }

    /// The constant series 1 (the vector e_1).
    pub fn one(truncation: u64) -> Self {
        Self::monomial(1, ONE, truncation).expect("1 <= truncation")
    }

    pub fn monomial(n: u64, c: Complex64, truncation: u64) -> Result<Self> {
        Self::from_terms(truncation, [(n, c)])
    }

    /// Builds from `(n, a_n)` pairs; repeated indices are summed.
    pub fn from_terms(truncation: u64, terms: impl IntoIterator<Item = (u64, Complex64)>) -> Result<Self> {
        let mut terms: Vec<(u64, Complex64)> = terms.into_iter().collect();
        for &(n, _) in &terms {
            if n == 0 {
                return Err(Error::ZeroIndex);
            }
            if n > truncation {
                return Err(Error::BeyondTruncation { index: n, truncation });
            }
        }
        terms.sort_by_key(|&(n, _)| n);
        let mut merged: Vec<(u64, Complex64)> = Vec::with_capacity(terms.len());
        for (n, c) in terms {
            match merged.last_mut() {
                Some((m, acc)) if *m == n => *acc += c,
                _ => merged.push((n, c)),
            }
        }
        merged.retain(|&(_, c)| c != ZERO);
        Ok(DirichletPolynomial { truncation, terms: merged })
    }

    pub fn from_real_terms(truncation: u64, terms: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        Self::from_terms(truncation, terms.into_iter().map(|(n, c)| (n, Complex64::new(c, 0.0))))
    }

    /// `coefficients[n]` is a_n; entry 0 is ignored.
    pub(crate) fn from_dense(truncation: u64, coefficients: &[Complex64]) -> Self {
        let terms = coefficients
            .iter()
            .enumerate()
            .skip(1)
            .take(truncation as usize)
            .filter(|(_, c)| **c != ZERO)
            .map(|(n, &c)| (n as u64, c))
            .collect();
        DirichletPolynomial { truncation, terms }
    }

    // Caller guarantees sorted, distinct, nonzero, within truncation.
    pub(crate) fn from_sorted_unchecked(truncation: u64, terms: Vec<(u64, Complex64)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        DirichletPolynomial { truncation, terms }
    }

    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn terms(&self) -> &[(u64, Complex64)] {
        &self.terms
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.terms.iter().map(|&(n, _)| n)
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    /// Largest stored index, 0 for the zero polynomial.
    pub fn max_index(&self) -> u64 {
        self.terms.last().map_or(0, |&(n, _)| n)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, n: u64) -> Complex64 {
        match self.terms.binary_search_by_key(&n, |&(m, _)| m) {
            Ok(i) => self.terms[i].1,
            Err(_) => ZERO,
        }
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coefficient(1)
    }

    /// Same coefficients under a new truncation; indices above it are dropped.
    pub fn with_truncation(&self, truncation: u64) -> Self {
        let terms = self.terms.iter().copied().filter(|&(n, _)| n <= truncation).collect();
        DirichletPolynomial { truncation, terms }
    }

    /// S_M f: keeps n ≤ M (the truncation is unchanged).
    pub fn partial_sum(&self, m: u64) -> Self {
        let terms = self.terms.iter().copied().filter(|&(n, _)| n <= m).collect();
        DirichletPolynomial { truncation: self.truncation, terms }
    }

    /// Drops the constant term.
    pub fn without_constant(&self) -> Self {
        let terms = self.terms.iter().copied().filter(|&(n, _)| n >= 2).collect();
        DirichletPolynomial { truncation: self.truncation, terms }
    }

    /// B_δ f(s) = f(s + δ): a_n ↦ a_n n^{-δ}.
    pub fn horizontal_shift(&self, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(invalid(format!("shift must be nonnegative, got {delta}")));
        }
        Ok(self.map_terms(|n, c| c * (n as f64).powf(-delta)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map_terms(|_, c| c * factor)
    }

    fn map_terms(&self, f: impl Fn(u64, Complex64) -> Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|&(n, c)| (n, f(n, c)))
            .filter(|&(_, c)| c != ZERO)
            .collect();
        DirichletPolynomial { truncation: self.truncation, terms }
    }

    /// αf + βg, truncated at the larger of the two truncations.
    pub fn linear_combination(alpha: Complex64, f: &Self, beta: Complex64, g: &Self) -> Self {
        let truncation = f.truncation.max(g.truncation);
        let terms = f
            .terms
            .iter()
            .map(|&(n, c)| (n, alpha * c))
            .chain(g.terms.iter().map(|&(n, c)| (n, beta * c)));
        Self::from_terms(truncation, terms).expect("indices within both truncations")
    }

    /// Df = f′: a_n ↦ −a_n log n.
    pub fn derivative(&self) -> Self {
        self.map_terms(|n, c| -c * (n as f64).ln())
    }

    /// ∂^{-1} f = −∫_s^∞ f: a_n ↦ −a_n / log n, defined when a_1 = 0.
    pub fn antiderivative(&self) -> Result<Self> {
        let a1 = self.constant_term();
        if a1 != ZERO {
            return Err(Error::NonzeroConstant(a1));
        }
        Ok(self.map_terms(|n, c| -c / (n as f64).ln()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    pub fn h2_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨f, g⟩ = Σ a_n conj(b_n).
    pub fn inner_product(&self, other: &Self) -> Complex64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = ZERO;
        while i < self.terms.len() && j < other.terms.len() {
            let (n, a) = self.terms[i];
            let (m, b) = other.terms[j];
            if n == m {
                acc += a * b.conj();
                i += 1;
                j += 1;
            } else if n < m {
                i += 1;
            } else {
                j += 1;
            }
        }
        acc
    }

    /// f(s) = Σ a_n n^{-s} with compensated summation.
    pub fn evaluate(&self, s: Complex64) -> Complex64 {
        let mut re = NeumaierSum::default();
        let mut im = NeumaierSum::default();
        for &(n, c) in &self.terms {
            let v = c * (-s * (n as f64).ln()).exp();
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.total(), im.total())
    }

    pub fn boundary_samples(&self, sigma: f64, t_values: &[f64]) -> VerticalLineSample {
        let line = VerticalLine::new(self, sigma);
        VerticalLineSample {
            sigma,
            t_values: t_values.to_vec(),
            values: t_values.iter().map(|&t| line.at(t)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut v = vec![ZERO; self.truncation as usize + 1];
        for &(n, c) in &self.terms {
            v[n as usize] = c;
        }
        v
    }

    /// Writes `n,re,im` lines after a header row.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "re", "im"])?;
        for &(n, c) in &self.terms {
            w.write_record([n.to_string(), c.re.to_string(), c.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `n,re,im` format. Without an explicit truncation the
    /// largest index is used.
    pub fn read_csv(reader: impl Read, truncation: Option<u64>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["n", "re", "im"] {
            return Err(Error::Parse(format!("expected header n,re,im, got {:?}", headers)));
        }
        let mut terms = Vec::new();
        for record in r.records() {
            let record = record?;
            let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
            let n: u64 = field(0).parse().map_err(|e| Error::Parse(format!("index `{}`: {e}", field(0))))?;
            let re: f64 = field(1).parse().map_err(|e| Error::Parse(format!("re `{}`: {e}", field(1))))?;
            let im: f64 = field(2).parse().map_err(|e| Error::Parse(format!("im `{}`: {e}", field(2))))?;
            terms.push((n, Complex64::new(re, im)));
        }
        let truncation = truncation.unwrap_or_else(|| terms.iter().map(|&(n, _)| n).max().unwrap_or(1));
        Self::from_terms(truncation, terms)
    }
}

/// Dirichlet convolution (fg)_n = Σ_{k|n} f_k g_{n/k}, dropping n > N.
pub fn multiply(f: &DirichletPolynomial, g: &DirichletPolynomial, truncation: u64) -> DirichletPolynomial {
    let bound = truncation.min(f.max_index().saturating_mul(g.max_index()));
    let mut acc = Accumulator::new(bound);
    for &(k, a) in f.terms() {
        for &(m, b) in g.terms() {
            match k.checked_mul(m) {
                Some(n) if n <= bound => acc.add(n, a * b),
                _ => break,
            }
        }
    }
    acc.finish(truncation, |_, c| c)
}

/// Coefficient sums keyed by index: a dense array for small bounds, a hash
/// map otherwise.
pub(crate) struct Accumulator {
    dense: Vec<Complex64>,
    sparse: HashMap<u64, Complex64>,
    use_dense: bool,
}

impl Accumulator {
    pub(crate) fn new(bound: u64) -> Self {
        let use_dense = bound <= DENSE_LIMIT;
        Accumulator {
            dense: if use_dense { vec![ZERO; bound as usize + 1] } else { Vec::new() },
            sparse: HashMap::new(),
            use_dense,
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, n: u64, c: Complex64) {
        if self.use_dense {
            self.dense[n as usize] += c;
        } else {
            *self.sparse.entry(n).or_insert(ZERO) += c;
        }
    }

    /// Applies `post(n, sum)` to every accumulated index and packs the result.
    pub(crate) fn finish(self, truncation: u64, post: impl Fn(u64, Complex64) -> Complex64) -> DirichletPolynomial {
        let mut terms: Vec<(u64, Complex64)> = if self.use_dense {
            self.dense
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c != ZERO)
                .map(|(n, c)| (n as u64, c))
                .collect()
        } else {
            let mut t: Vec<_> = self.sparse.into_iter().collect();
            t.sort_by_key(|&(n, _)| n);
            t
        };
        for (n, c) in terms.iter_mut() {
            *c = post(*n, *c);
        }
        terms.retain(|&(_, c)| c != ZERO);
        DirichletPolynomial::from_sorted_unchecked(truncation, terms)
    }
}

/// Precomputed a_n n^{-σ} and log n for repeated evaluation along Re s = σ.
#[derive(Debug, Clone)]
pub struct VerticalLine {
    weights: Vec<Complex64>,
    logs: Vec<f64>,
}

impl VerticalLine {
    pub fn new(f: &DirichletPolynomial, sigma: f64) -> Self {
        let logs: Vec<f64> = f.support().map(|n| (n as f64).ln()).collect();
        let weights = f
            .terms()
            .iter()
            .zip(&logs)
            .map(|(&(_, c), &l)| c * (-sigma * l).exp())
            .collect();
        VerticalLine { weights, logs }
    }

    /// f(σ + it), compensated.
    pub fn at(&self, t: f64) -> Complex64 {
        let mut re = NeumaierSum::default();
        let mut im = NeumaierSum::default();
        for (&w, &l) in self.weights.iter().zip(&self.logs) {
            let (s, c) = (t * l).sin_cos();
            let v = w * Complex64::new(c, -s);
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.total(), im.total())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerticalLineSample {
    pub sigma: f64,
    pub t_values: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::Rng;

    /// Random polynomial with `len` distinct indices in 1..=max_index.
    pub(crate) fn random_poly(rng: &mut impl Rng, len: usize, max_index: u64, truncation: u64) -> DirichletPolynomial {
        let mut terms = HashMap::new();
        while terms.len() < len.min(max_index as usize) {
            let n = rng.random_range(1..=max_index);
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            terms.insert(n, c);
        }
        DirichletPolynomial::from_terms(truncation, terms).unwrap()
    }

    pub(crate) fn max_abs_diff(f: &DirichletPolynomial, g: &DirichletPolynomial) -> f64 {
        let n = f.max_index().max(g.max_index());
        (1..=n).map(|k| (f.coefficient(k) - g.coefficient(k)).norm()).fold(0.0, f64::max)
    }
}
