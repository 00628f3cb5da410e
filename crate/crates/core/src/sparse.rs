//! Compressed sparse rows with a stored transpose, and power iteration for
//! the largest singular value.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Field of matrix entries: `f64` for real symbols, `Complex64` otherwise.
pub trait Scalar:
    Copy + Send + Sync + Debug + PartialEq + Add<Output = Self> + AddAssign + Mul<Output = Self> + 'static
{
    fn zero() -> Self;
    fn conj(self) -> Self;
    fn abs_sqr(self) -> f64;
    fn scale(self, s: f64) -> Self;
    /// `None` when a complex value has no representation in `Self`.
    fn from_complex(z: Complex64) -> Option<Self>;
    fn to_complex(self) -> Complex64;
    fn random_start(rng: &mut ChaCha8Rng) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn conj(self) -> Self {
        self
    }
    fn abs_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_complex(z: Complex64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn random_start(rng: &mut ChaCha8Rng) -> Self {
        rng.random::<f64>()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs_sqr(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_complex(z: Complex64) -> Option<Self> {
        Some(z)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn random_start(rng: &mut ChaCha8Rng) -> Self {
        Complex64::new(rng.random::<f64>(), rng.random::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Csr<T> {
    ptr: Vec<usize>,
    idx: Vec<u32>,
    values: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    /// Two passes over the entry generator: count per row, then fill.
    fn build(rows: usize, visit: &dyn Fn(&mut dyn FnMut(usize, usize, T))) -> Self {
        let mut ptr = vec![0usize; rows + 1];
        visit(&mut |r, _, _| ptr[r + 1] += 1);
        for i in 0..rows {
            ptr[i + 1] += ptr[i];
        }
        let nnz = ptr[rows];
        let mut idx = vec![0u32; nnz];
        let mut values = vec![T::zero(); nnz];
        let mut cursor = ptr.clone();
        visit(&mut |r, c, v| {
            let at = cursor[r];
            idx[at] = c as u32;
            values[at] = v;
            cursor[r] += 1;
        });
        Csr { ptr, idx, values }
    }

    fn multiply_into(&self, x: &[T], y: &mut [T], conjugate: bool) {
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let mut acc = T::zero();
            for at in self.ptr[r]..self.ptr[r + 1] {
                let v = if conjugate { self.values[at].conj() } else { self.values[at] };
                acc += v * x[self.idx[at] as usize];
            }
            *out = acc;
        });
    }
}

/// Sparse matrix with 0-based indices; the transpose is stored alongside so
/// that both M and M* are row-parallel products.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T = Complex64> {
    rows: usize,
    cols: usize,
    by_row: Csr<T>,
    by_col: Csr<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// `visit` must emit the same entries, in the same order, on every call.
    /// Entries with equal (row, col) are summed by the products.
    pub fn from_generator(rows: usize, cols: usize, visit: impl Fn(&mut dyn FnMut(usize, usize, T))) -> Self {
        assert!(cols <= u32::MAX as usize + 1 && rows <= u32::MAX as usize + 1);
        let by_row = Csr::build(rows, &|emit: &mut dyn FnMut(usize, usize, T)| visit(emit));
        let by_col = Csr::build(cols, &|emit: &mut dyn FnMut(usize, usize, T)| visit(&mut |r, c, v| emit(c, r, v)));
        SparseMatrix { rows, cols, by_row, by_col }
    }

    pub fn from_triplets(rows: usize, cols: usize, entries: &[(usize, usize, T)]) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(invalid(format!("entry ({r}, {c}) outside {rows}x{cols}")));
        }
        Ok(Self::from_generator(rows, cols, |emit| {
            for &(r, c, v) in entries {
                emit(r, c, v);
            }
        }))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.by_row.values.len()
    }

    /// (row, col, value) in row-major storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.by_row.ptr[r]..self.by_row.ptr[r + 1]).map(move |at| (r, self.by_row.idx[at] as usize, self.by_row.values[at]))
        })
    }

    /// Euclidean norm of column `c`.
    pub fn column_norm(&self, c: usize) -> f64 {
        let range = self.by_col.ptr[c]..self.by_col.ptr[c + 1];
        self.by_col.values[range].iter().map(|v| v.abs_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![T::zero(); self.rows];
        self.by_row.multiply_into(x, &mut y, false);
        y
    }

    /// M* x.
    pub fn adjoint_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![T::zero(); self.cols];
        self.by_col.multiply_into(x, &mut y, true);
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Relative change of the estimate in the final iteration.
    pub residual: f64,
    pub seed: u64,
    pub converged: bool,
}

pub const ITERATION_CAP: usize = 10_000;

fn norm_sqr<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.abs_sqr()).sum()
}

/// Largest singular value by power iteration on M*M from a seeded uniform
/// start, stopping once the relative change drops below `tol`.
pub fn spectral_norm<T: Scalar>(m: &SparseMatrix<T>, tol: f64, seed: u64, cap: usize) -> Result<SpectralEstimate> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<T> = (0..m.cols()).map(|_| T::random_start(&mut rng)).collect();
    let mut estimate = SpectralEstimate { value: 0.0, iterations: 0, residual: 0.0, seed, converged: true };
    let start = norm_sqr(&v).sqrt();
    if start == 0.0 || m.nnz() == 0 {
        return Ok(estimate);
    }
    v.iter_mut().for_each(|x| *x = x.scale(1.0 / start));
    let mut previous = 0.0;
    for it in 1..=cap {
        let w = m.mul_vec(&v);
        let value = norm_sqr(&w).sqrt();
        let u = m.adjoint_mul_vec(&w);
        let un = norm_sqr(&u).sqrt();
        let residual = if value > 0.0 { (value - previous).abs() / value } else { 0.0 };
        estimate = SpectralEstimate { value, iterations: it, residual, seed, converged: false };
        if un == 0.0 || value == 0.0 {
            // start vector in the kernel; value 0 is exact on this Krylov space
            estimate.converged = true;
            return Ok(estimate);
        }
        if it > 1 && residual < tol {
            estimate.converged = true;
            return Ok(estimate);
        }
        previous = value;
        v = u.into_iter().map(|x| x.scale(1.0 / un)).collect();
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn trivial_norms() {
        let zero = SparseMatrix::<f64>::from_triplets(3, 3, &[]).unwrap();
        assert_eq!(spectral_norm(&zero, 1e-12, 1, ITERATION_CAP).unwrap().value, 0.0);
        let diag = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let est = spectral_norm(&diag, 1e-14, 1, ITERATION_CAP).unwrap();
        assert!(est.converged);
        assert!((est.value - 2.0).abs() < 1e-10);
        assert!(SparseMatrix::<f64>::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
        assert!(spectral_norm(&diag, 0.0, 1, 10).is_err());
    }

    #[test]
    fn matches_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..5 {
            let mut entries = Vec::new();
            for r in 0..50 {
                for c in 0..50 {
                    if rng.random::<f64>() < 0.1 {
                        entries.push((r, c, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
                    }
                }
            }
            let sparse = SparseMatrix::from_triplets(50, 50, &entries).unwrap();
            let mut dense = DMatrix::<nalgebra::Complex<f64>>::zeros(50, 50);
            for &(r, c, v) in &entries {
                dense[(r, c)] += nalgebra::Complex::new(v.re, v.im);
            }
            let sv = dense.singular_values();
            let top = sv.iter().cloned().fold(0.0, f64::max);
            let est = spectral_norm(&sparse, 1e-15, trial, ITERATION_CAP).unwrap();
            assert!((est.value - top).abs() < 1e-8 * top, "{} vs {top} ({} its)", est.value, est.iterations);
        }
    }

    #[test]
    fn products_and_columns() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, -3.0), (1, 2, 4.0)]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, 1.0]);
        assert_eq!(m.adjoint_mul_vec(&[1.0, 2.0]), vec![1.0, -6.0, 10.0]);
        assert!((m.column_norm(2) - 20f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.nnz(), 4);
        let collected: Vec<_> = m.entries().collect();
        assert_eq!(collected, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, -3.0), (1, 2, 4.0)]);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 0, 0.5), (2, 1, 0.9), (2, 2, 0.3)]).unwrap();
        let a = spectral_norm(&m, 1e-9, 7, ITERATION_CAP).unwrap();
        let b = spectral_norm(&m, 1e-9, 7, ITERATION_CAP).unwrap();
        assert_eq!(a, b);
        let capped = spectral_norm(&m, 1e-300, 7, 3).unwrap();
        assert!(!capped.converged);
        assert_eq!(capped.iterations, 3);
    }
}
