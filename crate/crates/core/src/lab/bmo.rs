//! Mean oscillation of boundary values on vertical segments.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, Provenance};
use crate::dirichlet::{DirichletPolynomial, VerticalLine};
use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;

const PANEL_POINTS: usize = 16;
pub const DEFAULT_POINTS_PER_UNIT: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub center: f64,
    pub length: f64,
    pub points_per_unit: f64,
}

impl IntervalSpec {
    pub fn new(center: f64, length: f64) -> Result<Self> {
        Self::with_density(center, length, DEFAULT_POINTS_PER_UNIT)
    }

    pub fn with_density(center: f64, length: f64, points_per_unit: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() || !center.is_finite() {
            return Err(invalid(format!("degenerate interval: center {center}, length {length}")));
        }
        if !(points_per_unit > 0.0) {
            return Err(invalid(format!("points per unit length must be positive, got {points_per_unit}")));
        }
        Ok(IntervalSpec { center, length, points_per_unit })
    }

    /// At least one 16-point panel; more as length × density grows.
    pub fn panels(&self) -> usize {
        ((self.points_per_unit * self.length / PANEL_POINTS as f64).ceil() as usize).max(1)
    }

    fn nodes(&self, rule: &GaussLegendre) -> Vec<(f64, f64)> {
        let half = 0.5 * self.length;
        rule.composite_points(self.center - half, self.center + half, self.panels())
    }
}

/// (1/|I|) ∫_I |g(σ+it) − mean_I g| dt, with the mean taken by the same rule.
pub fn mean_oscillation(g: &DirichletPolynomial, sigma: f64, interval: &IntervalSpec) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(invalid(format!("abscissa must be nonnegative, got {sigma}")));
    }
    let line = VerticalLine::new(g, sigma);
    Ok(oscillation_on_line(&line, interval, &GaussLegendre::new(PANEL_POINTS)))
}

fn oscillation_on_line(line: &VerticalLine, interval: &IntervalSpec, rule: &GaussLegendre) -> f64 {
    let nodes = interval.nodes(rule);
    let values: Vec<Complex64> = nodes.par_iter().map(|&(t, _)| line.at(t)).collect();
    let total: f64 = nodes.iter().map(|&(_, w)| w).sum();
    let mean: Complex64 = nodes.iter().zip(&values).map(|(&(_, w), &v)| v * w).sum::<Complex64>() / total;
    nodes.iter().zip(&values).map(|(&(_, w), &v)| w * (v - mean).norm()).sum::<f64>() / total
}

/// Per length, the largest oscillation over the given centers: an empirical
/// profile over a finite grid, not the BMO norm.
pub fn bmo_profile(
    g: &DirichletPolynomial,
    sigma: f64,
    lengths: &[f64],
    centers: &[f64],
    points_per_unit: f64,
) -> Result<ExperimentReport> {
    if !(sigma >= 0.0) {
        return Err(invalid(format!("abscissa must be nonnegative, got {sigma}")));
    }
    let line = VerticalLine::new(g, sigma);
    let rule = GaussLegendre::new(PANEL_POINTS);
    let provenance = Provenance { truncations: vec![g.truncation()], ..Default::default() };
    let mut report = ExperimentReport::new("bmo", &["sigma", "length"], &["max_oscillation", "argmax_center"], provenance);
    for &length in lengths {
        let mut best = (0.0f64, f64::NAN);
        for &center in centers {
            let interval = IntervalSpec::with_density(center, length, points_per_unit)?;
            let osc = oscillation_on_line(&line, &interval, &rule);
            if best.1.is_nan() || osc > best.0 {
                best = (osc, center);
            }
        }
        report.push_row(vec![sigma.into(), length.into(), best.0.into(), best.1.into()])?;
    }
    Ok(report)
}

/// Log-spaced lengths 2^{-k}, k = 0..count, and evenly spaced centers.
pub fn default_grid(lengths: usize, centers: usize, t_max: f64) -> (Vec<f64>, Vec<f64>) {
    let ls = (0..lengths).map(|k| 2f64.powi(-(k as i32))).collect();
    let cs = (0..centers).map(|i| t_max * i as f64 / (centers.max(2) - 1) as f64).collect();
    (ls, cs)
}
