//! Gauss–Legendre rules: fixed composite panels and adaptive bisection.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// n-point rule on [-1, 1]; nodes from Newton's method on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_a^b f with this rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(mid + half * x)).sum::<f64>()
    }

    /// Physical nodes and weights of `panels` equal panels on [a, b].
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for k in 0..panels {
            let lo = a + k as f64 * h;
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
            }
        }
        out
    }

    pub fn composite(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        self.composite_points(a, b, panels).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive bisection: a panel is accepted when the 10-point rule on it
/// agrees with the sum over its two halves to within its share of `tol`,
/// or to within rounding of the panel value.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Integral {
    integrate_adaptive_noisy(f, a, b, tol, 64.0 * f64::EPSILON)
}

/// As `integrate_adaptive`, for integrands known only to relative accuracy
/// `noise`: a panel is also accepted once its two estimates agree to that
/// relative accuracy.
pub fn integrate_adaptive_noisy(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, noise: f64) -> Integral {
    let rule = GaussLegendre::new(10);
    let mut evaluations = rule.nodes.len();
    let whole = rule.integrate(&f, a, b);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut stack = vec![(a, b, whole, tol, 0u32)];
    while let Some((lo, hi, coarse, local_tol, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&f, lo, mid);
        let right = rule.integrate(&f, mid, hi);
        evaluations += 2 * rule.nodes.len();
        let fine = left + right;
        let diff = (fine - coarse).abs();
        if diff <= local_tol.max(noise * fine.abs()) || depth >= 40 {
            value += fine;
            error += diff;
        } else {
            stack.push((lo, mid, left, 0.5 * local_tol, depth + 1));
            stack.push((mid, hi, right, 0.5 * local_tol, depth + 1));
        }
    }
    Integral { value, error_estimate: error, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_on_polynomials() {
        for n in [1usize, 2, 5, 10, 20] {
            let rule = GaussLegendre::new(n);
            assert!((rule.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx = rule.integrate(|x| x.powi(deg as i32), -1.0, 1.0);
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn known_nodes() {
        let rule = GaussLegendre::new(2);
        assert!((rule.nodes()[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let rule = GaussLegendre::new(3);
        assert!(rule.nodes()[1].abs() < 1e-15);
        assert!((rule.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn composite_and_adaptive() {
        let rule = GaussLegendre::new(10);
        let v = rule.composite(f64::sin, 0.0, 20.0, 8);
        assert!((v - (1.0 - 20f64.cos())).abs() < 1e-12);
        let r = integrate_adaptive(|x| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-11);
        let r = integrate_adaptive(|x| x * (-3.0 * x).exp(), 0.0, 30.0, 1e-14);
        assert!((r.value - 1.0 / 9.0).abs() < 1e-13);
    }
}
