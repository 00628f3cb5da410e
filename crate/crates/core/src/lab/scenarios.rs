//! The named experiments. Each builds a report with one row per grid point
//! and pass/fail checks; rows run in parallel and are assembled in grid
//! order, so a fixed seed and config give identical output.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bmo::{bmo_profile, default_grid};
use super::carleson::{carleson_integral_mc, quarter_identity};
use super::config::*;
use super::fit::{growth_fit, GrowthModel};
use super::report::{Cell, ExperimentReport, Provenance};
use crate::dirichlet::DirichletPolynomial;
use crate::error::{invalid, Result};
use crate::kernels::*;
use crate::numtheory::{build_prime_table, first_primes, iterated_log};
use crate::sparse::{spectral_norm, SpectralEstimate, ITERATION_CAP};
use crate::symbols::*;
use crate::volterra::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    /// Power-iteration tolerance (relative change).
    pub tol: f64,
}

impl RunSettings {
    /// Command-line values override the config file, which overrides the
    /// built-in defaults.
    pub fn resolve(config: &LabConfig, seed: Option<u64>, tol: Option<f64>) -> Self {
        RunSettings {
            seed: seed.or(config.seed).unwrap_or(DEFAULT_SEED),
            tol: tol.or(config.tol).unwrap_or(DEFAULT_TOL),
        }
    }
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { seed: DEFAULT_SEED, tol: DEFAULT_TOL }
    }
}

pub fn run_scenario(scenario: Scenario, config: &LabConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    match scenario {
        Scenario::LinearNorm => linear_norm(&config.linear_norm, settings),
        Scenario::CoprimeNorm => coprime_norm(&config.coprime_norm, settings),
        Scenario::ZetaGrowth => zeta_growth(&config.zeta_growth, settings),
        Scenario::LambdaThreshold => lambda_threshold(&config.lambda_threshold, settings),
        Scenario::GalLower => gal_lower(&config.gal_lower, settings),
        Scenario::HomogWeights => homog_weights(&config.homog_weights, settings),
        Scenario::GeneralWeight => general_weight(&config.general_weight, settings),
        Scenario::Schatten => schatten(&config.schatten, settings),
        Scenario::SmoothKernel => smooth_kernel_scenario(&config.smooth_kernel, settings),
        Scenario::Bmo => bmo(&config.bmo, settings),
        Scenario::Carleson => carleson(&config.carleson, settings),
        Scenario::QuarterIdentity => quarter(&config.quarter_identity, settings),
        Scenario::Sandwich => sandwich(&config.sandwich, settings),
    }
}

/// Independent generator for grid point `stream`.
fn row_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn provenance(settings: &RunSettings, truncations: Vec<u64>) -> Provenance {
    Provenance { seed: settings.seed, tolerance: settings.tol, truncations, notes: Vec::new() }
}

fn random_unit_complex(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    let raw: Vec<Complex64> =
        (0..len).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|c| c / norm).collect()
}

fn is_real(g: &DirichletPolynomial) -> bool {
    g.terms().iter().all(|&(_, c)| c.im == 0.0)
}

/// Largest singular value of the N-section, in real arithmetic when the
/// symbol is real.
pub fn section_norm(
    g: &DirichletPolynomial,
    dimension: u64,
    kind: SectionKind,
    tol: f64,
    seed: u64,
) -> Result<SpectralEstimate> {
    if is_real(g) {
        spectral_norm(build_finite_section::<f64>(g, dimension, kind)?.sparse(), tol, seed, ITERATION_CAP)
    } else {
        spectral_norm(build_finite_section::<Complex64>(g, dimension, kind)?.sparse(), tol, seed, ITERATION_CAP)
    }
}

fn all_rows(report: &mut ExperimentReport, rows: Vec<Vec<Cell>>) -> Result<()> {
    for row in rows {
        report.push_row(row)?;
    }
    Ok(())
}

fn norm_rows(
    tasks: &[(String, DirichletPolynomial, u64)],
    settings: &RunSettings,
) -> Result<Vec<(String, u64, f64, SpectralEstimate)>> {
    tasks
        .par_iter()
        .enumerate()
        .map(|(i, (label, g, n))| {
            let est = section_norm(g, *n, SectionKind::Volterra, settings.tol, settings.seed.wrapping_add(i as u64))?;
            Ok((label.clone(), *n, g.h2_norm(), est))
        })
        .collect()
}

fn norm_equality_report(
    name: &str,
    tasks: Vec<(String, DirichletPolynomial, u64)>,
    tolerance: f64,
    settings: &RunSettings,
    mut prov: Provenance,
    skipped: usize,
) -> Result<ExperimentReport> {
    if skipped > 0 {
        prov.notes.push(format!("{skipped} (symbol, section) pairs skipped: section smaller than the largest index"));
    }
    prov.notes.push("finite-section norms are lower bounds for the operator norm on H^2".into());
    let mut report = ExperimentReport::new(
        name,
        &["symbol", "section"],
        &["h2_norm", "section_norm", "relative_error", "iterations", "converged"],
        prov,
    );
    let results = norm_rows(&tasks, settings)?;
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for (label, n, h2, est) in results {
        let rel = (est.value - h2).abs() / h2;
        worst = worst.max(rel);
        unconverged += usize::from(!est.converged);
        report.push_row(vec![
            label.into(),
            n.into(),
            h2.into(),
            est.value.into(),
            rel.into(),
            est.iterations.into(),
            est.converged.into(),
        ])?;
    }
    report.check("section norm equals H2 norm", worst <= tolerance, format!("max relative error {worst:e}, tolerance {tolerance:e}"));
    report.check("power iterations converged", unconverged == 0, format!("{unconverged} rows hit the iteration cap"));
    Ok(report)
}

fn linear_norm(cfg: &LinearNormConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let table = build_prime_table(cfg.max_prime.max(2))?;
    let primes = table.primes();
    let mut symbols: Vec<(String, DirichletPolynomial)> = Vec::new();
    for i in 0..cfg.random_symbols {
        let mut rng = row_rng(settings.seed, i as u64);
        let k = cfg.primes_per_symbol.min(primes.len());
        let mut chosen: Vec<u64> = sample(&mut rng, primes.len(), k).into_iter().map(|j| primes[j]).collect();
        chosen.sort_unstable();
        let coefficients = random_unit_complex(&mut rng, k);
        let pairs: Vec<_> = chosen.into_iter().zip(coefficients).collect();
        symbols.push((format!("random-{i}"), linear_symbol(&pairs, cfg.max_prime)?));
    }
    for (i, s) in cfg.symbols.iter().enumerate() {
        if s.indices.len() != s.coefficients.len() {
            return Err(invalid(format!("linear symbol {i}: {} primes, {} coefficients", s.indices.len(), s.coefficients.len())));
        }
        let pairs: Vec<_> = s.indices.iter().zip(&s.coefficients).map(|(&p, &c)| (p, Complex64::new(c, 0.0))).collect();
        let top = s.indices.iter().copied().max().unwrap_or(1);
        symbols.push((format!("config-{i}"), linear_symbol(&pairs, top)?));
    }
    let (tasks, skipped) = section_tasks(&symbols, &cfg.sections);
    norm_equality_report("linear-norm", tasks, cfg.tolerance, settings, provenance(settings, cfg.sections.clone()), skipped)
}

fn section_tasks(symbols: &[(String, DirichletPolynomial)], sections: &[u64]) -> (Vec<(String, DirichletPolynomial, u64)>, usize) {
    let mut tasks = Vec::new();
    let mut skipped = 0;
    for (label, g) in symbols {
        for &n in sections {
            if n < g.max_index() {
                skipped += 1;
            } else {
                tasks.push((label.clone(), g.clone(), n));
            }
        }
    }
    (tasks, skipped)
}

fn coprime_norm(cfg: &CoprimeNormConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let mut symbols = Vec::new();
    for (s, support) in cfg.supports.iter().enumerate() {
        let top = support.iter().copied().max().unwrap_or(1);
        let label = support.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
        for d in 0..cfg.random_draws {
            let mut rng = row_rng(settings.seed, ((s as u64) << 32) | d as u64);
            let coefficients = random_unit_complex(&mut rng, support.len());
            symbols.push((format!("{label}#{d}"), coprime_symbol(support, &coefficients, top)?));
        }
    }
    let (tasks, skipped) = section_tasks(&symbols, &cfg.sections);
    norm_equality_report("coprime-norm", tasks, cfg.tolerance, settings, provenance(settings, cfg.sections.clone()), skipped)
}

fn zeta_growth(cfg: &ZetaGrowthConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let mut prov = provenance(settings, Vec::new());
    prov.notes.push("squarefree quotient keeps only outputs at squarefree products of the first J primes".into());
    prov.notes.push("full quotients use the untruncated symbol via Euler products".into());
    let mut report = ExperimentReport::new(
        "zeta-growth",
        &["alpha", "J"],
        &["squarefree_quotient", "full_tilde_quotient", "full_plain_quotient"],
        prov,
    );
    let grid: Vec<(f64, usize)> = cfg.alphas.iter().flat_map(|&a| (1..=cfg.j_max).map(move |j| (a, j))).collect();
    let rows: Vec<Vec<Cell>> = grid
        .par_iter()
        .map(|&(alpha, j)| {
            let sq = zeta_primitive_squarefree_quotient(alpha, j)?;
            let full = if alpha >= 0.5 {
                zeta_primitive_product_quotient(alpha, j)?
            } else {
                RayleighQuotient { tilde: f64::NAN, plain: f64::NAN }
            };
            Ok(vec![alpha.into(), j.into(), sq.into(), full.tilde.into(), full.plain.into()])
        })
        .collect::<Result<_>>()?;
    all_rows(&mut report, rows)?;

    let mut worst = 0.0f64;
    for &alpha in &cfg.alphas {
        for j in 1..=cfg.cross_check_j.min(cfg.j_max) {
            let f = squarefree_product_test(j, u64::MAX)?;
            let top = f.max_index();
            let g = zeta_primitive_symbol(alpha, top.max(2))?;
            let out = apply_volterra_tilde(&g, &f, top);
            let restricted: f64 = f.support().map(|n| out.coefficient(n).norm_sqr()).sum();
            let direct = (restricted / f.norm_sqr()).sqrt();
            let enumerated = zeta_primitive_squarefree_quotient(alpha, j)?;
            worst = worst.max((direct - enumerated).abs() / direct);
        }
    }
    report.check(
        "subset enumeration matches operator",
        worst < 1e-10,
        format!("max relative difference {worst:e} for J <= {}", cfg.cross_check_j),
    );

    let q = |a: f64, j: usize| zeta_primitive_squarefree_quotient(a, j);
    let (lo, hi) = (q(cfg.growth_alpha, cfg.growth_from)?, q(cfg.growth_alpha, cfg.growth_to)?);
    let full_factor = zeta_primitive_product_quotient(cfg.growth_alpha, cfg.growth_to)?.tilde
        / zeta_primitive_product_quotient(cfg.growth_alpha, cfg.growth_from)?.tilde;
    report.check(
        format!("alpha={} quotient grows by >= {}", cfg.growth_alpha, cfg.growth_factor),
        hi / lo >= cfg.growth_factor,
        format!(
            "J={}: {lo:.6}, J={}: {hi:.6}, factor {:.4} (full tilde quotient factor {full_factor:.4})",
            cfg.growth_from,
            cfg.growth_to,
            hi / lo
        ),
    );
    let flat: Vec<f64> = (cfg.flat_from..=cfg.flat_to).map(|j| q(cfg.flat_alpha, j)).collect::<Result<_>>()?;
    let (mn, mx) = min_max(&flat);
    report.check(
        format!("alpha={} quotient varies by < {}", cfg.flat_alpha, cfg.flat_factor),
        mx / mn < cfg.flat_factor,
        format!("J in {}..={}: min {mn:.6}, max {mx:.6}, factor {:.4}", cfg.flat_from, cfg.flat_to, mx / mn),
    );
    Ok(report)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn lambda_threshold(cfg: &LambdaThresholdConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let mut prov = provenance(settings, cfg.xs.clone());
    prov.tolerance = cfg.power_tol;
    prov.notes.push("norms of x-sections of the truncated multiplier M_{g',x}".into());
    let mut report = ExperimentReport::new(
        "lambda-threshold",
        &["lambda", "x"],
        &["multiplier_norm", "iterations", "converged", "fitted_exponent", "r_squared"],
        prov,
    );
    for (li, &lambda) in cfg.lambdas.iter().enumerate() {
        let mut ests = Vec::new();
        for (xi, &x) in cfg.xs.iter().enumerate() {
            let h = lambda_symbol(lambda, x.max(2))?.derivative();
            let seed = settings.seed.wrapping_add((li * cfg.xs.len() + xi) as u64);
            ests.push(section_norm(&h, x, SectionKind::Multiplier, cfg.power_tol, seed)?);
        }
        let xs: Vec<f64> = cfg.xs.iter().map(|&x| x as f64).collect();
        let ys: Vec<f64> = ests.iter().map(|e| e.value).collect();
        let fit = growth_fit(&xs, &ys, GrowthModel::PowerOfLog).ok();
        let (exponent, r2) = fit.map_or((f64::NAN, f64::NAN), |f| (f.exponent, f.r_squared));
        for (&x, est) in cfg.xs.iter().zip(&ests) {
            report.push_row(vec![
                lambda.into(),
                x.into(),
                est.value.into(),
                est.iterations.into(),
                est.converged.into(),
                exponent.into(),
                r2.into(),
            ])?;
        }
        if cfg.xs.len() >= 3 {
            report.check(
                format!("lambda={lambda} fitted exponent within {}", cfg.exponent_tolerance),
                (exponent - lambda).abs() <= cfg.exponent_tolerance,
                format!("exponent {exponent:.4}, r^2 {r2:.5}"),
            );
        }
        let unconverged = ests.iter().filter(|e| !e.converged).count();
        report.check(format!("lambda={lambda} power iterations converged"), unconverged == 0, format!("{unconverged} rows hit the cap"));
    }
    Ok(report)
}

fn gal_lower(cfg: &GalLowerConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let mut prov = provenance(settings, cfg.xs.iter().map(|&x| x as u64).collect());
    prov.notes.push("Gal vectors are normalized to unit norm; only the multiplier truncation grows".into());
    let mut report = ExperimentReport::new("gal-lower", &["lambda", "x"], &["support_size", "ratio"], prov);
    let psi = lambda_psi(cfg.lambda);
    let mut ratios = Vec::new();
    for &x in &cfg.xs {
        let n = x as u64;
        let f = gal_test_function(x, n)?;
        let ratio = multiplicative_multiplier_norm(&psi, &f, n)? / f.h2_norm();
        ratios.push(ratio);
        report.push_row(vec![cfg.lambda.into(), x.into(), f.support_len().into(), ratio.into()])?;
    }
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    report.check("ratio increasing in x", increasing, format!("{ratios:?}"));
    Ok(report)
}

/// b_n = u_n n^{-3/4} with u_n uniform in [0, 1), on the admitted indices.
fn random_decaying_symbol(rng: &mut ChaCha8Rng, indices: &[u64], truncation: u64) -> Result<DirichletPolynomial> {
    let terms: Vec<(u64, f64)> = indices.iter().map(|&n| (n, rng.random::<f64>() * (n as f64).powf(-0.75))).collect();
    DirichletPolynomial::from_real_terms(truncation, terms)
}

/// Ratios ‖section‖/statistic for random symbols on `indices`, one row per
/// (draw, section); the same draw is truncated to each section.
fn weighted_ratio_rows(
    label: &str,
    indices: &[u64],
    draws: usize,
    sections: &[u64],
    stream_base: u64,
    weight: &(dyn Fn(u64) -> Result<f64> + Sync),
    settings: &RunSettings,
) -> Result<Vec<(usize, u64, f64, f64, bool)>> {
    let top = sections.iter().copied().max().unwrap_or(1);
    let grid: Vec<(usize, u64)> = (0..draws).flat_map(|d| sections.iter().map(move |&n| (d, n))).collect();
    grid.par_iter()
        .map(|&(d, n)| {
            let mut rng = row_rng(settings.seed, stream_base + d as u64);
            let g = random_decaying_symbol(&mut rng, indices, top)?.partial_sum(n);
            let est = section_norm(&g, n, SectionKind::Volterra, settings.tol, settings.seed.wrapping_add(d as u64))?;
            let stat = weighted_l2_statistic(&g, weight)?;
            let _ = label;
            Ok((d, n, est.value, stat, est.converged))
        })
        .collect()
}

fn spread_check(report: &mut ExperimentReport, label: &str, ratios: &[f64], max_spread: f64) {
    let (mn, mx) = min_max(ratios);
    report.check(
        format!("{label}: norm/statistic ratio stable"),
        ratios.is_empty() || mx / mn <= max_spread,
        format!("fitted constant (max ratio) {mx:.5}, min ratio {mn:.5}, spread {:.4}", mx / mn),
    );
}

fn homog_weights(cfg: &HomogWeightsConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let top = cfg.sections.iter().copied().max().unwrap_or(1).max(2);
    let table = build_prime_table(top)?;
    let mut prov = provenance(settings, cfg.sections.clone());
    prov.notes.push("constants C_2, C_m are not asserted; only stability of norm/statistic".into());
    prov.notes.push("w2 sharpness uses q = least prime above x^3 in place of q ~ e^x".into());
    prov.notes.push("sharpness rows divide by the statistic with the epsilon-weakened weight".into());
    let mut report = ExperimentReport::new(
        "homog-weights",
        &["family", "m", "draw_or_x", "section"],
        &["lower_bound_norm", "statistic", "ratio", "converged"],
        prov,
    );
    for (mi, &m) in cfg.ms.iter().enumerate() {
        let indices: Vec<u64> =
            (2..=top).filter(|&n| table.factorize(n).map(|f| f.big_omega() == m).unwrap_or(false)).collect();
        let weight = move |n: u64| if m == 2 { weight_w2(n) } else { weight_wm(n, m) };
        let rows =
            weighted_ratio_rows("homog", &indices, cfg.draws, &cfg.sections, (mi as u64 + 1) << 40, &weight, settings)?;
        let mut ratios = Vec::new();
        for (d, n, norm, stat, conv) in rows {
            ratios.push(norm / stat);
            report.push_row(vec![
                "random".into(),
                m.into(),
                (d as f64).into(),
                n.into(),
                norm.into(),
                stat.into(),
                (norm / stat).into(),
                conv.into(),
            ])?;
        }
        spread_check(&mut report, &format!("m={m}"), &ratios, cfg.max_spread);
    }

    // sharpness: the weight weakened by (log₂ n)^ε resp. (log n)^ε stays
    // bounded on these symbols while the norm should grow
    let eps = cfg.epsilon;
    let mut w2_ratio = Vec::new();
    for &x in &cfg.sharpness_xs {
        let (g, primes, q) = w2_sharpness_symbol(x, eps, x.saturating_pow(3))?;
        let lower = product_test_quotient(&g, &primes, false)?;
        let stat = weighted_l2_statistic(&g, |n| Ok(weight_w2(n)? / iterated_log(n as f64, 2).powf(eps)))?;
        w2_ratio.push(lower / stat);
        report.push_row(vec![
            format!("w2-sharpness(q={q})").into(),
            2u32.into(),
            (x as f64).into(),
            g.max_index().into(),
            lower.into(),
            stat.into(),
            (lower / stat).into(),
            true.into(),
        ])?;
    }
    if w2_ratio.len() >= 2 {
        report.check(
            "w2 sharpness: norm/weakened statistic grows in x",
            w2_ratio.windows(2).all(|w| w[1] > w[0]),
            format!("{w2_ratio:?}"),
        );
    }
    let m = cfg.sharpness_m;
    let mut wm_ratio = Vec::new();
    for &x in &cfg.wm_sharpness_xs {
        let (g, primes) = wm_sharpness_symbol(m, x, eps)?;
        if g.is_zero() {
            continue;
        }
        let lower = product_test_quotient(&g, &primes, false)?;
        let stat = weighted_l2_statistic(&g, |n| Ok(weight_wm(n, m)? / (n as f64).ln().powf(eps)))?;
        wm_ratio.push(lower / stat);
        report.push_row(vec![
            format!("w{m}-sharpness").into(),
            m.into(),
            (x as f64).into(),
            g.max_index().into(),
            lower.into(),
            stat.into(),
            (lower / stat).into(),
            true.into(),
        ])?;
    }
    if wm_ratio.len() >= 2 {
        report.check(
            format!("w{m} sharpness: norm/weakened statistic grows in x"),
            wm_ratio.windows(2).all(|w| w[1] > w[0]),
            format!("{wm_ratio:?}"),
        );
    }
    Ok(report)
}

fn general_weight(cfg: &GeneralWeightConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let top = cfg.sections.iter().copied().max().unwrap_or(1).max(2);
    let mut prov = provenance(settings, cfg.sections.clone());
    prov.notes.push(format!("weight n exp(-c sqrt(log n log2 n)) with c = {}", cfg.c));
    let mut report = ExperimentReport::new(
        "general-weight",
        &["draw", "section"],
        &["section_norm", "statistic", "ratio", "converged"],
        prov,
    );
    let indices: Vec<u64> = (2..=top).collect();
    let c = cfg.c;
    let weight = move |n: u64| weight_general(n, c);
    let rows = weighted_ratio_rows("general", &indices, cfg.draws, &cfg.sections, 1 << 48, &weight, settings)?;
    let mut ratios = Vec::new();
    for (d, n, norm, stat, conv) in rows {
        ratios.push(norm / stat);
        report.push_row(vec![d.into(), n.into(), norm.into(), stat.into(), (norm / stat).into(), conv.into()])?;
    }
    spread_check(&mut report, "general weight", &ratios, cfg.max_spread);
    Ok(report)
}

fn schatten(cfg: &SchattenConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let s = &cfg.symbol;
    if s.indices.len() != s.coefficients.len() {
        return Err(invalid("schatten symbol: indices and coefficients differ in length"));
    }
    let top = s.indices.iter().copied().max().unwrap_or(1);
    let g = DirichletPolynomial::from_real_terms(top, s.indices.iter().copied().zip(s.coefficients.iter().copied()))?;
    let mut report = ExperimentReport::new(
        "schatten",
        &["p", "section"],
        &["partial_sum", "relative_increase"],
        provenance(settings, cfg.sections.clone()),
    );
    // ‖T_g e_n‖ ≥ |b_M| log M / (2 log(nM)) for every support index M ≥ 2
    let mut violations = 0u64;
    let mut tightest = f64::INFINITY;
    for n in 1..=cfg.column_bound_max_n {
        let col = column_norm(&g, n)?;
        for &(m, b) in g.terms().iter().filter(|t| t.0 >= 2) {
            let lm = (m as f64).ln();
            let bound = b.norm() * lm / (2.0 * (lm + (n as f64).ln()));
            if col < bound {
                violations += 1;
            }
            if bound > 0.0 {
                tightest = tightest.min(col / bound);
            }
        }
    }
    report.check(
        "column lower bound holds",
        violations == 0,
        format!("{violations} violations for n <= {}; min column/bound {tightest:.4}", cfg.column_bound_max_n),
    );
    let sums: Vec<f64> = cfg.sections.iter().map(|&n| schatten_partial_sum(&g, n, cfg.p)).collect::<Result<_>>()?;
    let mut ok = true;
    for (i, (&n, &v)) in cfg.sections.iter().zip(&sums).enumerate() {
        let inc = if i == 0 { f64::NAN } else { v / sums[i - 1] - 1.0 };
        if i > 0 && !(inc >= cfg.min_increase) {
            ok = false;
        }
        report.push_row(vec![cfg.p.into(), n.into(), v.into(), inc.into()])?;
    }
    report.check(format!("partial sums increase by >= {}", cfg.min_increase), ok, format!("{sums:?}"));
    Ok(report)
}

fn smooth_kernel_scenario(cfg: &SmoothKernelConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let mut prov = provenance(settings, vec![cfg.prime_bound]);
    prov.notes.push(format!("sigma = y^-{}; untruncated kernel and symbol via Euler products", cfg.sigma_exponent));
    prov.notes.push("extended y values are trend evidence only".into());
    let mut report = ExperimentReport::new(
        "smooth-kernel",
        &["lambda", "y", "sigma", "in_protocol"],
        &["tilde_quotient", "plain_quotient"],
        prov,
    );
    let mut grid = Vec::new();
    for &lambda in &[cfg.growth_lambda, cfg.floor_lambda] {
        for &y in &cfg.ys {
            grid.push((lambda, y, true));
        }
        for &y in &cfg.extended_ys {
            grid.push((lambda, y, false));
        }
    }
    let results: Vec<(f64, u64, bool, f64, RayleighQuotient)> = grid
        .par_iter()
        .map(|&(lambda, y, inside)| {
            let sigma = (y as f64).powf(-cfg.sigma_exponent);
            let q = lambda_kernel_quotient(lambda, sigma, y, cfg.prime_bound.max(y))?;
            Ok((lambda, y, inside, sigma, q))
        })
        .collect::<Result<_>>()?;
    for &(lambda, y, inside, sigma, q) in &results {
        report.push_row(vec![lambda.into(), y.into(), sigma.into(), inside.into(), q.tilde.into(), q.plain.into()])?;
    }
    let series = |lambda: f64, all: bool| -> Vec<f64> {
        results.iter().filter(|r| r.0 == lambda && (all || r.2)).map(|r| r.4.tilde).collect()
    };
    let growth = series(cfg.growth_lambda, false);
    let growth_all = series(cfg.growth_lambda, true);
    report.check(
        format!("lambda={} quotient strictly increasing in y", cfg.growth_lambda),
        growth.windows(2).all(|w| w[1] > w[0]),
        format!("{growth:?}; with extended y {growth_all:?}"),
    );
    let floor = series(cfg.floor_lambda, false);
    if let Some(&first) = floor.first() {
        let (mn, _) = min_max(&floor);
        report.check(
            format!("lambda={} quotient stays above {} of its first value", cfg.floor_lambda, cfg.floor_fraction),
            mn >= cfg.floor_fraction * first,
            format!("{floor:?}"),
        );
    }
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for case in &cfg.two_path {
        let g = lambda_symbol(case.lambda, case.m_cut.max(2))?;
        let spec = SmoothKernelSpec { sigma: case.sigma, y: case.y, truncation: case.truncation };
        let k = smooth_kernel(&spec)?;
        let direct = apply_volterra_tilde(&g, &k, case.truncation.saturating_mul(case.m_cut)).norm_sqr();
        let sum = multcomp_double_sum(&g, &spec, case.m_cut)?;
        let rel = (sum.tilde - direct).abs() / direct;
        worst = worst.max(rel);
        details.push(format!("{rel:.2e} (kernel tail bound {:.2e})", sum.tail_bound / direct));
    }
    report.check("double sum matches direct tilde norm", worst < 1e-10, details.join(", "));
    Ok(report)
}

fn bmo(cfg: &BmoConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let mut prov = provenance(settings, cfg.truncations.clone());
    prov.notes.push("empirical supremum over a finite grid of centers and lengths, not the BMO norm".into());
    let mut report = ExperimentReport::new(
        "bmo",
        &["alpha", "truncation", "sigma", "length"],
        &["max_oscillation", "argmax_center"],
        prov,
    );
    let (lengths, centers) = default_grid(cfg.dyadic_lengths, cfg.centers, cfg.t_max);
    let mut alphas = vec![cfg.alpha];
    alphas.extend(cfg.contrast_alphas.iter().copied());
    let mut profiles: Vec<Vec<f64>> = Vec::new();
    for (ai, &alpha) in alphas.iter().enumerate() {
        for &n in &cfg.truncations {
            let g = zeta_primitive_symbol(alpha, n)?;
            let profile = bmo_profile(&g, cfg.sigma, &lengths, &centers, cfg.points_per_unit)?;
            let osc = profile.float_column("max_oscillation").unwrap_or_default();
            for row in profile.rows() {
                let mut cells = vec![alpha.into(), n.into()];
                cells.extend(row.iter().cloned());
                report.push_row(cells)?;
            }
            if ai == 0 {
                profiles.push(osc);
            }
        }
    }
    let mut worst = 1.0f64;
    for li in 0..lengths.len() {
        let col: Vec<f64> = profiles.iter().map(|p| p[li]).collect();
        let (mn, mx) = min_max(&col);
        if !col.is_empty() {
            worst = worst.max(if mn > 0.0 { mx / mn } else { f64::INFINITY });
        }
    }
    let overall: Vec<f64> = profiles.iter().flatten().copied().collect();
    let (mn, mx) = min_max(&overall);
    report.check(
        format!("profile bounded across truncations (ratio < {})", cfg.max_ratio),
        worst < cfg.max_ratio,
        format!("worst per-length max/min over truncations {worst:.4}; overall range [{mn:.4e}, {mx:.4e}]"),
    );
    Ok(report)
}

fn carleson(cfg: &CarlesonConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let d = cfg.coefficients.len();
    let primes = first_primes(d);
    let pairs: Vec<(u64, Complex64)> = primes.iter().zip(&cfg.coefficients).map(|(&p, &c)| (p, Complex64::new(c, 0.0))).collect();
    let g = linear_symbol(&pairs, primes.last().copied().unwrap_or(2))?;
    let single = DirichletPolynomial::from_real_terms(2, [(2, 1.0)])?;
    let one = DirichletPolynomial::one(1);
    let mut report = ExperimentReport::new(
        "carleson",
        &["symbol", "d", "p", "samples"],
        &["estimate", "stderr", "target", "sigma_max"],
        provenance(settings, Vec::new()),
    );
    for (label, sym, dim) in [("configured", &g, d), ("single-prime", &single, 1)] {
        let est = carleson_integral_mc(sym, &one, dim, cfg.p, cfg.samples, settings.seed)?;
        let target = 0.25 * sym.norm_sqr();
        report.push_row(vec![
            label.into(),
            dim.into(),
            cfg.p.into(),
            cfg.samples.into(),
            est.estimate.into(),
            est.stderr.into(),
            target.into(),
            est.sigma_max.into(),
        ])?;
        let dev = (est.estimate - target).abs();
        report.check(
            format!("{label}: estimate within {} standard errors of |g|^2/4", cfg.max_standard_errors),
            dev <= cfg.max_standard_errors * est.stderr.max(1e-12 * target),
            format!("estimate {:.6}, target {target:.6}, stderr {:.3e}", est.estimate, est.stderr),
        );
        if label == "configured" {
            report.check(
                format!("relative stderr below {}", cfg.max_relative_stderr),
                est.stderr < cfg.max_relative_stderr * target,
                format!("{:.3e}", est.stderr / target),
            );
        }
    }
    Ok(report)
}

fn quarter(cfg: &QuarterIdentityConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let mut report =
        ExperimentReport::new("quarter-identity", &["a"], &["value", "abs_error"], provenance(settings, Vec::new()));
    let mut worst = 0.0f64;
    for i in 1..=cfg.count {
        let a = cfg.a_max.powf(i as f64 / cfg.count as f64);
        let v = quarter_identity(a, cfg.quad_tol)?;
        worst = worst.max((v - 0.25).abs());
        report.push_row(vec![a.into(), v.into(), (v - 0.25).abs().into()])?;
    }
    report.check("integral equals 1/4", worst < cfg.tolerance, format!("max error {worst:e}"));
    Ok(report)
}

fn random_support_poly(rng: &mut ChaCha8Rng, max_support: usize, max_index: u64) -> Result<DirichletPolynomial> {
    let k = rng.random_range(1..=max_support.min(max_index as usize));
    let indices = sample(rng, max_index as usize, k);
    let terms: Vec<(u64, Complex64)> = indices
        .into_iter()
        .map(|i| (i as u64 + 1, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    DirichletPolynomial::from_terms(max_index, terms)
}

fn sandwich(cfg: &SandwichConfig, settings: &RunSettings) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "sandwich",
        &["pair"],
        &["lower", "middle", "upper", "holds"],
        provenance(settings, vec![cfg.max_index]),
    );
    let rows: Vec<SandwichBounds> = (0..cfg.pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(settings.seed, i as u64);
            let g = random_support_poly(&mut rng, cfg.max_support, cfg.max_index)?;
            let f = random_support_poly(&mut rng, cfg.max_support, cfg.max_index)?;
            Ok(dyadic_sandwich_check(&g, &f))
        })
        .collect::<Result<_>>()?;
    let mut violations = 0;
    for (i, b) in rows.iter().enumerate() {
        violations += usize::from(!b.holds());
        report.push_row(vec![i.into(), b.lower.into(), b.middle.into(), b.upper.into(), b.holds().into()])?;
    }
    report.check("lower <= middle <= upper", violations == 0, format!("{violations} violations in {} pairs", cfg.pairs));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> RunSettings {
        RunSettings::default()
    }

    #[test]
    fn linear_norm_example() {
        let cfg = LinearNormConfig {
            random_symbols: 0,
            sections: vec![2048],
            symbols: vec![ExplicitSymbol { indices: vec![2, 3], coefficients: vec![0.6, 0.8] }],
            ..Default::default()
        };
        let report = linear_norm(&cfg, &settings()).unwrap();
        assert_eq!(report.len(), 1);
        assert!((report.float_column("section_norm").unwrap()[0] - 1.0).abs() < 1e-6);
        assert!(report.all_passed());
    }

    #[test]
    fn empty_grid_is_empty_success() {
        let cfg = LinearNormConfig { random_symbols: 0, ..Default::default() };
        let report = linear_norm(&cfg, &settings()).unwrap();
        assert!(report.is_empty() && report.all_passed());
        let cfg = QuarterIdentityConfig { count: 0, ..Default::default() };
        assert!(quarter(&cfg, &settings()).unwrap().is_empty());
    }

    #[test]
    fn quarter_rows_are_quarter() {
        let report = quarter(&QuarterIdentityConfig::default(), &settings()).unwrap();
        assert_eq!(report.len(), 20);
        assert!(report.float_column("value").unwrap().iter().all(|v| (v - 0.25).abs() < 1e-8));
        assert!(report.all_passed());
    }

    #[test]
    fn deterministic_csv() {
        let cfg = LabConfig {
            sandwich: SandwichConfig { pairs: 20, max_support: 8, max_index: 64 },
            linear_norm: LinearNormConfig { random_symbols: 2, sections: vec![256], ..Default::default() },
            ..Default::default()
        };
        for sc in [Scenario::Sandwich, Scenario::LinearNorm] {
            let a = run_scenario(sc, &cfg, &settings()).unwrap().to_csv_string().unwrap();
            let b = run_scenario(sc, &cfg, &settings()).unwrap().to_csv_string().unwrap();
            assert_eq!(a, b);
        }
        let other = RunSettings { seed: 1, ..settings() };
        let a = run_scenario(Scenario::Sandwich, &cfg, &settings()).unwrap().to_csv_string().unwrap();
        let b = run_scenario(Scenario::Sandwich, &cfg, &other).unwrap().to_csv_string().unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn settings_precedence() {
        let cfg = LabConfig { seed: Some(5), tol: Some(1e-8), ..Default::default() };
        assert_eq!(RunSettings::resolve(&cfg, None, None), RunSettings { seed: 5, tol: 1e-8 });
        assert_eq!(RunSettings::resolve(&cfg, Some(9), None).seed, 9);
        assert_eq!(RunSettings::resolve(&LabConfig::default(), None, Some(1e-6)).tol, 1e-6);
    }

    #[test]
    fn small_scenarios_run() {
        let cfg = LabConfig {
            coprime_norm: CoprimeNormConfig { supports: vec![vec![2, 15]], random_draws: 2, ..Default::default() },
            schatten: SchattenConfig { column_bound_max_n: 100, sections: vec![100, 1000], ..Default::default() },
            homog_weights: HomogWeightsConfig {
                draws: 2,
                sections: vec![64, 128],
                sharpness_xs: vec![16, 32],
                wm_sharpness_xs: vec![16, 32],
                ..Default::default()
            },
            general_weight: GeneralWeightConfig { draws: 2, sections: vec![64, 128], ..Default::default() },
            ..Default::default()
        };
        for sc in [Scenario::CoprimeNorm, Scenario::Schatten, Scenario::HomogWeights, Scenario::GeneralWeight] {
            let report = run_scenario(sc, &cfg, &settings()).unwrap();
            assert!(!report.is_empty(), "{sc}");
            assert!(!report.checks.is_empty(), "{sc}");
        }
        let coprime = run_scenario(Scenario::CoprimeNorm, &cfg, &settings()).unwrap();
        assert!(coprime.all_passed(), "{:?}", coprime.checks);
        let schatten = run_scenario(Scenario::Schatten, &cfg, &settings()).unwrap();
        assert!(schatten.all_passed(), "{:?}", schatten.checks);
    }
}
