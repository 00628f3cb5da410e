//! Scenario configuration: one TOML table per scenario. Every field has a
//! default, so an empty document runs the standard protocol; unknown keys
//! are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    LinearNorm,
    CoprimeNorm,
    ZetaGrowth,
    LambdaThreshold,
    GalLower,
    HomogWeights,
    GeneralWeight,
    Schatten,
    SmoothKernel,
    Bmo,
    Carleson,
    QuarterIdentity,
    Sandwich,
}

impl Scenario {
    pub const ALL: [Scenario; 13] = [
        Scenario::LinearNorm,
        Scenario::CoprimeNorm,
        Scenario::ZetaGrowth,
        Scenario::LambdaThreshold,
        Scenario::GalLower,
        Scenario::HomogWeights,
        Scenario::GeneralWeight,
        Scenario::Schatten,
        Scenario::SmoothKernel,
        Scenario::Bmo,
        Scenario::Carleson,
        Scenario::QuarterIdentity,
        Scenario::Sandwich,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::LinearNorm => "linear-norm",
            Scenario::CoprimeNorm => "coprime-norm",
            Scenario::ZetaGrowth => "zeta-growth",
            Scenario::LambdaThreshold => "lambda-threshold",
            Scenario::GalLower => "gal-lower",
            Scenario::HomogWeights => "homog-weights",
            Scenario::GeneralWeight => "general-weight",
            Scenario::Schatten => "schatten",
            Scenario::SmoothKernel => "smooth-kernel",
            Scenario::Bmo => "bmo",
            Scenario::Carleson => "carleson",
            Scenario::QuarterIdentity => "quarter-identity",
            Scenario::Sandwich => "sandwich",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct LabConfig {
    pub seed: Option<u64>,
    /// Relative-change tolerance of the power iteration.
    pub tol: Option<f64>,
    pub linear_norm: LinearNormConfig,
    pub coprime_norm: CoprimeNormConfig,
    pub zeta_growth: ZetaGrowthConfig,
    pub lambda_threshold: LambdaThresholdConfig,
    pub gal_lower: GalLowerConfig,
    pub homog_weights: HomogWeightsConfig,
    pub general_weight: GeneralWeightConfig,
    pub schatten: SchattenConfig,
    pub smooth_kernel: SmoothKernelConfig,
    pub bmo: BmoConfig,
    pub carleson: CarlesonConfig,
    pub quarter_identity: QuarterIdentityConfig,
    pub sandwich: SandwichConfig,
}

pub const DEFAULT_SEED: u64 = 20240917;
pub const DEFAULT_TOL: f64 = 1e-12;

impl LabConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The table for one scenario, for the report sidecar.
    pub fn scenario_table(&self, scenario: Scenario) -> Result<toml::Value> {
        let v = match scenario {
            Scenario::LinearNorm => toml::Value::try_from(&self.linear_norm),
            Scenario::CoprimeNorm => toml::Value::try_from(&self.coprime_norm),
            Scenario::ZetaGrowth => toml::Value::try_from(&self.zeta_growth),
            Scenario::LambdaThreshold => toml::Value::try_from(&self.lambda_threshold),
            Scenario::GalLower => toml::Value::try_from(&self.gal_lower),
            Scenario::HomogWeights => toml::Value::try_from(&self.homog_weights),
            Scenario::GeneralWeight => toml::Value::try_from(&self.general_weight),
            Scenario::Schatten => toml::Value::try_from(&self.schatten),
            Scenario::SmoothKernel => toml::Value::try_from(&self.smooth_kernel),
            Scenario::Bmo => toml::Value::try_from(&self.bmo),
            Scenario::Carleson => toml::Value::try_from(&self.carleson),
            Scenario::QuarterIdentity => toml::Value::try_from(&self.quarter_identity),
            Scenario::Sandwich => toml::Value::try_from(&self.sandwich),
        };
        Ok(v?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSymbol {
    pub indices: Vec<u64>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct LinearNormConfig {
    pub random_symbols: usize,
    pub primes_per_symbol: usize,
    /// Random symbols use primes up to this bound.
    pub max_prime: u64,
    pub sections: Vec<u64>,
    /// Extra fixed symbols; `indices` must be primes.
    pub symbols: Vec<ExplicitSymbol>,
    pub tolerance: f64,
}

impl Default for LinearNormConfig {
    fn default() -> Self {
        LinearNormConfig {
            random_symbols: 10,
            primes_per_symbol: 4,
            max_prime: 251,
            sections: vec![256, 1024, 4096],
            symbols: Vec::new(),
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct CoprimeNormConfig {
    pub supports: Vec<Vec<u64>>,
    pub random_draws: usize,
    pub sections: Vec<u64>,
    pub tolerance: f64,
}

impl Default for CoprimeNormConfig {
    fn default() -> Self {
        CoprimeNormConfig {
            supports: vec![vec![2, 15, 1001], vec![3, 4, 5, 7], vec![6, 35, 143]],
            random_draws: 10,
            sections: vec![256, 1024, 4096],
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ZetaGrowthConfig {
    pub alphas: Vec<f64>,
    pub j_max: usize,
    pub growth_alpha: f64,
    pub growth_from: usize,
    pub growth_to: usize,
    pub growth_factor: f64,
    pub flat_alpha: f64,
    pub flat_from: usize,
    pub flat_to: usize,
    pub flat_factor: f64,
    /// Subset enumeration is cross-checked against the operator up to this J.
    pub cross_check_j: usize,
}

impl Default for ZetaGrowthConfig {
    fn default() -> Self {
        ZetaGrowthConfig {
            alphas: vec![0.5, 1.0],
            j_max: 18,
            growth_alpha: 0.5,
            growth_from: 6,
            growth_to: 18,
            growth_factor: 4.0,
            flat_alpha: 1.0,
            flat_from: 4,
            flat_to: 18,
            flat_factor: 3.0,
            cross_check_j: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct LambdaThresholdConfig {
    pub lambdas: Vec<f64>,
    pub xs: Vec<u64>,
    pub exponent_tolerance: f64,
    /// Power-iteration tolerance for these sections; a fitted exponent does
    /// not need the global default.
    pub power_tol: f64,
}

impl Default for LambdaThresholdConfig {
    fn default() -> Self {
        LambdaThresholdConfig {
            lambdas: vec![0.5, 1.0, 1.5],
            xs: vec![1_000, 10_000, 100_000, 1_000_000],
            exponent_tolerance: 0.35,
            power_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct GalLowerConfig {
    pub lambda: f64,
    pub xs: Vec<f64>,
}

impl Default for GalLowerConfig {
    fn default() -> Self {
        GalLowerConfig { lambda: 1.5, xs: vec![1e4, 1e6, 1e8] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct HomogWeightsConfig {
    pub ms: Vec<u32>,
    pub draws: usize,
    pub sections: Vec<u64>,
    /// Largest allowed spread (max/min) of norm/statistic per m.
    pub max_spread: f64,
    pub sharpness_xs: Vec<u64>,
    pub sharpness_m: u32,
    pub wm_sharpness_xs: Vec<u64>,
    pub epsilon: f64,
}

impl Default for HomogWeightsConfig {
    fn default() -> Self {
        HomogWeightsConfig {
            ms: vec![2, 3],
            draws: 20,
            sections: vec![512, 2048],
            max_spread: 10.0,
            sharpness_xs: vec![16, 32, 64, 128],
            sharpness_m: 3,
            wm_sharpness_xs: vec![24, 32, 48, 64],
            epsilon: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct GeneralWeightConfig {
    pub c: f64,
    pub draws: usize,
    pub sections: Vec<u64>,
    pub max_spread: f64,
}

impl Default for GeneralWeightConfig {
    fn default() -> Self {
        GeneralWeightConfig { c: 2.0 * std::f64::consts::SQRT_2, draws: 20, sections: vec![512, 2048], max_spread: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct SchattenConfig {
    pub symbol: ExplicitSymbol,
    pub p: f64,
    pub column_bound_max_n: u64,
    pub sections: Vec<u64>,
    pub min_increase: f64,
}

impl Default for SchattenConfig {
    fn default() -> Self {
        SchattenConfig {
            symbol: ExplicitSymbol { indices: vec![2], coefficients: vec![1.0] },
            p: 2.0,
            column_bound_max_n: 10_000,
            sections: vec![10_000, 100_000],
            min_increase: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPathCase {
    pub lambda: f64,
    pub sigma: f64,
    pub y: u64,
    pub truncation: u64,
    pub m_cut: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct SmoothKernelConfig {
    pub growth_lambda: f64,
    pub floor_lambda: f64,
    pub ys: Vec<u64>,
    /// σ = y^{-sigma_exponent}.
    pub sigma_exponent: f64,
    /// Primes up to this bound enter the Euler products exactly.
    pub prime_bound: u64,
    pub floor_fraction: f64,
    /// Larger y reported for the trend only.
    pub extended_ys: Vec<u64>,
    pub two_path: Vec<TwoPathCase>,
}

impl Default for SmoothKernelConfig {
    fn default() -> Self {
        SmoothKernelConfig {
            growth_lambda: 1.2,
            floor_lambda: 1.0,
            ys: vec![50, 100, 200, 400],
            sigma_exponent: 0.5,
            prime_bound: 2_000_000,
            floor_fraction: 0.5,
            extended_ys: vec![1_600, 6_400],
            two_path: vec![
                TwoPathCase { lambda: 1.2, sigma: 0.6, y: 5, truncation: 4_000, m_cut: 60 },
                TwoPathCase { lambda: 1.0, sigma: 0.3, y: 7, truncation: 2_000, m_cut: 40 },
                TwoPathCase { lambda: 0.5, sigma: 1.0, y: 2, truncation: 512, m_cut: 30 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct BmoConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub truncations: Vec<u64>,
    /// Lengths 2^{-k} for k = 0..dyadic_lengths.
    pub dyadic_lengths: usize,
    pub centers: usize,
    pub t_max: f64,
    pub points_per_unit: f64,
    pub max_ratio: f64,
    /// Extra primitives profiled for comparison only.
    pub contrast_alphas: Vec<f64>,
}

impl Default for BmoConfig {
    fn default() -> Self {
        BmoConfig {
            alpha: 1.0,
            sigma: 0.0,
            truncations: vec![10_000, 100_000],
            dyadic_lengths: 11,
            centers: 32,
            t_max: 1000.0,
            points_per_unit: 64.0,
            max_ratio: 4.0,
            contrast_alphas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct CarlesonConfig {
    /// Coefficients on the first d primes.
    pub coefficients: Vec<f64>,
    pub p: f64,
    pub samples: usize,
    pub max_standard_errors: f64,
    pub max_relative_stderr: f64,
}

impl Default for CarlesonConfig {
    fn default() -> Self {
        CarlesonConfig {
            coefficients: vec![0.6, 0.8],
            p: 2.0,
            samples: 100_000,
            max_standard_errors: 3.0,
            max_relative_stderr: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct QuarterIdentityConfig {
    pub count: usize,
    pub a_max: f64,
    pub quad_tol: f64,
    pub tolerance: f64,
}

impl Default for QuarterIdentityConfig {
    fn default() -> Self {
        QuarterIdentityConfig { count: 20, a_max: 1000.0, quad_tol: 1e-10, tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct SandwichConfig {
    pub pairs: usize,
    pub max_support: usize,
    pub max_index: u64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        SandwichConfig { pairs: 1000, max_support: 64, max_index: 4096 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
            let v = toml::Value::try_from(sc).unwrap();
            assert_eq!(v.as_str(), Some(sc.name()));
        }
        assert!(matches!("nope".parse::<Scenario>(), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(LabConfig::from_toml_str("").unwrap(), LabConfig::default());
    }

    #[test]
    fn partial_tables_and_unknown_keys() {
        let cfg = LabConfig::from_toml_str("seed = 7\n[linear-norm]\nsections = [2048]\nrandom-symbols = 0\n").unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.linear_norm.sections, vec![2048]);
        assert_eq!(cfg.linear_norm.tolerance, 1e-6);
        assert!(LabConfig::from_toml_str("[linear-norm]\nbogus = 1\n").is_err());
        assert!(LabConfig::from_toml_str("[no-such-scenario]\n").is_err());
        assert!(LabConfig::from_toml_str("[[linear-norm.symbols]]\nindices = [2]\ncoefficients = [1.0]\nextra = 2\n").is_err());
    }

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = LabConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(LabConfig::from_toml_str(&text).unwrap(), cfg);
        for sc in Scenario::ALL {
            assert!(cfg.scenario_table(sc).unwrap().is_table());
        }
    }
}
