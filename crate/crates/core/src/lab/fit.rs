//! Least-squares growth exponents on log scales.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthModel {
    /// y ≈ C (log x)^k: regress log y on log log x.
    PowerOfLog,
    /// y ≈ C x^k: regress log y on log x.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn growth_fit(xs: &[f64], ys: &[f64], model: GrowthModel) -> Result<GrowthFit> {
    if xs.len() != ys.len() {
        return Err(invalid(format!("{} abscissae but {} values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: xs.len() });
    }
    let mut u = Vec::with_capacity(xs.len());
    let mut v = Vec::with_capacity(xs.len());
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let ux = match model {
            GrowthModel::Power if x > 0.0 => x.ln(),
            GrowthModel::PowerOfLog if x > 1.0 => x.ln().ln(),
            _ => return Err(Error::NonPositiveData(i)),
        };
        if !(y > 0.0) || !y.is_finite() || !ux.is_finite() {
            return Err(Error::NonPositiveData(i));
        }
        u.push(ux);
        v.push(y.ln());
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|a| (a - mu).powi(2)).sum();
    if suu == 0.0 {
        return Err(invalid("all abscissae coincide"));
    }
    let suv: f64 = u.iter().zip(&v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let svv: f64 = v.iter().map(|b| (b - mv).powi(2)).sum();
    let exponent = suv / suu;
    let intercept = mv - exponent * mu;
    let ss_res: f64 = u.iter().zip(&v).map(|(a, b)| (b - intercept - exponent * a).powi(2)).sum();
    let r_squared = if svv == 0.0 { 1.0 } else { 1.0 - ss_res / svv };
    Ok(GrowthFit { exponent, intercept, r_squared })
}
