use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points at or below this value are treated as numerical noise.
pub const NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecayModel {
    /// C e^{-c r}
    Exponential,
    /// C e^{-c r^p} with p fixed
    Stretched { p: f64 },
    /// C (1 + r)^{-α}
    Polynomial,
}

impl DecayModel {
    fn abscissa(&self, r: f64) -> f64 {
        match *self {
            DecayModel::Exponential => r,
            DecayModel::Stretched { p } => r.powf(p),
            DecayModel::Polynomial => (1.0 + r).ln(),
        }
    }
}

/// Least-squares decay fit on log y. `rate` is c (or α for the polynomial
/// model); standard errors come from the residual variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub r_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub prefactor: f64,
    pub rate: f64,
    pub prefactor_stderr: f64,
    pub rate_stderr: f64,
    /// Coefficient of determination of log y on the fit window.
    pub r_squared: f64,
    /// Points above the noise floor actually used.
    pub used: usize,
}

impl DecayFit {
    pub fn eval(&self, r: f64) -> f64 {
        self.prefactor * (-self.rate * self.model.abscissa(r)).exp()
    }
}

pub fn fit_decay(r: &[f64], y: &[f64], model: DecayModel) -> Result<DecayFit> {
    if r.len() != y.len() {
        return Err(Error::Shape(format!(
            "{} abscissae for {} values",
            r.len(),
            y.len()
        )));
    }
    if let DecayModel::Stretched { p } = model {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "stretched exponent {p} outside (0, 1]"
            )));
        }
    }
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > NOISE_FLOOR && v.is_finite())
        .map(|(&r, &v)| (model.abscissa(r), v.ln()))
        .collect();
    let n = pts.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "{n} points above the noise floor, need at least 4"
        )));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    let s2 = ssr / (nf - 2.0);
    let se_slope = (s2 / sxx).sqrt();
    let se_icpt = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let prefactor = icpt.exp();
    Ok(DecayFit {
        model,
        r_values: r.to_vec(),
        y_values: y.to_vec(),
        prefactor,
        rate: -slope,
        prefactor_stderr: prefactor * se_icpt,
        rate_stderr: se_slope,
        r_squared,
        used: n,
    })
}

/// env[i] = max_{j ≥ i} y[j]: the smallest nonincreasing majorant.
pub fn monotone_envelope(y: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let r: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = r.iter().map(|r| 3.0 * (-0.7 * r).exp()).collect();
        let f = fit_decay(&r, &y, DecayModel::Exponential).unwrap();
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!((f.rate - 0.7).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_polynomial() {
        let r: Vec<f64> = (0..12).map(f64::from).collect();
        let y: Vec<f64> = r.iter().map(|r| (1.0 + r).powi(-2)).collect();
        let f = fit_decay(&r, &y, DecayModel::Polynomial).unwrap();
        assert!((f.rate - 2.0).abs() < 1e-10);
        assert!((f.prefactor - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stretched_and_noise() {
        let r: Vec<f64> = (1..10).map(f64::from).collect();
        let y: Vec<f64> = r.iter().map(|r| 2.0 * (-1.5 * r.sqrt()).exp()).collect();
        let f = fit_decay(&r, &y, DecayModel::Stretched { p: 0.5 }).unwrap();
        assert!((f.rate - 1.5).abs() < 1e-10);
        let noisy: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(i, v)| v * (1.0 + 0.2 * (i % 2) as f64))
            .collect();
        let g = fit_decay(&r, &noisy, DecayModel::Stretched { p: 0.5 }).unwrap();
        assert!(g.r_squared < 1.0);
    }

    #[test]
    fn floor_excludes_points() {
        let r = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 0.1, 1e-14, 0.0, 1e-3];
        assert!(matches!(
            fit_decay(&r, &y, DecayModel::Exponential),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn envelope_is_monotone() {
        assert_eq!(
            monotone_envelope(&[3.0, 1.0, 2.0, 0.5]),
            vec![3.0, 2.0, 2.0, 0.5]
        );
    }
}
