//! Closed-form right-hand sides for the model-family corollaries.
//!
//! The decay-of-correlation constants behind each family are inputs here,
//! never derived.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryKind {
    /// Translation-invariant chain, exponential perturbation bound.
    TranslationInvariantLppl,
    /// Translation-invariant chain, exponential indistinguishability.
    TranslationInvariantLi,
    /// k-local short-range chain, e^{−c√r} perturbation bound.
    ShortRangeLppl,
    /// k-local short-range chain, (1+√r)e^{−c'√r} indistinguishability.
    ShortRangeLi,
    /// k-local chain with (1+r)^{−α} interactions, polynomial perturbation bound.
    LongRangeLppl,
    /// Same family, polynomial indistinguishability.
    LongRangeLi,
    /// Any dimension, assuming |X|^n|Y|^n exponential clustering.
    ConjectureLppl,
    /// Any dimension, β|Y|^{n+1} exponential indistinguishability.
    ConjectureLi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryParams {
    pub prefactor: f64,
    /// Exponential or stretched rate, or the output exponent for the
    /// polynomial families.
    pub rate: f64,
    /// Interaction decay exponent (polynomial families only).
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Interaction decay rate b (short-range LI only).
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub v_norm: f64,
    #[serde(default = "one")]
    pub b_norm: f64,
    #[serde(default = "one_usize")]
    pub x_size: usize,
    #[serde(default = "one_usize")]
    pub y_size: usize,
    #[serde(default)]
    pub n: u32,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl CorollaryParams {
    pub fn new(prefactor: f64, rate: f64) -> CorollaryParams {
        CorollaryParams {
            prefactor,
            rate,
            alpha: None,
            b: None,
            beta: 0.0,
            v_norm: 0.0,
            b_norm: 1.0,
            x_size: 1,
            y_size: 1,
            n: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must be positive"
        )))
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must be nonnegative"
        )))
    }
}

fn polynomial_domain(p: &CorollaryParams, loss: f64) -> Result<()> {
    let alpha = p
        .alpha
        .ok_or_else(|| Error::InvalidParameter("polynomial family needs alpha".into()))?;
    if !(alpha > loss) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} must exceed {loss}"
        )));
    }
    if !(p.rate < alpha - loss) {
        return Err(Error::InvalidParameter(format!(
            "output exponent {} must be below alpha - {loss} = {}",
            p.rate,
            alpha - loss
        )));
    }
    Ok(())
}

/// Right-hand side at distance `dist`.
pub fn corollary_bound(kind: CorollaryKind, p: &CorollaryParams, dist: f64) -> Result<f64> {
    use CorollaryKind::*;
    positive("prefactor", p.prefactor)?;
    nonneg("dist", dist)?;
    nonneg("v_norm", p.v_norm)?;
    nonneg("b_norm", p.b_norm)?;
    nonneg("beta", p.beta)?;
    match kind {
        LongRangeLppl | LongRangeLi => {}
        _ => positive("rate", p.rate)?,
    }
    let perturbation = (3.0 * p.beta * p.v_norm).exp() * (1.0 + p.v_norm);
    let c = p.prefactor * p.b_norm;
    let r = dist;
    let value = match kind {
        TranslationInvariantLppl => c * perturbation * (-p.rate * r).exp(),
        TranslationInvariantLi => c * (-p.rate * r).exp(),
        ShortRangeLppl => c * perturbation * (-p.rate * r.sqrt()).exp(),
        ShortRangeLi => {
            let b =
                p.b.ok_or_else(|| Error::InvalidParameter("short-range LI needs b".into()))?;
            positive("b", b)?;
            let rate = b * p.rate / (b * b + p.rate * p.rate).sqrt();
            c * (1.0 + r.sqrt()) * (-rate * r.sqrt()).exp()
        }
        LongRangeLppl => {
            polynomial_domain(p, 2.0)?;
            c * perturbation * (1.0 + r).powf(-p.rate)
        }
        LongRangeLi => {
            polynomial_domain(p, 3.0)?;
            c * (1.0 + r).powf(-p.rate)
        }
        ConjectureLppl => {
            let sizes = ((p.x_size * p.y_size) as f64).powi(p.n as i32);
            c * perturbation * sizes * (-p.rate * r).exp()
        }
        ConjectureLi => {
            let sizes = (p.y_size as f64).powi(p.n as i32 + 1);
            c * p.beta * sizes * (-p.rate * r).exp()
        }
    };
    Ok(value)
}
