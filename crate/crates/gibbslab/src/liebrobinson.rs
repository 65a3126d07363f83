//! Exact commutator norms under Heisenberg evolution and the Lieb-Robinson
//! bound evaluators checked against them.

use serde::{Deserialize, Serialize};

use crate::algebra::{c, dense, LocalOperator, Mat, Spectrum};
use crate::error::{Error, Result};
use crate::lattice::{Distance, Region};
use crate::quadrature::{self, QuadOptions};

/// Precomputed data for ‖[e^{-itH} A e^{itH}, B]‖ over many t.
#[derive(Debug, Clone)]
pub struct CommutatorProbe {
    spectrum: Spectrum,
    a_eig: Mat,
    b_full: Mat,
    hermitian: bool,
}

impl CommutatorProbe {
    pub fn new(h: &LocalOperator, a: &LocalOperator, b: &LocalOperator) -> Result<CommutatorProbe> {
        let full = h.support();
        let spectrum = h.eig_herm()?;
        let a_full = a.embed(full)?.into_matrix();
        let b_full = b.embed(full)?.into_matrix();
        let tol = crate::algebra::tolerances().herm;
        let hermitian = a.hermitian_deviation() <= tol && b.hermitian_deviation() <= tol;
        Ok(CommutatorProbe {
            a_eig: spectrum.to_eigenbasis(&a_full),
            spectrum,
            b_full,
            hermitian,
        })
    }

    /// e^{-itH} A e^{itH} on the full region.
    pub fn evolved(&self, t: f64) -> Mat {
        let e = &self.spectrum.values;
        let rot = Mat::from_shape_fn(self.a_eig.dim(), |(i, j)| {
            let ph = -t * (e[i] - e[j]);
            self.a_eig[[i, j]] * c(ph.cos(), ph.sin())
        });
        self.spectrum.from_eigenbasis(&rot)
    }

    pub fn norm_at(&self, t: f64) -> Result<f64> {
        let at = self.evolved(t);
        let comm = at.dot(&self.b_full) - self.b_full.dot(&at);
        if self.hermitian {
            // i[A(t), B] is Hermitian
            let ic = dense::hermitize(&(comm * c(0.0, 1.0)));
            let ev = dense::eigvalsh(&ic)?;
            Ok(ev.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
        } else {
            dense::op_norm(&comm)
        }
    }
}

/// ‖[e^{-itH} A e^{itH}, B]‖, exact.
pub fn commutator_norm(
    h: &LocalOperator,
    a: &LocalOperator,
    b: &LocalOperator,
    t: f64,
) -> Result<f64> {
    CommutatorProbe::new(h, a, b)?.norm_at(t)
}

/// Parameters of an analytic Lieb-Robinson bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LrBoundSpec {
    /// Exponentially decaying interaction with ‖Ψ‖_b = `psi_norm`.
    ShortRange { b: f64, psi_norm: f64 },
    /// As `ShortRange`, for H + V with V on the evolved observable's support.
    PerturbedShortRange { b: f64, psi_norm: f64, v_norm: f64 },
    /// Polynomially decaying interaction; `v` = c ‖Ψ‖_{F_α}.
    LongRange {
        alpha: f64,
        sigma: f64,
        prefactor: f64,
        v: f64,
        nu: usize,
    },
}

impl LrBoundSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            LrBoundSpec::ShortRange { b, psi_norm }
            | LrBoundSpec::PerturbedShortRange { b, psi_norm, .. } => {
                if !(b > 0.0) || !(psi_norm >= 0.0) {
                    return bad(format!(
                        "need b > 0 and a nonnegative norm (b = {b}, norm = {psi_norm})"
                    ));
                }
                if let LrBoundSpec::PerturbedShortRange { v_norm, .. } = *self {
                    if !(v_norm >= 0.0) {
                        return bad(format!("negative perturbation norm {v_norm}"));
                    }
                }
            }
            LrBoundSpec::LongRange {
                alpha,
                sigma,
                prefactor,
                v,
                nu,
            } => {
                let lo = (nu as f64 + 1.0) / (alpha + 1.0);
                if !(alpha > nu as f64)
                    || !(sigma > lo && sigma < 1.0)
                    || !(prefactor > 0.0)
                    || !(v >= 0.0)
                {
                    return bad(format!(
                        "long-range bound needs alpha > nu, sigma in ({lo}, 1), positive constants"
                    ));
                }
            }
        }
        Ok(())
    }

    /// v_b = 2‖Ψ‖_b / b for the short-range kinds.
    pub fn velocity(&self) -> Option<f64> {
        match *self {
            LrBoundSpec::ShortRange { b, psi_norm }
            | LrBoundSpec::PerturbedShortRange { b, psi_norm, .. } => Some(2.0 * psi_norm / b),
            LrBoundSpec::LongRange { .. } => None,
        }
    }
}

fn site_distances(x: &Region, y: &Region) -> Vec<Distance> {
    x.sites().iter().map(|&s| y.dist_to_site(s)).collect()
}

/// Σ_{x∈X} e^{-b d(x,Y)}; empty Y contributes nothing.
pub fn exp_site_sum(x: &Region, y: &Region, b: f64) -> f64 {
    site_distances(x, y)
        .into_iter()
        .filter_map(Distance::finite)
        .map(|d| (-b * d as f64).exp())
        .sum()
}

/// 2 e^{b v_b |t|} Σ_{x∈X} e^{-b d(x,Y)}, for unit-norm observables.
pub fn lr_bound_short_range(b: f64, psi_norm: f64, x: &Region, y: &Region, t: f64) -> f64 {
    let vb = 2.0 * psi_norm / b;
    2.0 * (b * vb * t.abs()).exp() * exp_site_sum(x, y, b)
}

/// 2 (1 + 2‖V‖/(b v_b)) e^{b v_b |t|} Σ_{x∈X} e^{-b d(x,Y)} for the dynamics of
/// H + V with V supported on X. With v_b = 0 the integral is taken exactly.
pub fn lr_bound_perturbed(
    b: f64,
    psi_norm: f64,
    v_norm: f64,
    x: &Region,
    y: &Region,
    t: f64,
) -> f64 {
    let vb = 2.0 * psi_norm / b;
    let sum = exp_site_sum(x, y, b);
    if vb == 0.0 {
        return 2.0 * (1.0 + 2.0 * v_norm * t.abs()) * sum;
    }
    2.0 * (1.0 + 2.0 * v_norm / (b * vb)) * (b * vb * t.abs()).exp() * sum
}

/// ζ^H(Y,Z,|t|) + 2‖V‖ min_{W∈{Z,Y}} ∫_0^{|t|} ζ^H(X,W,s) ds for an arbitrary
/// bound `zeta(from, to, t)` of H, with V on X, A on Y and B on Z.
pub fn lr_bound_perturbed_general(
    zeta: impl Fn(&Region, &Region, f64) -> f64,
    v_norm: f64,
    x: &Region,
    y: &Region,
    z: &Region,
    t: f64,
) -> Result<f64> {
    let t = t.abs();
    let base = zeta(y, z, t);
    if t == 0.0 || v_norm == 0.0 {
        return Ok(base);
    }
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-9,
        ..QuadOptions::default()
    };
    let mut best = f64::INFINITY;
    for w in [z, y] {
        let q = quadrature::integrate(|s| zeta(x, w, s), 0.0, t, &opts)?;
        best = best.min(q.value + q.error);
    }
    Ok(base + 2.0 * v_norm * best)
}

fn long_range_terms(alpha: f64, sigma: f64, x: &Region, y: &Region, vt: f64, growth: f64) -> f64 {
    let one_s = 1.0 - sigma;
    site_distances(x, y)
        .into_iter()
        .filter_map(Distance::finite)
        .map(|d| {
            let r = d as f64;
            (vt - r.powf(one_s)).exp() + growth * (1.0 + r).powf(-sigma * alpha)
        })
        .sum()
}

/// Which form of the long-range bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LongRangeForm {
    /// C Σ_x (e^{v|t| - r^{1-σ}} + v|t|(1 + (v|t|)^{ν/(1-σ)}) F_{σα}(r)).
    Full,
    /// Growth factor 1 + (v|t|)^{1+ν/(1-σ)}.
    Simplified,
    /// Growth factor 1 + (v|t|)^{2+ν/(1-σ)}, times (1 + ‖V‖).
    Perturbed { v_norm: f64 },
}

/// Long-range Lieb-Robinson bound with unit-norm observables.
pub fn lr_bound_long_range(
    spec: &LrBoundSpec,
    form: LongRangeForm,
    x: &Region,
    y: &Region,
    t: f64,
) -> Result<f64> {
    let LrBoundSpec::LongRange {
        alpha,
        sigma,
        prefactor,
        v,
        nu,
    } = *spec
    else {
        return Err(Error::InvalidParameter(
            "long-range evaluator needs a long_range spec".into(),
        ));
    };
    spec.validate()?;
    let vt = v * t.abs();
    let k = nu as f64 / (1.0 - sigma);
    let (growth, extra) = match form {
        LongRangeForm::Full => (vt * (1.0 + vt.powf(k)), 1.0),
        LongRangeForm::Simplified => (1.0 + vt.powf(1.0 + k), 1.0),
        LongRangeForm::Perturbed { v_norm } => (1.0 + vt.powf(2.0 + k), 1.0 + v_norm),
    };
    Ok(prefactor * extra * long_range_terms(alpha, sigma, x, y, vt, growth))
}

/// Dispatches a spec to its evaluator (long-range uses the full form).
pub fn lr_bound(spec: &LrBoundSpec, x: &Region, y: &Region, t: f64) -> Result<f64> {
    spec.validate()?;
    match *spec {
        LrBoundSpec::ShortRange { b, psi_norm } => Ok(lr_bound_short_range(b, psi_norm, x, y, t)),
        LrBoundSpec::PerturbedShortRange {
            b,
            psi_norm,
            v_norm,
        } => Ok(lr_bound_perturbed(b, psi_norm, v_norm, x, y, t)),
        LrBoundSpec::LongRange { .. } => lr_bound_long_range(spec, LongRangeForm::Full, x, y, t),
    }
}

/// ((1+b)/b) |∂X| e^{-br}, the boundary form of Σ_{x∈X} e^{-b d(x, Λ∖X_r)}.
pub fn boundary_sum_bound(b: f64, boundary: usize, r: usize) -> f64 {
    (1.0 + b) / b * boundary as f64 * (-b * r as f64).exp()
}
