use serde::Serialize;

use super::certificate::DcCertificate;
use crate::error::{Error, Result};
use crate::gibbs::GibbsState;
use crate::interactions::{DecayFunction, Interaction};
use crate::lattice::Region;
use crate::liebrobinson::{lr_bound_long_range, LongRangeForm, LrBoundSpec};
use crate::LocalOperator;

/// One size of an SLT-stability sweep. `scale` is
/// β ‖Ψ_V‖_F |Y| (1 + f_Cov(|Y|)) ‖B‖ and `implied_constant` = lhs / scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SltPoint {
    pub sites: usize,
    pub lhs: f64,
    pub scale: f64,
    pub implied_constant: f64,
}

/// |Tr ρ(0)B - Tr ρ(1)B| with ρ(s) the Gibbs state of Ψ_H + sΨ_V on Λ.
/// The theorem's constant is existential, so the driver reports the
/// constant the measurement implies.
#[allow(clippy::too_many_arguments)]
pub fn slt_stability(
    psi_h: &Interaction,
    psi_v: &Interaction,
    lambda: &Region,
    beta: f64,
    b: &LocalOperator,
    dc: &DcCertificate,
    f_decay: &DecayFunction,
) -> Result<SltPoint> {
    if !b.support().is_subset(lambda) {
        return Err(Error::NotSubset {
            inner: b.support().sites().to_vec(),
            outer: lambda.sites().to_vec(),
        });
    }
    let h0 = psi_h.assemble(lambda)?;
    let h1 = psi_h.add_scaled(psi_v, 1.0)?.assemble(lambda)?;
    let m0 = GibbsState::new(&h0, beta)?.expect(b)?.re;
    let m1 = GibbsState::new(&h1, beta)?.expect(b)?.re;
    let lhs = (m0 - m1).abs();
    let ny = b.support().len();
    let scale = beta
        * psi_v.restrict(lambda).norm_f(f_decay)
        * ny as f64
        * (1.0 + dc.f.eval(ny))
        * b.op_norm()?;
    let implied_constant = if scale > 0.0 { lhs / scale } else { 0.0 };
    Ok(SltPoint {
        sites: lambda.len(),
        lhs,
        scale,
        implied_constant,
    })
}

/// Smallest prefactor C for which the long-range Lieb-Robinson bound holds
/// on every training sample (X, Y, t, measured commutator norm).
pub fn calibrate_lr_prefactor(
    spec: &LrBoundSpec,
    form: LongRangeForm,
    samples: &[(Region, Region, f64, f64)],
) -> Result<f64> {
    let LrBoundSpec::LongRange {
        alpha,
        sigma,
        v,
        nu,
        ..
    } = *spec
    else {
        return Err(Error::InvalidParameter(
            "calibration needs a long_range spec".into(),
        ));
    };
    let unit = LrBoundSpec::LongRange {
        alpha,
        sigma,
        prefactor: 1.0,
        v,
        nu,
    };
    let mut c: f64 = 0.0;
    for (x, y, t, measured) in samples {
        let base = lr_bound_long_range(&unit, form, x, y, *t)?;
        if base > 0.0 {
            c = c.max(measured / base);
        } else if *measured > 0.0 {
            return Err(Error::Infeasible(format!(
                "bound vanishes at t = {t} where the commutator is {measured}"
            )));
        }
    }
    Ok(c)
}
