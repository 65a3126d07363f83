//! Decay certificates and the implications chaining them:
//! decay of correlations → LPPL → local indistinguishability → decay of
//! correlations. A decay profile is a table over integer distances plus a
//! closed-form majorant for everything past the table.

use serde::{Serialize, Serializer};

use super::dc::DcSeries;
use super::fit::{fit_decay, DecayFit, DecayModel, NOISE_FLOOR};
use crate::error::{Error, Result};
use crate::interactions::DecayFunction;

/// Default number of tabulated distances.
pub const DEFAULT_TABLE_LEN: usize = 2048;

/// M (1 + r)^k F(r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayLaw {
    pub prefactor: f64,
    pub poly: f64,
    pub decay: DecayFunction,
}

impl DecayLaw {
    pub fn exponential(prefactor: f64, rate: f64) -> DecayLaw {
        DecayLaw {
            prefactor,
            poly: 0.0,
            decay: DecayFunction::Exponential { b: rate },
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.prefactor * (1.0 + r).powf(self.poly) * self.decay.eval(r)
    }

    fn exp_rate(&self) -> Result<f64> {
        match self.decay {
            DecayFunction::Exponential { b } if b > 0.0 => Ok(b),
            other => Err(Error::InvalidParameter(format!(
                "certificate chaining needs a positive exponential rate, got {other:?}"
            ))),
        }
    }

    /// Upper bound on Σ_{q ≥ from} (1 + q)^w · eval(q).
    pub fn weighted_tail(&self, from: usize, w: f64) -> Result<f64> {
        let k = self.poly + w;
        let term = |q: usize| self.prefactor * (1.0 + q as f64).powf(k) * self.decay.eval(q as f64);
        match self.decay {
            DecayFunction::Exponential { b } if b > 0.0 => {
                // consecutive-term ratio ((q+2)/(q+1))^k e^{-b} is nonincreasing
                // in q; sum explicitly until it drops below e^{-b/2}, then geometric
                let ratio =
                    |q: usize| ((q as f64 + 2.0) / (q as f64 + 1.0)).powf(k.max(0.0)) * (-b).exp();
                let mut q = from;
                let mut s = 0.0;
                let target = (-0.5 * b).exp();
                while ratio(q) > target {
                    s += term(q);
                    q += 1;
                    if q - from > 10_000_000 {
                        return Err(Error::InvalidParameter(format!(
                            "decay rate {b} too slow to sum"
                        )));
                    }
                }
                Ok(s + term(q) / (1.0 - ratio(q)))
            }
            DecayFunction::Polynomial { alpha } => {
                let e = k - alpha;
                if e >= -1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "weighted tail diverges: exponent {e} ≥ -1"
                    )));
                }
                // terms are nonincreasing: Σ_{q≥from} ≤ term(from) + ∫_from^∞
                Ok(term(from) + self.prefactor * (1.0 + from as f64).powf(e + 1.0) / (-e - 1.0))
            }
            other => Err(Error::InvalidParameter(format!(
                "no tail bound for {other:?}"
            ))),
        }
    }
}

/// A nonnegative profile ζ(q) on integer distances: `values[q]` for
/// q < len, and the majorant `tail` beyond (and everywhere above the table).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Zeta {
    #[serde(serialize_with = "head")]
    pub values: Vec<f64>,
    pub tail: DecayLaw,
}

fn head<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().take(32))
}

impl Zeta {
    /// Tabulates min(cap, law) on 0..len.
    pub fn from_law(law: DecayLaw, len: usize, cap: f64) -> Zeta {
        Zeta {
            values: (0..len).map(|q| law.eval(q as f64).min(cap)).collect(),
            tail: law,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, q: usize) -> f64 {
        self.values
            .get(q)
            .copied()
            .unwrap_or_else(|| self.tail.eval(q as f64))
    }

    /// ζ̃(r) = 2^ν Σ_{q≥r} q^{ν-1} ζ(q) for every r < len, with the tail past
    /// the table bounded through the majorant.
    pub fn tilde_table(&self, nu: usize) -> Result<Vec<f64>> {
        let n = self.len();
        let w = nu as f64 - 1.0;
        let mut acc = self.tail.weighted_tail(n, w)?;
        let mut out = vec![0.0; n];
        for q in (0..n).rev() {
            acc += (q as f64).powi(nu as i32 - 1) * self.values[q];
            out[q] = acc;
        }
        let scale = 2f64.powi(nu as i32);
        Ok(out.into_iter().map(|v| v * scale).collect())
    }
}

/// Σ_i coeff_i · k^{power_i}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeLaw {
    pub terms: Vec<(f64, f64)>,
}

impl SizeLaw {
    pub fn constant(c: f64) -> SizeLaw {
        SizeLaw {
            terms: vec![(c, 0.0)],
        }
    }

    pub fn power(coeff: f64, power: f64) -> SizeLaw {
        SizeLaw {
            terms: vec![(coeff, power)],
        }
    }

    pub fn eval(&self, k: usize) -> f64 {
        self.terms
            .iter()
            .map(|(c, p)| c * (k as f64).powf(*p))
            .sum()
    }

    fn plus_constant(&self, c: f64) -> SizeLaw {
        let mut t = self.terms.clone();
        t.push((c, 0.0));
        SizeLaw { terms: t }
    }

    /// k ↦ s · k · self(k).
    fn times_k(&self, s: f64) -> SizeLaw {
        SizeLaw {
            terms: self.terms.iter().map(|(c, p)| (c * s, p + 1.0)).collect(),
        }
    }
}

/// g(v) = e^{rate·v} max(1, coeff · v (1 + v)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthLaw {
    pub rate: f64,
    pub coeff: f64,
}

impl GrowthLaw {
    pub fn eval(&self, v: f64) -> f64 {
        (self.rate * v).exp() * (self.coeff * v * (1.0 + v)).max(1.0)
    }
}

/// Cov(X;Y) ≤ |X|^n f(|Y|) ζ(dist(X,Y)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcCertificate {
    pub n: f64,
    pub f: SizeLaw,
    pub zeta: Zeta,
}

impl DcCertificate {
    /// C e^{-c r} with |X||Y| prefactors, C raised until it majorizes every
    /// measured point of `series` (values are compared per unit |X||Y|).
    pub fn envelope(series: &DcSeries, rate: f64, len: usize) -> Result<DcCertificate> {
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "envelope rate must be positive, got {rate}"
            )));
        }
        let mut c: f64 = 0.0;
        for p in &series.points {
            let per = p.value / (p.x.len() * p.y.len()) as f64;
            c = c.max(per * (rate * p.dist as f64).exp());
        }
        if c == 0.0 {
            c = NOISE_FLOOR;
        }
        Ok(DcCertificate {
            n: 1.0,
            f: SizeLaw::power(1.0, 1.0),
            zeta: Zeta::from_law(DecayLaw::exponential(c, rate), len, 2.0),
        })
    }

    /// From an exponential fit, with its prefactor taken as given.
    pub fn from_fit(fit: &DecayFit, n: f64, f: SizeLaw, len: usize) -> Result<DcCertificate> {
        if fit.model != DecayModel::Exponential || !(fit.rate > 0.0) {
            return Err(Error::InvalidParameter(
                "need an exponential fit with positive rate".into(),
            ));
        }
        Ok(DcCertificate {
            n,
            f,
            zeta: Zeta::from_law(DecayLaw::exponential(fit.prefactor, fit.rate), len, 2.0),
        })
    }

    pub fn bound(&self, x: usize, y: usize, dist: usize) -> f64 {
        (x as f64).powf(self.n) * self.f.eval(y) * self.zeta.eval(dist)
    }
}

/// |Tr ρ[H]B - Tr ρ[H+V]B| ≤ ‖B‖ |X|^n f(|Y|) g(‖V‖) ζ(dist(X,Y)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpplCertificate {
    pub n: f64,
    pub f: SizeLaw,
    pub g: GrowthLaw,
    pub zeta: Zeta,
}

/// |Tr ρ^Λ B - Tr ρ^{Λ'} B| ≤ ‖B‖ f(|Y|) ζ(dist(Y, Λ∖Λ')).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiCertificate {
    pub f: SizeLaw,
    pub zeta: Zeta,
}

/// Short-range ζ_QBP constants in the unperturbed mode: C_QBP and the rate
/// b/(1 + aβ).
fn qbp_constants(psi_norm: f64, b: f64, beta: f64) -> (f64, f64) {
    let c_q = 6.0 * (1.0 / psi_norm).max(1.0);
    let a = 2.0 / std::f64::consts::PI * psi_norm;
    (c_q, b / (1.0 + a * beta))
}

/// LPPL from decay of correlations in the unperturbed state, for an
/// interaction with ‖Ψ‖_b = `psi_norm`. For r < d,
/// |ΔB| ≤ e^{2β‖V‖}‖B‖ (Cov(X_r;Y) + 4β‖V‖ C_QBP (1+‖V‖)|X| e^{-c_q r}) and
/// |X_r| ≤ |X|(2r+1)^ν give the certificate with ζ(d) = min_r
/// (2r+1)^{nν} ζ_Cov(d-r) + e^{-c_q r}, capped at 2.
pub fn lppl_from_dc(
    dc: &DcCertificate,
    psi_norm: f64,
    b: f64,
    beta: f64,
    nu: usize,
    len: usize,
) -> Result<LpplCertificate> {
    if !(psi_norm > 0.0) || !(b > 0.0) {
        return Err(Error::InvalidParameter(
            "need a positive interaction norm and decay rate".into(),
        ));
    }
    let (c_qbp, c_q) = qbp_constants(psi_norm, b, beta);
    let nnu = dc.n * nu as f64;
    let mut values = vec![2.0; len];
    for (d, slot) in values.iter_mut().enumerate().skip(1) {
        let mut best = f64::INFINITY;
        for r in 0..d {
            let v =
                (2.0 * r as f64 + 1.0).powf(nnu) * dc.zeta.eval(d - r) + (-c_q * r as f64).exp();
            best = best.min(v);
        }
        *slot = best.min(2.0);
    }
    let c = dc.zeta.tail.exp_rate()?;
    let c0 = c * c_q / (c + c_q);
    let tail = DecayLaw {
        prefactor: 2f64.powf(nnu) * dc.zeta.tail.prefactor + c_q.exp(),
        poly: nnu + dc.zeta.tail.poly.max(0.0),
        decay: DecayFunction::Exponential { b: c0 },
    };
    Ok(LpplCertificate {
        n: dc.n.max(1.0),
        f: dc.f.plus_constant(1.0),
        g: GrowthLaw {
            rate: 2.0 * beta,
            coeff: 4.0 * beta * c_qbp,
        },
        zeta: Zeta { values, tail },
    })
}

/// The single-region local-indistinguishability profile
/// ζ(r) = min_{0≤R≤r} (2R+1)^{nν} ζ_LPPL(r-R) + F(R), F(R) = e^{-bR}.
pub fn removal_zeta(lppl: &LpplCertificate, b: f64, nu: usize, len: usize) -> Result<Zeta> {
    let nnu = lppl.n * nu as f64;
    let values: Vec<f64> = (0..len)
        .map(|q| {
            (0..=q)
                .map(|r| {
                    (2.0 * r as f64 + 1.0).powf(nnu) * lppl.zeta.eval(q - r) + (-b * r as f64).exp()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let c0 = lppl.zeta.tail.exp_rate()?;
    let c1 = c0 * b / (c0 + b);
    let tail = DecayLaw {
        prefactor: 2f64.powf(nnu) * lppl.zeta.tail.prefactor + b.exp(),
        poly: nnu + lppl.zeta.tail.poly.max(0.0),
        decay: DecayFunction::Exponential { b: c1 },
    };
    Ok(Zeta { values, tail })
}

/// g(v) = max(g_LPPL(v), e^{2βv} - 1), the growth factor of the removal
/// lemma.
pub fn removal_growth(lppl: &LpplCertificate, beta: f64, v: f64) -> f64 {
    lppl.g.eval(v).max((2.0 * beta * v).exp_m1())
}

/// Local indistinguishability from uniform LPPL by removing Λ∖Λ' site by
/// site: f_LI(k) = g(‖Ψ‖_F) · k · f_LPPL(k) and ζ_LI = ζ̃ of the removal
/// profile.
pub fn li_from_lppl(
    lppl: &LpplCertificate,
    psi_norm: f64,
    b: f64,
    beta: f64,
    nu: usize,
    len: usize,
) -> Result<LiCertificate> {
    let z = removal_zeta(lppl, b, nu, len)?;
    let g = removal_growth(lppl, beta, psi_norm);
    let values = z.tilde_table(nu)?;
    let c1 = z.tail.exp_rate()?;
    let k = z.tail.poly + nu as f64 - 1.0;
    let s = DecayLaw {
        prefactor: 1.0,
        poly: k,
        decay: DecayFunction::Exponential { b: c1 },
    }
    .weighted_tail(0, 0.0)?;
    let tail = DecayLaw {
        prefactor: 2f64.powi(nu as i32) * z.tail.prefactor * s,
        poly: k,
        decay: DecayFunction::Exponential { b: c1 },
    };
    Ok(LiCertificate {
        f: lppl.f.times_k(g),
        zeta: Zeta { values, tail },
    })
}

/// Decay of correlations from local indistinguishability:
/// ζ(r) = 3 min_{2ℓ<r} (ζ_LI(ℓ) + (e^{2β‖Ψ‖_F} - 1)(2ℓ+1)^ν e^{-b(r-2ℓ)}),
/// capped at 2. The region prefactor max{|X|, f_LI(|X|+|Y|)} is separate.
pub fn dc_from_li_certificate(
    li: &LiCertificate,
    psi_norm: f64,
    b: f64,
    beta: f64,
    nu: usize,
    len: usize,
) -> Result<Zeta> {
    let coupling = (2.0 * beta * psi_norm).exp_m1();
    let mut values = vec![2.0; len];
    for (r, slot) in values.iter_mut().enumerate().skip(1) {
        let mut best = f64::INFINITY;
        let mut l = 0;
        while 2 * l < r {
            let v = li.zeta.eval(l)
                + coupling
                    * (2.0 * l as f64 + 1.0).powi(nu as i32)
                    * (-b * (r - 2 * l) as f64).exp();
            best = best.min(v);
            l += 1;
        }
        *slot = (3.0 * best).min(2.0);
    }
    let c1 = li.zeta.tail.exp_rate()?;
    let c2 = c1 * b / (c1 + 2.0 * b);
    let tail = DecayLaw {
        prefactor: 3.0 * (li.zeta.tail.prefactor * c1.exp() + coupling * 2f64.powi(nu as i32)),
        poly: li.zeta.tail.poly.max(nu as f64),
        decay: DecayFunction::Exponential { b: c2 },
    };
    Ok(Zeta { values, tail })
}

/// Result of chaining DC → LPPL → LI → DC.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrip {
    pub input_prefactor: f64,
    pub input_rate: f64,
    pub lppl: LpplCertificate,
    pub li: LiCertificate,
    pub dc_out: Zeta,
    /// max{|X|, f_LI(|X|+|Y|)} for the probed region sizes.
    pub region_prefactor: f64,
    /// Exponential fit to region_prefactor · ζ_out(r) on its uncapped range.
    pub fit: DecayFit,
}

impl RoundTrip {
    pub fn prefactor(&self) -> f64 {
        self.fit.prefactor
    }

    pub fn rate(&self) -> f64 {
        self.fit.rate
    }
}

/// Chains a DC certificate around the circle for regions of sizes
/// (`x_size`, `y_size`) and fits the returned profile.
#[allow(clippy::too_many_arguments)]
pub fn round_trip(
    dc: &DcCertificate,
    psi_norm: f64,
    b: f64,
    beta: f64,
    nu: usize,
    x_size: usize,
    y_size: usize,
    len: usize,
) -> Result<RoundTrip> {
    let lppl = lppl_from_dc(dc, psi_norm, b, beta, nu, len)?;
    let li = li_from_lppl(&lppl, psi_norm, b, beta, nu, len)?;
    let dc_out = dc_from_li_certificate(&li, psi_norm, b, beta, nu, len)?;
    let region_prefactor = (x_size as f64).max(li.f.eval(x_size + y_size));
    let (mut r, mut y) = (Vec::new(), Vec::new());
    for (q, &v) in dc_out.values.iter().enumerate().skip(1) {
        if v < 2.0 {
            r.push(q as f64);
            y.push(region_prefactor * v);
        }
    }
    let fit = fit_decay(&r, &y, DecayModel::Exponential)?;
    Ok(RoundTrip {
        input_prefactor: dc.zeta.tail.prefactor,
        input_rate: dc.zeta.tail.exp_rate()?,
        lppl,
        li,
        dc_out,
        region_prefactor,
        fit,
    })
}
