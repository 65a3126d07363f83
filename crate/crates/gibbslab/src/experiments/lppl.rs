use serde::Serialize;

use super::fit::{fit_decay, DecayFit, DecayModel};
use super::report::BoundReport;
use crate::error::{Error, Result};
use crate::gibbs::{covariance_region, CovarianceOptions, GibbsState};
use crate::interactions::{DecayFunction, Interaction};
use crate::lattice::Region;
use crate::qbp::{LongRangeQbp, PerturbationPath, QbpRoute, ShortRangeQbp, SizeFactor};
use crate::LocalOperator;

/// ζ_QBP(X, r) for one perturbation region X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZetaQbp {
    ShortRange {
        qbp: ShortRangeQbp,
        size: SizeFactor,
    },
    LongRange {
        qbp: LongRangeQbp,
        size: SizeFactor,
        v_norm: Option<f64>,
    },
}

impl ZetaQbp {
    /// Short-range evaluator from ‖Ψ_Λ‖_b, ‖Ψ_Λ + V‖_b and ‖V‖.
    pub fn short_range(
        psi: &Interaction,
        lambda: &Region,
        v: &LocalOperator,
        beta: f64,
        b: f64,
    ) -> Result<ZetaQbp> {
        let f = DecayFunction::Exponential { b };
        let local = psi.restrict(lambda);
        let psi_norm = local.norm_f(&f);
        let path_norm = local
            .add_scaled(&Interaction::single(v.clone())?, 1.0)?
            .norm_f(&f);
        Ok(ZetaQbp::ShortRange {
            qbp: ShortRangeQbp {
                b,
                beta,
                psi_norm,
                path_norm: Some(path_norm),
                v_norm: v.op_norm()?,
            },
            size: SizeFactor::of_region(v.support()),
        })
    }

    pub fn eval(&self, r: usize) -> (f64, Option<QbpRoute>) {
        match *self {
            ZetaQbp::ShortRange { qbp, size } => {
                let (z, route) = qbp.eval(size, r as f64);
                (z.min(2.0), Some(route))
            }
            ZetaQbp::LongRange { qbp, size, v_norm } => {
                (qbp.eval(size, r as f64, v_norm).min(2.0), None)
            }
        }
    }
}

/// One LPPL instance: Λ, β, a Hermitian V on X and an observable B on Y.
#[derive(Debug, Clone)]
pub struct LpplInstance<'a> {
    pub psi: &'a Interaction,
    pub lambda: Region,
    pub beta: f64,
    pub v: LocalOperator,
    pub b: LocalOperator,
}

impl LpplInstance<'_> {
    fn dist(&self) -> Result<usize> {
        let (x, y) = (self.v.support(), self.b.support());
        if !x.is_disjoint(y) {
            return Err(Error::Overlap);
        }
        x.dist(y)?.finite().ok_or(Error::EmptyRegion)
    }

    fn path(&self) -> Result<PerturbationPath> {
        PerturbationPath::new(self.psi.assemble(&self.lambda)?, self.v.clone())
    }

    fn x_r(&self, r: usize) -> Result<Region> {
        self.v.support().neighborhood(r).intersection(&self.lambda)
    }
}

fn expect_re(state: &GibbsState, b: &LocalOperator) -> Result<f64> {
    Ok(state.expect(b)?.re)
}

fn grid_or_default(r_grid: Option<&[usize]>, d: usize) -> Vec<usize> {
    match r_grid {
        Some(g) => g.iter().copied().filter(|&r| r < d).collect(),
        None => (0..d).collect(),
    }
}

/// |Tr ρ(0)B - Tr ρ(1)B| against e^{2β‖V‖}‖B‖(Cov_{ρ(0)}(X_r;Y) + 4β‖V‖ζ_QBP(X,r))
/// at each r of the grid (default 0..dist(X,Y)).
pub fn lppl_unperturbed(
    inst: &LpplInstance,
    zeta: &ZetaQbp,
    r_grid: Option<&[usize]>,
    opts: &CovarianceOptions,
) -> Result<BoundReport> {
    let d = inst.dist()?;
    let path = inst.path()?;
    let rho0 = GibbsState::new(&path.h, inst.beta)?;
    let rho1 = GibbsState::new(&path.hamiltonian_at(1.0)?, inst.beta)?;
    let lhs = (expect_re(&rho0, &inst.b)? - expect_re(&rho1, &inst.b)?).abs();
    let vn = path.v_norm()?;
    let bn = inst.b.op_norm()?;
    let beta = inst.beta;
    let mut rep = BoundReport::new("lppl_unperturbed");
    for r in grid_or_default(r_grid, d) {
        let cov = covariance_region(rho0.rho(), &inst.x_r(r)?, inst.b.support(), opts)?.value;
        let (z, route) = zeta.eval(r);
        let rhs = (2.0 * beta * vn).exp() * bn * (cov + 4.0 * beta * vn * z);
        rep.push(
            "r",
            &[
                ("r", r as f64),
                ("dist", d as f64),
                ("cov", cov),
                ("zeta_qbp", z),
            ],
            lhs,
            rhs,
        );
        if let Some(route) = route {
            rep.note(format!("r = {r}: zeta_qbp route {route:?}"));
        }
    }
    Ok(rep)
}

/// n Chebyshev-Lobatto nodes on [0, 1].
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5];
    }
    (0..n)
        .map(|k| 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// |Tr ρ(0)B - Tr ρ(1)B| against β‖V‖‖B‖(sup_s Cov_{ρ(s)}(X_r;Y) + 2ζ_QBP(X,r)),
/// the sup taken over `s_grid` (default 17 Chebyshev nodes).
pub fn lppl_along_path(
    inst: &LpplInstance,
    zeta: &ZetaQbp,
    r_grid: Option<&[usize]>,
    s_grid: Option<&[f64]>,
    opts: &CovarianceOptions,
) -> Result<BoundReport> {
    let d = inst.dist()?;
    let path = inst.path()?;
    let nodes = s_grid.map_or_else(|| chebyshev_nodes(17), <[f64]>::to_vec);
    if nodes.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidParameter("s grid must lie in [0, 1]".into()));
    }
    let states = nodes
        .iter()
        .map(|&s| GibbsState::new(&path.hamiltonian_at(s)?, inst.beta))
        .collect::<Result<Vec<_>>>()?;
    let rho1 = GibbsState::new(&path.hamiltonian_at(1.0)?, inst.beta)?;
    let rho0 = GibbsState::new(&path.h, inst.beta)?;
    let lhs = (expect_re(&rho0, &inst.b)? - expect_re(&rho1, &inst.b)?).abs();
    let vn = path.v_norm()?;
    let bn = inst.b.op_norm()?;
    let mut rep = BoundReport::new("lppl_along_path");
    for r in grid_or_default(r_grid, d) {
        let xr = inst.x_r(r)?;
        let mut sup: f64 = 0.0;
        for st in &states {
            sup = sup.max(covariance_region(st.rho(), &xr, inst.b.support(), opts)?.value);
        }
        let (z, _) = zeta.eval(r);
        let rhs = inst.beta * vn * bn * (sup + 2.0 * z);
        rep.push(
            "r",
            &[
                ("r", r as f64),
                ("dist", d as f64),
                ("sup_cov", sup),
                ("zeta_qbp", z),
            ],
            lhs,
            rhs,
        );
    }
    Ok(rep)
}

/// LPPL response |Tr ρ(0)B - Tr ρ(1)B| for a fixed V and several B,
/// keyed by dist(X, Y).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpplSeries {
    pub dist: Vec<usize>,
    pub lhs: Vec<f64>,
    pub fit: Option<DecayFit>,
}

pub fn lppl_decay_series(
    psi: &Interaction,
    lambda: &Region,
    beta: f64,
    v: &LocalOperator,
    observables: &[LocalOperator],
) -> Result<LpplSeries> {
    let path = PerturbationPath::new(psi.assemble(lambda)?, v.clone())?;
    let rho0 = GibbsState::new(&path.h, beta)?;
    let rho1 = GibbsState::new(&path.hamiltonian_at(1.0)?, beta)?;
    let mut dist = Vec::new();
    let mut lhs = Vec::new();
    for b in observables {
        let d = v
            .support()
            .dist(b.support())?
            .finite()
            .ok_or(Error::EmptyRegion)?;
        dist.push(d);
        lhs.push((expect_re(&rho0, b)? - expect_re(&rho1, b)?).abs());
    }
    let r: Vec<f64> = dist.iter().map(|&d| d as f64).collect();
    let fit = match fit_decay(&r, &lhs, DecayModel::Exponential) {
        Ok(f) => Some(f),
        Err(Error::InsufficientData(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(LpplSeries { dist, lhs, fit })
}
