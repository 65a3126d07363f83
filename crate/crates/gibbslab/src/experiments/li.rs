use super::certificate::{removal_growth, removal_zeta, LiCertificate, LpplCertificate};
use super::report::BoundReport;
use crate::error::{Error, Result};
use crate::gibbs::{covariance_region, CovarianceOptions, GibbsState};
use crate::interactions::{DecayFunction, Interaction};
use crate::lattice::Region;
use crate::LocalOperator;

fn exp_rate(f: &DecayFunction) -> Result<f64> {
    match *f {
        DecayFunction::Exponential { b } if b > 0.0 => Ok(b),
        other => Err(Error::InvalidParameter(format!(
            "removal bounds are implemented for exponential F, got {other:?}"
        ))),
    }
}

fn mean_on(psi: &Interaction, region: &Region, beta: f64, b: &LocalOperator) -> Result<f64> {
    Ok(GibbsState::new(&psi.assemble(region)?, beta)?.expect(b)?.re)
}

/// sup_x Σ_{Z∋x, diam Z ≥ d} ‖Ψ(Z)‖: a bound on the norm of every term
/// set coupling a site to regions at distance ≥ d.
pub fn coupling_tail(psi: &Interaction, d: usize) -> f64 {
    let mut per_site = vec![0.0; psi.lattice().len()];
    for (op, norm) in psi.terms_with_norms() {
        if op.support().diam().unwrap_or(0) >= d {
            for &z in op.support().sites() {
                per_site[z] += norm;
            }
        }
    }
    per_site.into_iter().fold(0.0, f64::max)
}

/// |Tr ρ^Λ B - Tr ρ^Λ[H_{Λ∖X}] B| against
/// ‖B‖ |X|^n f_LPPL(|Y|) g(|X|‖Ψ‖_F) ((2R+1)^{nν} ζ_LPPL(d-R) + F(R)) for R in
/// the grid (default 0..=d), d = dist(Y, X).
#[allow(clippy::too_many_arguments)]
pub fn li_remove_region(
    psi: &Interaction,
    lambda: &Region,
    beta: f64,
    x: &Region,
    b: &LocalOperator,
    lppl: &LpplCertificate,
    f_decay: &DecayFunction,
    r_grid: Option<&[usize]>,
) -> Result<BoundReport> {
    let y = b.support();
    if !x.is_disjoint(y) {
        return Err(Error::Overlap);
    }
    if !x.is_subset(lambda) || !y.is_subset(lambda) {
        return Err(Error::NotSubset {
            inner: x.union(y)?.sites().to_vec(),
            outer: lambda.sites().to_vec(),
        });
    }
    let nu = lambda.lattice().dim();
    let rate = exp_rate(f_decay)?;
    let d = y.dist(x)?.finite().ok_or(Error::EmptyRegion)?;
    let full = GibbsState::new(&psi.assemble(lambda)?, beta)?;
    let rest = lambda.difference(x)?;
    let cut = GibbsState::new(&psi.assemble_within(&rest, lambda)?, beta)?;
    let lhs = (full.expect(b)?.re - cut.expect(b)?.re).abs();
    let v = psi.restrict(lambda).norm_f(f_decay);
    let nx = x.len() as f64;
    let g = removal_growth(lppl, beta, nx * v);
    let pre = b.op_norm()? * nx.powf(lppl.n) * lppl.f.eval(y.len()) * g;
    let nnu = lppl.n * nu as f64;
    let grid: Vec<usize> = match r_grid {
        Some(g) => g.iter().copied().filter(|&r| r <= d).collect(),
        None => (0..=d).collect(),
    };
    let mut rep = BoundReport::new("li_remove_region");
    for r in grid {
        let z = (2.0 * r as f64 + 1.0).powf(nnu) * lppl.zeta.eval(d - r) + (-rate * r as f64).exp();
        rep.push(
            "R",
            &[("R", r as f64), ("dist", d as f64), ("zeta", z)],
            lhs,
            pre * z,
        );
    }
    Ok(rep)
}

/// Λ∖Λ' sorted by distance to Y, nearest first, ties by site index.
pub fn shell_order(y: &Region, removed: &Region) -> Vec<usize> {
    let mut sites: Vec<(usize, usize)> = removed
        .sites()
        .iter()
        .map(|&s| (y.dist_to_site(s).finite().unwrap_or(usize::MAX), s))
        .collect();
    sites.sort();
    sites.into_iter().map(|(_, s)| s).collect()
}

/// Removes Λ∖Λ' one site at a time. Records each step against its removal
/// bound (a violated step flags an intermediate lattice where the
/// certificate fails), the total against the summed bound, and the shell
/// estimate Σ_i ζ(dist(Y, x_i)) ≤ |Y| ζ̃(dist(Y, Λ∖Λ')).
#[allow(clippy::too_many_arguments)]
pub fn li_site_by_site(
    psi: &Interaction,
    lambda: &Region,
    lambda_p: &Region,
    beta: f64,
    b: &LocalOperator,
    lppl: &LpplCertificate,
    f_decay: &DecayFunction,
    order: Option<&[usize]>,
) -> Result<BoundReport> {
    let y = b.support();
    if !lambda_p.is_subset(lambda) || !y.is_subset(lambda_p) {
        return Err(Error::NotSubset {
            inner: lambda_p.sites().to_vec(),
            outer: lambda.sites().to_vec(),
        });
    }
    let nu = lambda.lattice().dim();
    let rate = exp_rate(f_decay)?;
    let removed = lambda.difference(lambda_p)?;
    let order: Vec<usize> = match order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort_unstable();
            if sorted != removed.sites() {
                return Err(Error::InvalidParameter(
                    "removal order is not a permutation of the removed sites".into(),
                ));
            }
            o.to_vec()
        }
        None => shell_order(y, &removed),
    };
    let mut rep = BoundReport::new("li_site_by_site");
    if order.is_empty() {
        rep.push("total", &[("removed", 0.0)], 0.0, 0.0);
        return Ok(rep);
    }
    let max_d = order
        .iter()
        .map(|&s| y.dist_to_site(s).finite().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let zeta = removal_zeta(lppl, rate, nu, max_d + 2)?;
    let v = psi.restrict(lambda).norm_f(f_decay);
    let pre = b.op_norm()? * lppl.f.eval(y.len()) * removal_growth(lppl, beta, v);

    let mut current = lambda.clone();
    let mut prev = mean_on(psi, &current, beta, b)?;
    let first = prev;
    let mut zeta_sum = 0.0;
    for (i, &site) in order.iter().enumerate() {
        current = current.difference(&Region::single(lambda.lattice(), site))?;
        let now = mean_on(psi, &current, beta, b)?;
        let d = y.dist_to_site(site).finite().ok_or(Error::EmptyRegion)?;
        let z = zeta.eval(d);
        zeta_sum += z;
        rep.push(
            "step",
            &[
                ("step", i as f64),
                ("site", site as f64),
                ("dist", d as f64),
            ],
            (prev - now).abs(),
            pre * z,
        );
        if rep.points.last().is_some_and(|p| p.violated()) {
            rep.note(format!(
                "certificate fails on the lattice before removing site {site}"
            ));
        }
        prev = now;
    }
    let total = (first - prev).abs();
    rep.push(
        "total",
        &[("removed", order.len() as f64)],
        total,
        pre * zeta_sum,
    );
    let d_min = y.dist(&removed)?.finite().ok_or(Error::EmptyRegion)?;
    match zeta.tilde_table(nu) {
        Ok(t) => {
            let tilde = t[d_min.min(t.len() - 1)];
            let ny = y.len() as f64;
            rep.push("shell", &[("dist", d_min as f64)], zeta_sum, ny * tilde);
            rep.push("tail", &[("dist", d_min as f64)], total, pre * ny * tilde);
        }
        Err(e) => rep.note(format!("no closed-form tail: {e}")),
    }
    Ok(rep)
}

/// Measured Cov_{ρ_β^Λ}(X;Y) against max{|X|, f_LI(|X|+|Y|)} · 3(ζ_LI(ℓ) +
/// (2ℓ+1)^ν κ(r-2ℓ)) for ℓ in the grid (default all ℓ with 2ℓ < r). The
/// coupling κ(d) is the smaller of (e^{2β‖Ψ‖_F} - 1)F(d) and
/// e^{2β t(d)} - 1 with t the [`coupling_tail`], so finite-range
/// interactions contribute exactly zero past their range.
#[allow(clippy::too_many_arguments)]
pub fn dc_from_li(
    psi: &Interaction,
    lambda: &Region,
    beta: f64,
    x: &Region,
    y: &Region,
    li: &LiCertificate,
    f_decay: &DecayFunction,
    l_grid: Option<&[usize]>,
    opts: &CovarianceOptions,
) -> Result<BoundReport> {
    let nu = lambda.lattice().dim() as i32;
    let r = x.dist(y)?.finite().ok_or(Error::EmptyRegion)?;
    let state = GibbsState::new(&psi.assemble(lambda)?, beta)?;
    let lhs = covariance_region(state.rho(), x, y, opts)?.value;
    let local = psi.restrict(lambda);
    let v = local.norm_f(f_decay);
    let pre = (x.len() as f64).max(li.f.eval(x.len() + y.len()));
    let grid: Vec<usize> = match l_grid {
        Some(g) => g.iter().copied().filter(|&l| 2 * l < r).collect(),
        None => (0..).take_while(|l| 2 * l < r).collect(),
    };
    let mut rep = BoundReport::new("dc_from_li");
    for l in grid {
        let gap = r - 2 * l;
        let kappa = ((2.0 * beta * v).exp_m1() * f_decay.eval(gap as f64))
            .min((2.0 * beta * coupling_tail(&local, gap)).exp_m1());
        let coupling = (2.0 * l as f64 + 1.0).powi(nu) * kappa;
        let rhs = pre * 3.0 * (li.zeta.eval(l) + coupling);
        rep.push(
            "l",
            &[("l", l as f64), ("dist", r as f64), ("coupling", coupling)],
            lhs,
            rhs,
        );
    }
    Ok(rep)
}
