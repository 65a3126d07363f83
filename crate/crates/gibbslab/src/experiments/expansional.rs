//! Expansionals on 1D chains.
//!
//! Everything here runs on real symmetric Hamiltonians so that 12-site
//! chains stay within one `dsyevd` call plus matrix-free products.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::fit::{fit_decay, monotone_envelope, DecayFit, DecayModel};
use crate::algebra::{self, dense, factor::FactorSplit, LocalOperator, Mat};
use crate::error::{Error, Result};
use crate::gibbs::GibbsState;
use crate::interactions::{check_translation_invariance, DecayFunction, Interaction};
use crate::lattice::Region;

/// b / (2‖Ψ‖_0), with ‖Ψ‖_0 the flat-weight norm.
pub fn beta_star(psi: &Interaction, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("b = {b} must be positive")));
    }
    let n0 = psi.norm_f(&DecayFunction::flat());
    if n0 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(b / (2.0 * n0))
}

/// Real matrix of Σ_{Z ⊆ inside} Ψ(Z) on `on`. Fails on terms with an
/// imaginary part above the Hermiticity tolerance.
pub fn assemble_real(psi: &Interaction, inside: &Region, on: &Region) -> Result<Array2<f64>> {
    if !inside.is_subset(on) {
        return Err(Error::NotSubset {
            inner: inside.sites().to_vec(),
            outer: on.sites().to_vec(),
        });
    }
    let dim = algebra::check_cap(on)?;
    let d = on.lattice().local_dim();
    let tol = algebra::tolerances().herm;
    let mut h = Array2::<f64>::zeros((dim, dim));
    for (op, norm) in psi.terms_with_norms() {
        if !op.support().is_subset(inside) {
            continue;
        }
        let m = op.matrix();
        let imag = m.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
        if imag > tol * norm.max(1.0) {
            return Err(Error::InvalidParameter(
                "real path needs real interaction terms".into(),
            ));
        }
        let pos = on.positions_of(op.support())?;
        let split = FactorSplit::new(on.len(), d, &pos);
        for i in 0..dim {
            let (ki, ri) = (split.keep_of[i], split.rest_of[i]);
            for kj in 0..split.keep_dim {
                let v = m[[ki, kj]].re;
                if v != 0.0 {
                    h[[i, split.compose(kj, ri)]] += v;
                }
            }
        }
    }
    Ok(h)
}

fn sym_exp(h: &Array2<f64>, s: f64) -> Result<Array2<f64>> {
    let (vals, vecs) = dense::eigh_real(h)?;
    let mut scaled = vecs.clone();
    for (mut col, &l) in scaled.axis_iter_mut(Axis(1)).zip(vals.iter()) {
        col *= (s * l).exp();
    }
    Ok(scaled.dot(&vecs.t()))
}

fn kron_real(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let v = a[[i, j]];
            if v != 0.0 {
                out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                    .scaled_add(v, b);
            }
        }
    }
    out
}

fn require_left_of(a: &Region, b: &Region) -> Result<()> {
    let (Some(&la), Some(&fb)) = (a.sites().last(), b.sites().first()) else {
        return Ok(());
    };
    let lat = a.lattice();
    if lat.coord(la)[0] >= lat.coord(fb)[0] {
        return Err(Error::InvalidParameter(
            "intervals must be ordered left to right".into(),
        ));
    }
    Ok(())
}

fn require_interval(r: &Region) -> Result<()> {
    if r.lattice().dim() != 1 {
        return Err(Error::InvalidParameter(
            "expansionals need a 1D lattice".into(),
        ));
    }
    if r.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let c: Vec<i64> = r.coords().iter().map(|c| c[0]).collect();
    if c.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InvalidParameter(format!(
            "region {:?} is not an interval",
            r.sites()
        )));
    }
    Ok(())
}

/// Real E = e^{s H_{VW}} e^{−s H_V} e^{−s H_W} on V ∪ W with V left of W.
fn expansional_real(psi: &Interaction, s: f64, v: &Region, w: &Region) -> Result<Array2<f64>> {
    let on = v.union(w)?;
    let h_vw = assemble_real(psi, &on, &on)?;
    let h_v = assemble_real(psi, v, v)?;
    let h_w = assemble_real(psi, w, w)?;
    let right = kron_real(&sym_exp(&h_v, -s)?, &sym_exp(&h_w, -s)?);
    Ok(sym_exp(&h_vw, s)?.dot(&right))
}

#[derive(Debug, Clone)]
pub struct Expansional {
    pub operator: LocalOperator,
    pub norm: f64,
    pub inverse_norm: f64,
}

/// e^{−βH_{VW}} e^{βH_V} e^{βH_W} for disjoint intervals V, W, with its
/// norm and the norm of its inverse from one SVD.
pub fn expansional(psi: &Interaction, beta: f64, v: &Region, w: &Region) -> Result<Expansional> {
    require_interval(v)?;
    require_interval(w)?;
    if !v.is_disjoint(w) {
        return Err(Error::Overlap);
    }
    let on = v.union(w)?;
    algebra::check_cap(&on)?;
    let h_vw = psi.assemble(&on)?;
    let e_v = psi.assemble(v)?.exp_herm(beta)?.embed(&on)?;
    let e_w = psi.assemble(w)?.exp_herm(beta)?.embed(&on)?;
    let m: Mat = h_vw
        .exp_herm(-beta)?
        .matrix()
        .dot(e_v.matrix())
        .dot(e_w.matrix());
    let sv = dense::singular_values(&m)?;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::Invariant("expansional is singular".into()));
    }
    Ok(Expansional {
        operator: LocalOperator::new(on, m)?,
        norm: max,
        inverse_norm: 1.0 / min,
    })
}

/// Largest singular value of a real linear map given by its action and the
/// action of its transpose. Lanczos on DᵀD with full reorthogonalization.
fn top_singular_value(
    n: usize,
    apply: impl Fn(&Array1<f64>) -> Array1<f64>,
    apply_t: impl Fn(&Array1<f64>) -> Array1<f64>,
    seed: u64,
) -> Result<f64> {
    let kmax = n.min(80);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5);
    q /= q.dot(&q).sqrt();
    let mut basis: Vec<Array1<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut off: Vec<f64> = Vec::new();
    let mut theta_prev = f64::NAN;
    loop {
        let j = basis.len() - 1;
        let mut w = apply_t(&apply(&basis[j]));
        let a = basis[j].dot(&w);
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.scaled_add(-c, b);
            }
        }
        let k = alpha.len();
        let mut t = Array2::<f64>::zeros((k, k));
        for i in 0..k {
            t[[i, i]] = alpha[i];
            if i + 1 < k {
                t[[i, i + 1]] = off[i];
                t[[i + 1, i]] = off[i];
            }
        }
        let (vals, _) = dense::eigh_real(&t)?;
        let theta = vals[k - 1].max(0.0);
        let bnorm = w.dot(&w).sqrt();
        let converged = (theta - theta_prev).abs() <= 1e-13 * theta.max(f64::MIN_POSITIVE);
        if converged || k >= kmax || bnorm <= 1e-14 * theta.max(1e-300) {
            return Ok(theta.sqrt());
        }
        theta_prev = theta;
        off.push(bnorm);
        basis.push(w / bnorm);
    }
}

/// ‖E_{V,W} − E_{ṼV,WW̃}‖ for intervals Ṽ V W W̃ laid out left to right.
pub fn appending_difference(
    psi: &Interaction,
    beta: f64,
    v_ext: &Region,
    v: &Region,
    w: &Region,
    w_ext: &Region,
) -> Result<f64> {
    for r in [v_ext, v, w, w_ext] {
        require_interval(r)?;
    }
    require_left_of(v_ext, v)?;
    require_left_of(v, w)?;
    require_left_of(w, w_ext)?;
    let left = v_ext.union(v)?;
    let right = w.union(w_ext)?;
    let total = left.union(&right)?;
    let n = algebra::check_cap(&total)?;
    let (d_l, d_r) = (left.hilbert_dim(), right.hilbert_dim());
    let (d_pre, d_mid, d_post) = (
        v_ext.hilbert_dim(),
        v.hilbert_dim() * w.hilbert_dim(),
        w_ext.hilbert_dim(),
    );
    debug_assert_eq!(d_pre * d_mid * d_post, n);

    let e_small = expansional_real(psi, -beta, v, w)?;
    let e_small_t = e_small.t().to_owned();
    let a = sym_exp(&assemble_real(psi, &left, &left)?, beta)?;
    let b = sym_exp(&assemble_real(psi, &right, &right)?, beta)?;
    let (vals, vecs) = dense::eigh_real(&assemble_real(psi, &total, &total)?)?;
    let weights = vals.mapv(|l| (-beta * l).exp());

    let gibbs = |x: &Array1<f64>| -> Array1<f64> {
        let mut c = vecs.t().dot(x);
        c *= &weights;
        vecs.dot(&c)
    };
    let split = |x: &Array1<f64>| -> Array1<f64> {
        let m = x.view().into_shape_with_order((d_l, d_r)).expect("shape");
        a.dot(&m).dot(&b).into_shape_with_order(n).expect("shape")
    };
    let middle = |x: &Array1<f64>, e: &Array2<f64>| -> Array1<f64> {
        let x3 = x
            .view()
            .into_shape_with_order((d_pre, d_mid, d_post))
            .expect("shape");
        let mut out = ndarray::Array3::<f64>::zeros((d_pre, d_mid, d_post));
        for p in 0..d_pre {
            out.index_axis_mut(Axis(0), p)
                .assign(&e.dot(&x3.index_axis(Axis(0), p)));
        }
        out.into_shape_with_order(n).expect("shape")
    };
    let apply = |x: &Array1<f64>| gibbs(&split(x)) - middle(x, &e_small);
    let apply_t = |x: &Array1<f64>| split(&gibbs(x)) - middle(x, &e_small_t);
    top_singular_value(n, apply, apply_t, 0x5eed)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionalSeries {
    pub beta: f64,
    pub q: Vec<usize>,
    pub norm: Vec<f64>,
    pub inverse_norm: Vec<f64>,
    pub difference: Vec<f64>,
    pub fit: Option<DecayFit>,
    pub fit_skipped: Option<String>,
}

impl ExpansionalSeries {
    /// Largest relative spread (max/min − 1) of ‖E‖ and of ‖E⁻¹‖.
    pub fn norm_spread(&self) -> f64 {
        let spread = |v: &[f64]| {
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            hi / lo - 1.0
        };
        spread(&self.norm).max(spread(&self.inverse_norm))
    }
}

/// For each q: V = [1, 1+q), W = [1+q, 1+2q) with one site appended on each
/// side. The chain must have at least 2·max(q) + 2 sites.
pub fn appending_series(psi: &Interaction, beta: f64, qs: &[usize]) -> Result<ExpansionalSeries> {
    let lat = psi.lattice();
    let mut out = ExpansionalSeries {
        beta,
        q: Vec::new(),
        norm: Vec::new(),
        inverse_norm: Vec::new(),
        difference: Vec::new(),
        fit: None,
        fit_skipped: None,
    };
    for &q in qs {
        if q == 0 || 2 * q + 2 > lat.len() {
            return Err(Error::InvalidParameter(format!(
                "q = {q} does not fit a chain of {} sites",
                lat.len()
            )));
        }
        let v = Region::range(lat, 1..1 + q);
        let w = Region::range(lat, 1 + q..1 + 2 * q);
        let e = expansional(psi, beta, &v, &w)?;
        let diff = appending_difference(
            psi,
            beta,
            &Region::single(lat, 0),
            &v,
            &w,
            &Region::single(lat, 1 + 2 * q),
        )?;
        out.q.push(q);
        out.norm.push(e.norm);
        out.inverse_norm.push(e.inverse_norm);
        out.difference.push(diff);
    }
    let r: Vec<f64> = out.q.iter().map(|&q| q as f64).collect();
    match fit_decay(&r, &out.difference, DecayModel::Exponential) {
        Ok(f) => out.fit = Some(f),
        Err(Error::InsufficientData(m)) => out.fit_skipped = Some(m),
        Err(e) => return Err(e),
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Dc1dPoint {
    pub dist: usize,
    pub exact: f64,
    pub approx: f64,
    pub error: f64,
    pub covariance: f64,
    pub identity_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dc1dReport {
    pub beta: f64,
    pub beta_star: f64,
    pub points: Vec<Dc1dPoint>,
    pub envelope: Vec<f64>,
    pub fit: Option<DecayFit>,
    pub fit_skipped: Option<String>,
}

/// Largest |Ĩ| for which the exact identity residual is also evaluated.
const IDENTITY_CHECK_SITES: usize = 10;

/// Σ_k w_k ⟨u_k|P ⊗ Q|u_k⟩ for each pair, with the eigenvectors split as
/// left block ⊗ right block.
fn product_expectations(
    vecs: &Array2<f64>,
    weights: &Array1<f64>,
    d_l: usize,
    d_r: usize,
    pairs: &[(&Array2<f64>, &Array2<f64>)],
) -> Vec<f64> {
    let n = d_l * d_r;
    let u: ArrayView2<f64> = vecs
        .view()
        .into_shape_with_order((d_l, d_r * n))
        .expect("shape");
    pairs
        .iter()
        .map(|(p, q)| {
            let t = p.dot(&u);
            let t3 = t.into_shape_with_order((d_l, d_r, n)).expect("shape");
            let u3 = vecs
                .view()
                .into_shape_with_order((d_l, d_r, n))
                .expect("shape");
            let mut per_state = Array1::<f64>::zeros(n);
            for l in 0..d_l {
                let s = q.dot(&t3.index_axis(Axis(0), l));
                per_state += &(&s * &u3.index_axis(Axis(0), l)).sum_axis(Axis(0));
            }
            per_state.dot(weights)
        })
        .collect()
}

fn real_part(m: &Mat) -> Result<Array2<f64>> {
    if !dense::is_real(m) {
        return Err(Error::InvalidParameter(
            "real path needs real observables".into(),
        ));
    }
    Ok(m.mapv(|z| z.re))
}

/// Sweeps A on site 1 against B on site 1 + d for each d. The interval
/// I = [1, 1+d] is split into halves X′ (left, rounded up) and Y′ and
/// enlarged by one site on each side. The approximant replaces the global
/// expansional of Ĩ by E_{{0},X′} ⊗ E_{Y′,{d+2}} at −β/2.
pub fn dc_1d_via_expansionals(
    psi: &Interaction,
    beta: f64,
    b: f64,
    a_site: &Mat,
    b_site: &Mat,
    dists: &[usize],
) -> Result<Dc1dReport> {
    let lat = psi.lattice().clone();
    if !check_translation_invariance(psi)?.invariant {
        return Err(Error::InvalidParameter(
            "interaction is not translation invariant".into(),
        ));
    }
    let bs = beta_star(psi, b)?;
    if !(beta > 0.0 && beta < bs) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} must lie in (0, {bs})"
        )));
    }
    let a_real = real_part(a_site)?;
    let b_real = real_part(b_site)?;
    let mut points = Vec::with_capacity(dists.len());
    for &dist in dists {
        if dist == 0 || dist + 3 > lat.len() {
            return Err(Error::InvalidParameter(format!(
                "distance {dist} does not fit a chain of {} sites",
                lat.len()
            )));
        }
        let i_reg = Region::range(&lat, 1..dist + 2);
        let enlarged = Region::range(&lat, 0..dist + 3);
        let split_at = 1 + (dist + 2) / 2;
        let x_half = Region::range(&lat, 1..split_at);
        let y_half = Region::range(&lat, split_at..dist + 2);
        let x1 = Region::single(&lat, 0);
        let y1 = Region::single(&lat, dist + 2);

        let a_op = LocalOperator::new(Region::single(&lat, 1), a_site.clone())?;
        let b_op = LocalOperator::new(Region::single(&lat, dist + 1), b_site.clone())?;
        let state = GibbsState::new(&psi.assemble(&i_reg)?, beta)?;
        let ab = a_op.embed(&i_reg)?.mul(&b_op.embed(&i_reg)?)?;
        let exact = state.expect(&ab)?.re;
        let covariance = exact - state.expect(&a_op)?.re * state.expect(&b_op)?.re;

        let left = x1.union(&x_half)?;
        let right = y_half.union(&y1)?;
        let e1 = expansional_real(psi, beta / 2.0, &x1, &x_half)?;
        let e2 = expansional_real(psi, beta / 2.0, &y_half, &y1)?;
        let d = lat.local_dim();
        let pad_a = kron_real(&Array2::eye(d), &a_real);
        let a_l = kron_real(&pad_a, &Array2::eye(left.hilbert_dim() / (d * d)));
        // B sits on the last site of Y′, one before the appended site.
        let pre = right.hilbert_dim() / (d * d);
        let b_r = kron_real(&kron_real(&Array2::eye(pre), &b_real), &Array2::eye(d));
        let o1 = e1.dot(&a_l).dot(&e1.t());
        let n1 = e1.dot(&e1.t());
        let o2 = e2.dot(&b_r).dot(&e2.t());
        let n2 = e2.dot(&e2.t());

        let (vals, vecs) = dense::eigh_real(&assemble_real(psi, &enlarged, &enlarged)?)?;
        let vecs = vecs.as_standard_layout().into_owned();
        let shift = vals[0];
        let weights = vals.mapv(|l| (-beta * (l - shift)).exp());
        let (d_l, d_r) = (left.hilbert_dim(), right.hilbert_dim());
        let ex = product_expectations(&vecs, &weights, d_l, d_r, &[(&o1, &o2), (&n1, &n2)]);
        let approx = ex[0] / ex[1];

        let identity_residual = if enlarged.len() <= IDENTITY_CHECK_SITES {
            // three-block expansional as E_{X̃I,Ỹ} E_{X̃,I}
            let inner = expansional_real(psi, beta / 2.0, &x1, &i_reg)?;
            let outer = expansional_real(psi, beta / 2.0, &x1.union(&i_reg)?, &y1)?;
            let e = outer.dot(&kron_real(&inner, &Array2::eye(d)));
            let ab_l = kron_real(&Array2::eye(d), &real_part(ab.matrix())?);
            let ab_full = kron_real(&ab_l, &Array2::eye(d));
            let num = e.dot(&ab_full).dot(&e.t());
            let den = e.dot(&e.t());
            let mut tr_num = 0.0;
            let mut tr_den = 0.0;
            for (k, col) in vecs.axis_iter(Axis(1)).enumerate() {
                tr_num += weights[k] * col.dot(&num.dot(&col));
                tr_den += weights[k] * col.dot(&den.dot(&col));
            }
            Some((exact - tr_num / tr_den).abs())
        } else {
            None
        };
        points.push(Dc1dPoint {
            dist,
            exact,
            approx,
            error: (exact - approx).abs(),
            covariance,
            identity_residual,
        });
    }
    let errors: Vec<f64> = points.iter().map(|p| p.error).collect();
    let envelope = monotone_envelope(&errors);
    let r: Vec<f64> = points.iter().map(|p| p.dist as f64).collect();
    let (fit, fit_skipped) = match fit_decay(&r, &envelope, DecayModel::Exponential) {
        Ok(f) => (Some(f), None),
        Err(Error::InsufficientData(m)) => (None, Some(m)),
        Err(e) => return Err(e),
    };
    Ok(Dc1dReport {
        beta,
        beta_star: bs,
        points,
        envelope,
        fit,
        fit_skipped,
    })
}
