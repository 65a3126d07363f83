//! Quantum belief propagation: the filter pair, the filtered generator,
//! its strictly local approximants, the s-evolutions and the locality
//! error evaluators.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::algebra::{c, dense, LocalOperator, Mat, Spectrum};
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::quadrature::{self, QuadOptions};

/// tanh(βω/2) / (βω/2), equal to 1 at ω = 0.
pub fn f_hat(beta: f64, omega: f64) -> f64 {
    let x = 0.5 * beta * omega;
    if (beta * omega).abs() < 1e-6 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    } else {
        x.tanh() / x
    }
}

/// (2/βπ) ln((e^{π|t|/β} + 1)/(e^{π|t|/β} - 1)); +∞ at t = 0.
pub fn f_time(beta: f64, t: f64) -> f64 {
    if t == 0.0 {
        return f64::INFINITY;
    }
    let x = PI * t.abs() / beta;
    let q = (-x).exp();
    if q < 0.5 {
        2.0 / (beta * PI) * (q.ln_1p() - (-q).ln_1p())
    } else {
        2.0 / (beta * PI) * (q.ln_1p() - (-(-x).exp_m1()).ln())
    }
}

/// Pointwise majorant (4/βπ) / (e^{π|t|/β} - 1).
pub fn f_time_bound(beta: f64, t: f64) -> f64 {
    4.0 / (beta * PI) / (PI * t.abs() / beta).exp_m1()
}

/// Bound on ∫_{|t|≥T} f_β, valid for T ≥ (β/π) ln 2.
pub fn f_tail_bound(beta: f64, big_t: f64) -> f64 {
    16.0 / (PI * PI) * (-PI * big_t / beta).exp()
}

/// ∫_R f_β by quadrature: log substitution on (0, β], Gauss-Kronrod on
/// [β, 40β], and the tail bound beyond.
pub fn filter_l1(beta: f64, opts: &QuadOptions) -> Result<(f64, f64)> {
    let near = quadrature::integrate_from_singular_origin(|t| f_time(beta, t), beta, opts)?;
    let far = quadrature::integrate(|t| f_time(beta, t), beta, 40.0 * beta, opts)?;
    let tail = f_tail_bound(beta, 40.0 * beta) / 2.0;
    Ok((
        2.0 * (near.value + far.value),
        2.0 * (near.error + far.error) + 2.0 * tail,
    ))
}

fn embed_on(v: &LocalOperator, region: &Region) -> Result<Mat> {
    Ok(v.embed(region)?.into_matrix())
}

/// Φ in the eigenbasis of H: entries f̂(E_b - E_a) V_ab. Returns the
/// rotated V alongside for expectation values.
fn phi_eigenbasis(spec: &Spectrum, v: &Mat, beta: f64) -> (Mat, Mat) {
    let vr = spec.to_eigenbasis(v);
    let e = &spec.values;
    let phi = Mat::from_shape_fn(vr.dim(), |(a, b)| vr[[a, b]] * f_hat(beta, e[b] - e[a]));
    (phi, vr)
}

/// Φ_β^H(V) for V given as a full matrix on the spectrum's space.
pub fn phi_spectral_with(spec: &Spectrum, v: &Mat, beta: f64) -> Mat {
    let (phi, _) = phi_eigenbasis(spec, v, beta);
    spec.from_eigenbasis(&phi)
}

/// Φ_β^H(V) = Σ_ab f̂(E_b - E_a) V_ab |a⟩⟨b|, on the support of H.
pub fn phi_spectral(h: &LocalOperator, v: &LocalOperator, beta: f64) -> Result<LocalOperator> {
    check_hermitian(v)?;
    let spec = h.eig_herm()?;
    let vm = embed_on(v, h.support())?;
    LocalOperator::new(h.support().clone(), phi_spectral_with(&spec, &vm, beta))
}

fn check_hermitian(v: &LocalOperator) -> Result<()> {
    let dev = v.hermitian_deviation();
    if dev > crate::algebra::tolerances().herm {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// ∫_{-T}^{T} f_β(t) e^{-itH} V e^{itH} dt by quadrature. The integrand is
/// evaluated in the eigenbasis of H; each half-line is split at min(T, β)
/// with a log substitution near t = 0. Returns the operator and the
/// quadrature error estimate (Frobenius).
pub fn phi_time(
    h: &LocalOperator,
    v: &LocalOperator,
    beta: f64,
    big_t: f64,
    opts: &QuadOptions,
) -> Result<(LocalOperator, f64)> {
    check_hermitian(v)?;
    let spec = h.eig_herm()?;
    let vr = spec.to_eigenbasis(&embed_on(v, h.support())?);
    let e = spec.values.clone();
    if big_t <= 0.0 {
        return Ok((LocalOperator::zero(h.support().clone())?, 0.0));
    }
    // e^{-itH} V e^{itH} has entries V_ab e^{-it(E_a - E_b)}
    let integrand = |t: f64| -> Mat {
        let w = f_time(beta, t);
        Mat::from_shape_fn(vr.dim(), |(a, b)| {
            let ph = -t * (e[a] - e[b]);
            vr[[a, b]] * c(w * ph.cos(), w * ph.sin())
        })
    };
    let split = big_t.min(beta);
    let mut total = Mat::zeros(vr.dim());
    let mut err = 0.0;
    for sign in [1.0, -1.0] {
        let g = |t: f64| integrand(sign * t);
        let near = quadrature::integrate_from_singular_origin(g, split, opts)?;
        total += &near.value;
        err += near.error;
        if big_t > split {
            let far = quadrature::integrate(g, split, big_t, opts)?;
            total += &far.value;
            err += far.error;
        }
    }
    let m = spec.from_eigenbasis(&total);
    Ok((LocalOperator::new(h.support().clone(), m)?, err))
}

#[derive(Debug, Clone)]
pub struct LocalApprox {
    /// Approximant supported on X_r.
    pub delta: LocalOperator,
    /// ‖Φ - Δ_r‖ measured exactly.
    pub error: f64,
    pub phi: LocalOperator,
}

/// Δ_r = ∫ f_β(t) E_{X_r}(e^{-itH} V e^{itH}) dt, X = support(V). The
/// conditional expectation is linear and time independent, so Δ_r equals
/// E_{X_r}(Φ) and is computed that way.
pub fn phi_local(h: &LocalOperator, v: &LocalOperator, beta: f64, r: usize) -> Result<LocalApprox> {
    let phi = phi_spectral(h, v, beta)?;
    let xr = v.support().neighborhood(r).intersection(h.support())?;
    let delta = phi.conditional_expectation(&xr)?;
    let diff = phi.sub(&delta)?;
    let error = diff.op_norm()?;
    Ok(LocalApprox { delta, error, phi })
}

/// H(s) = H + sV for s ∈ [0, 1].
#[derive(Debug, Clone)]
pub struct PerturbationPath {
    pub h: LocalOperator,
    pub v: LocalOperator,
}

impl PerturbationPath {
    pub fn new(h: LocalOperator, v: LocalOperator) -> Result<PerturbationPath> {
        if h.hermitian_deviation() > crate::algebra::tolerances().herm {
            return Err(Error::NotHermitian {
                deviation: h.hermitian_deviation(),
            });
        }
        check_hermitian(&v)?;
        if !v.support().is_subset(h.support()) {
            return Err(Error::NotSubset {
                inner: v.support().sites().to_vec(),
                outer: h.support().sites().to_vec(),
            });
        }
        Ok(PerturbationPath { h, v })
    }

    pub fn region(&self) -> &Region {
        self.h.support()
    }

    pub fn v_full(&self) -> Result<Mat> {
        embed_on(&self.v, self.h.support())
    }

    pub fn hamiltonian_at(&self, s: f64) -> Result<LocalOperator> {
        let m = self.h.matrix() + &(self.v_full()? * c(s, 0.0));
        LocalOperator::new(self.region().clone(), dense::hermitize(&m))
    }

    pub fn v_norm(&self) -> Result<f64> {
        self.v.op_norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaVariant {
    /// Generator Φ(V).
    Plain,
    /// Generator Φ(V - ⟨V⟩_{ρ(s)}).
    Tilde,
}

#[derive(Debug, Clone, Copy)]
pub struct EtaOptions {
    /// Target for the Richardson error estimate, relative to ‖η‖.
    pub tol: f64,
    pub initial_steps: usize,
    pub max_steps: usize,
}

impl Default for EtaOptions {
    fn default() -> Self {
        EtaOptions {
            tol: 1e-12,
            initial_steps: 8,
            max_steps: 4096,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EtaSolution {
    /// Integrator nodes in s.
    pub s: Vec<f64>,
    /// η at each node (extrapolated), on the full region.
    pub eta: Vec<Mat>,
    pub steps: usize,
    pub error_estimate: f64,
    pub region: Region,
}

impl EtaSolution {
    pub fn last(&self) -> &Mat {
        self.eta.last().expect("at least one node")
    }

    /// Operator norms of η at every node.
    pub fn norms(&self) -> Result<Vec<f64>> {
        self.eta.iter().map(dense::op_norm).collect()
    }
}

struct Generator<'a> {
    path: &'a PerturbationPath,
    beta: f64,
    variant: EtaVariant,
    local: Option<Region>,
    v_full: Mat,
    cache: RefCell<HashMap<u64, Mat>>,
}

impl Generator<'_> {
    fn at(&self, s: f64) -> Result<Mat> {
        if let Some(g) = self.cache.borrow().get(&s.to_bits()) {
            return Ok(g.clone());
        }
        let hs = self.path.hamiltonian_at(s)?;
        let spec = hs.eig_herm()?;
        let (phi_e, vr) = phi_eigenbasis(&spec, &self.v_full, self.beta);
        let mut g = spec.from_eigenbasis(&phi_e);
        if let Some(xr) = &self.local {
            let full = self.path.region();
            let phi = LocalOperator::new(full.clone(), g)?;
            g = phi.conditional_expectation(xr)?.embed(full)?.into_matrix();
        }
        if self.variant == EtaVariant::Tilde {
            let mean = gibbs_mean(&spec, &vr, self.beta);
            for i in 0..g.nrows() {
                g[[i, i]] -= c(mean, 0.0);
            }
        }
        let g = g * c(-0.5 * self.beta, 0.0);
        self.cache.borrow_mut().insert(s.to_bits(), g.clone());
        Ok(g)
    }
}

/// ⟨V⟩ in the Gibbs state of the spectrum, V given in the eigenbasis.
fn gibbs_mean(spec: &Spectrum, vr: &Mat, beta: f64) -> f64 {
    let e0 = spec.min();
    let mut z = 0.0;
    let mut acc = 0.0;
    for (a, &e) in spec.values.iter().enumerate() {
        let w = (-beta * (e - e0)).exp();
        z += w;
        acc += w * vr[[a, a]].re;
    }
    acc / z
}

fn rk4(gen: &Generator<'_>, n: usize) -> Result<Vec<Mat>> {
    let dim = gen.v_full.nrows();
    let h = 1.0 / n as f64;
    let mut eta = dense::identity(dim);
    let mut out = vec![eta.clone()];
    for k in 0..n {
        let s = k as f64 * h;
        let g0 = gen.at(s)?;
        let g1 = gen.at(s + 0.5 * h)?;
        let g2 = gen.at(s + h)?;
        let k1 = g0.dot(&eta);
        let k2 = g1.dot(&(&eta + &(&k1 * c(0.5 * h, 0.0))));
        let k3 = g1.dot(&(&eta + &(&k2 * c(0.5 * h, 0.0))));
        let k4 = g2.dot(&(&eta + &(&k3 * c(h, 0.0))));
        let incr = (k1 + &(k2 * c(2.0, 0.0)) + &(k3 * c(2.0, 0.0)) + &k4) * c(h / 6.0, 0.0);
        eta += &incr;
        out.push(eta.clone());
    }
    Ok(out)
}

/// Solves dη/ds = -(β/2) G(s) η, η(0) = 1, on s ∈ [0, 1] with classical RK4
/// and step halving until the Richardson estimate meets `opts.tol`. With
/// `r`, G is replaced by its conditional expectation onto X_r.
pub fn eta(
    path: &PerturbationPath,
    beta: f64,
    variant: EtaVariant,
    r: Option<usize>,
    opts: &EtaOptions,
) -> Result<EtaSolution> {
    let local = match r {
        Some(r) => Some(
            path.v
                .support()
                .neighborhood(r)
                .intersection(path.region())?,
        ),
        None => None,
    };
    let gen = Generator {
        path,
        beta,
        variant,
        local,
        v_full: path.v_full()?,
        cache: RefCell::new(HashMap::new()),
    };
    let mut n = opts.initial_steps.max(1);
    let mut coarse = rk4(&gen, n)?;
    loop {
        let fine = rk4(&gen, 2 * n)?;
        let mut est: f64 = 0.0;
        let mut nodes = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let f = &fine[2 * k];
            let d = f - &coarse[k];
            let scale = dense::frobenius(f).max(1.0);
            est = est.max(dense::frobenius(&d) / 15.0 / scale);
            nodes.push(f + &(d * c(1.0 / 15.0, 0.0)));
        }
        if est <= opts.tol || 2 * n >= opts.max_steps {
            if est > opts.tol {
                return Err(Error::Integrator {
                    residual: est,
                    tol: opts.tol,
                });
            }
            let sol = EtaSolution {
                s: (0..=n).map(|k| k as f64 / n as f64).collect(),
                eta: nodes,
                steps: 2 * n,
                error_estimate: est,
                region: path.region().clone(),
            };
            check_eta_growth(&sol, beta, path.v_norm()?, variant)?;
            return Ok(sol);
        }
        n *= 2;
        coarse = fine;
    }
}

/// ‖η(s)‖ ≤ e^{βs‖V‖/2}, doubled exponent for the centred generator.
fn check_eta_growth(sol: &EtaSolution, beta: f64, v_norm: f64, variant: EtaVariant) -> Result<()> {
    let rate = match variant {
        EtaVariant::Plain => 0.5 * beta * v_norm,
        EtaVariant::Tilde => beta * v_norm,
    };
    for (s, n) in sol.s.iter().zip(sol.norms()?) {
        let cap = (rate * s).exp();
        if n > cap * (1.0 + 1e-9) {
            return Err(Error::Invariant(format!(
                "eta norm {n} exceeds {cap} at s = {s}"
            )));
        }
    }
    Ok(())
}

/// |Tr e^{-βH(0)} / Tr e^{-βH(s)} - exp(β ∫_0^s ⟨V⟩_{ρ(σ)} dσ)|.
pub fn partition_ratio_identity(path: &PerturbationPath, beta: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let v_full = path.v_full()?;
    let log_z = |sig: f64| -> Result<(f64, f64)> {
        let spec = path.hamiltonian_at(sig)?.eig_herm()?;
        let vr = spec.to_eigenbasis(&v_full);
        let e0 = spec.min();
        let z: f64 = spec.values.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
        Ok((z.ln() - beta * e0, gibbs_mean(&spec, &vr, beta)))
    };
    let failed = RefCell::new(None);
    let mean = |sig: f64| match log_z(sig) {
        Ok((_, m)) => m,
        Err(e) => {
            failed.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let q = quadrature::integrate(mean, 0.0, s, &QuadOptions::default())?;
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    let (lz0, _) = log_z(0.0)?;
    let (lzs, _) = log_z(s)?;
    let lhs = (lz0 - lzs).exp();
    let rhs = (beta * q.value).exp();
    Ok((lhs - rhs).abs())
}

/// (‖ρ(0) - ρ(s)‖₁, e^{2βs‖V‖} - 1).
pub fn trace_norm_stability(
    h: &LocalOperator,
    v: &LocalOperator,
    beta: f64,
    s: f64,
) -> Result<(f64, f64)> {
    let path = PerturbationPath::new(h.clone(), v.clone())?;
    let rhs = (2.0 * beta * s * path.v_norm()?).exp_m1();
    if s == 0.0 {
        return Ok((0.0, rhs));
    }
    let r0 = crate::gibbs::GibbsState::new(h, beta)?;
    let rs = crate::gibbs::GibbsState::new(&path.hamiltonian_at(s)?, beta)?;
    let lhs = r0.rho().trace_distance(rs.rho())?;
    Ok((lhs, rhs))
}

/// min{2, inf_T ζ_LR(T) + 4 e^{-πT/β}} for a ζ_LR nondecreasing in |t|,
/// searched on 64 log-spaced T in [(β/π) ln 2, 10³ β] and refined by golden
/// section around the best grid point.
pub fn zeta_qbp_general(zeta_lr: impl Fn(f64) -> f64, beta: f64) -> f64 {
    let g = |t: f64| zeta_lr(t) + 4.0 * (-PI * t / beta).exp();
    let lo = beta / PI * LN_2;
    let hi = 1e3 * beta;
    let n = 64;
    let grid: Vec<f64> = (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&t| g(t)).collect();
    let (best, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    let mut value = vals[best];
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(n - 1)];
    if b > a {
        value = value.min(golden_min(&g, a, b));
    }
    value.clamp(0.0, 2.0)
}

fn golden_min(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..200 {
        if (b - a) <= 1e-14 * b.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = g(x2);
        }
    }
    f1.min(f2)
}

/// Size prefactor of a ζ_QBP bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeFactor {
    /// |X| for a general region.
    Sites(usize),
    /// |∂X| for a ball or a 1D interval (|∂X| = 2).
    Boundary(usize),
}

impl SizeFactor {
    pub fn of_region(x: &Region) -> SizeFactor {
        SizeFactor::Sites(x.len())
    }

    /// Boundary form for 1D intervals.
    pub fn interval() -> SizeFactor {
        SizeFactor::Boundary(2)
    }
}

/// Which Lieb-Robinson route fed a ζ_QBP value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QbpRoute {
    /// Uniform bound along H + sV from ‖Ψ‖ and ‖Ψ + V‖.
    Path,
    /// Bound for H alone, with the perturbed-dynamics correction.
    Unperturbed,
}

/// Closed-form ζ_QBP for exponentially decaying interactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortRangeQbp {
    pub b: f64,
    pub beta: f64,
    /// ‖Ψ‖_b.
    pub psi_norm: f64,
    /// ‖Ψ + V‖_b, when the perturbed interaction is known.
    pub path_norm: Option<f64>,
    /// ‖V‖.
    pub v_norm: f64,
}

impl ShortRangeQbp {
    fn prefactor(&self, size: SizeFactor) -> f64 {
        match size {
            SizeFactor::Sites(n) => n as f64,
            SizeFactor::Boundary(n) => (1.0 + self.b) / self.b * n as f64,
        }
    }

    /// 6 · size · e^{-br/(1+aβ)}, a = (2/π) max(‖Ψ‖_b, ‖Ψ+V‖_b).
    pub fn path(&self, size: SizeFactor, r: f64) -> Option<f64> {
        let pn = self.path_norm?;
        let a = 2.0 / PI * self.psi_norm.max(pn);
        Some(6.0 * self.prefactor(size) * (-self.b * r / (1.0 + a * self.beta)).exp())
    }

    /// C_QBP (1 + ‖V‖) · size · e^{-br/(1+aβ)} with C_QBP = 6 max{1, 2/(b v_b)},
    /// v_b = 2‖Ψ‖_b / b, a = (2/π)‖Ψ‖_b.
    pub fn unperturbed(&self, size: SizeFactor, r: f64) -> f64 {
        let vb = 2.0 * self.psi_norm / self.b;
        let cq = 6.0 * (2.0 / (self.b * vb)).max(1.0);
        let a = 2.0 / PI * self.psi_norm;
        cq * (1.0 + self.v_norm)
            * self.prefactor(size)
            * (-self.b * r / (1.0 + a * self.beta)).exp()
    }

    /// Smaller of the available routes, and which one it was.
    pub fn eval(&self, size: SizeFactor, r: f64) -> (f64, QbpRoute) {
        let u = self.unperturbed(size, r);
        match self.path(size, r) {
            Some(p) if p <= u => (p, QbpRoute::Path),
            _ => (u, QbpRoute::Unperturbed),
        }
    }
}

/// ζ_QBP = C_QBP (1 + ‖V‖)^γ · size · F_{α_QBP}(r) for polynomially decaying
/// interactions, with C_QBP obtained from the long-range Lieb-Robinson
/// bound at T = r^{p(1-σ)}/v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRangeQbp {
    pub alpha: f64,
    pub alpha_qbp: f64,
    pub nu: usize,
    pub beta0: f64,
    pub c_int: f64,
    /// Lieb-Robinson prefactor C.
    pub lr_c: f64,
    /// Velocity constant c, v = c · C_int.
    pub lr_v: f64,
    pub ball: bool,
    pub sigma: f64,
    pub p: f64,
    pub c_qbp: f64,
}

impl LongRangeQbp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        alpha_qbp: f64,
        nu: usize,
        beta0: f64,
        c_int: f64,
        lr_c: f64,
        lr_v: f64,
        ball: bool,
    ) -> Result<LongRangeQbp> {
        let nuf = nu as f64;
        if !(alpha > nuf) || !(beta0 > 0.0) || !(c_int > 0.0) || !(lr_c > 0.0) || !(lr_v > 0.0) {
            return Err(Error::Infeasible(format!(
                "need alpha > nu and positive constants (alpha = {alpha}, nu = {nu})"
            )));
        }
        // the ball form trades one power of decay for the boundary factor
        let shift = if ball { 1.0 } else { 0.0 };
        if alpha_qbp >= alpha - shift {
            return Err(Error::Infeasible(format!(
                "alpha_qbp = {alpha_qbp} must be below {}",
                alpha - shift
            )));
        }
        // α_QBP = σα - shift - p(2(1-σ) + ν) with p ∈ (0,1)
        let lo = ((nuf + 1.0) / (alpha + 1.0)).max((alpha_qbp + shift) / alpha);
        let hi = ((alpha_qbp + shift + 2.0 + nuf) / (alpha + 2.0)).min(1.0);
        if !(lo < hi) {
            return Err(Error::Infeasible(format!(
                "no sigma in ({lo}, {hi}) for alpha = {alpha}, alpha_qbp = {alpha_qbp}"
            )));
        }
        let sigma = 0.5 * (lo + hi);
        let p = (sigma * alpha - shift - alpha_qbp) / (2.0 * (1.0 - sigma) + nuf);
        let mut q = LongRangeQbp {
            alpha,
            alpha_qbp,
            nu,
            beta0,
            c_int,
            lr_c,
            lr_v,
            ball,
            sigma,
            p,
            c_qbp: 0.0,
        };
        q.c_qbp = q.constant();
        Ok(q)
    }

    /// ζ_QBP per unit size at distance r, times (1 + r)^{α_QBP}. Evaluated
    /// in log space since the sup can sit at astronomically large r.
    pub fn scaled_bound(&self, r: f64) -> f64 {
        let v = self.lr_v * self.c_int;
        let one_s = 1.0 - self.sigma;
        let vt = r.powf(self.p * one_s);
        let t = vt / v;
        let lnf = (r + 1.0).ln();
        let gain = self.alpha_qbp * lnf;
        let nu = self.nu as f64;
        // 1 + (vT)^{2 + ν/(1-σ)} in log form
        let growth = {
            let e = (2.0 + nu / one_s) * vt.ln();
            if e > 0.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            }
        };
        let sa = self.sigma * self.alpha;
        let (first, second) = if self.ball {
            (
                vt + tail_stretched_sum(r, one_s) + gain,
                growth + (sa / (sa - 1.0)).ln() - (sa - 1.0) * lnf + gain,
            )
        } else {
            (vt - r.powf(one_s) + gain, growth - sa * lnf + gain)
        };
        let filter = 4f64.ln() - PI * t / self.beta0 + gain;
        self.lr_c * (first.exp() + second.exp()) + filter.exp()
    }

    fn constant(&self) -> f64 {
        let mut best: f64 = 0.0;
        let mut best_lr = 0.0;
        for k in 0..=2000 {
            best = best.max(self.scaled_bound(k as f64));
        }
        let (lo, hi, n) = (2000f64.ln(), 250.0 * 10f64.ln(), 6000);
        for k in 0..=n {
            let lr = lo + (hi - lo) * k as f64 / n as f64;
            let val = self.scaled_bound(lr.exp());
            if val > best {
                best = val;
                best_lr = lr;
            }
        }
        if best_lr > 0.0 {
            let step = (hi - lo) / n as f64;
            let g = |lr: f64| -self.scaled_bound(lr.exp());
            best = best.max(-golden_min(&g, best_lr - step, best_lr + step));
        }
        best
    }

    pub fn eval(&self, size: SizeFactor, r: f64, v_norm: Option<f64>) -> f64 {
        let n = match size {
            SizeFactor::Sites(n) | SizeFactor::Boundary(n) => n as f64,
        };
        let gamma = v_norm.map_or(1.0, |v| 1.0 + v);
        self.c_qbp * gamma * n * (r + 1.0).powf(-self.alpha_qbp)
    }
}

/// ln of an upper bound on Σ_{k≥r} e^{-k^q}: the first term plus
/// ∫_r^∞ e^{-x^q} dx = e^{-R} ∫_0^∞ (R+w)^{1/q-1} e^{-w} dw / q, R = r^q.
fn tail_stretched_sum(r: f64, q: f64) -> f64 {
    let big_r = r.powf(q);
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-10,
        ..QuadOptions::default()
    };
    let w_max = 80.0 + 10.0 * (1.0 / q);
    let integral = quadrature::integrate(
        |w: f64| ((1.0 / q - 1.0) * (big_r + w).ln() - w).exp() / q,
        0.0,
        w_max,
        &opts,
    )
    .map(|q| q.value + q.error)
    .unwrap_or(f64::INFINITY);
    -big_r + integral.ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::pauli;

    #[test]
    fn filter_values() {
        assert_eq!(f_hat(1.0, 0.0), 1.0);
        assert!((f_hat(1.0, 2.0) - 1f64.tanh()).abs() < 1e-15);
        assert!((f_hat(0.7, 1e-9) - 1.0).abs() < 1e-15);
        assert_eq!(f_time(1.0, 0.0), f64::INFINITY);
        for &(b, t) in &[(0.5, 0.3), (2.0, 1.7), (1.0, 40.0)] {
            assert!((f_time(b, t) - f_time(1.0, t / b) / b).abs() < 1e-12 * f_time(b, t));
            assert!(f_time(b, t) <= f_time_bound(b, t));
        }
    }

    #[test]
    fn commuting_generator_is_v() {
        let l = Lattice::chain(2);
        let full = Region::full(&l);
        let h = LocalOperator::new(full.clone(), dense::kron(&pauli::z(), &pauli::z())).unwrap();
        let v = LocalOperator::new(Region::single(&l, 0), pauli::z()).unwrap();
        let phi = phi_spectral(&h, &v, 1.3).unwrap();
        let want = v.embed(&full).unwrap();
        assert!(dense::frobenius(&(phi.matrix() - want.matrix())) < 1e-14);
    }

    #[test]
    fn two_level_generator() {
        let l = Lattice::chain(2);
        let full = Region::full(&l);
        let h = LocalOperator::new(Region::single(&l, 0), pauli::z())
            .unwrap()
            .embed(&full)
            .unwrap();
        let v = LocalOperator::new(Region::single(&l, 0), pauli::x()).unwrap();
        let phi = phi_spectral(&h, &v, 1.0).unwrap();
        let want = v.embed(&full).unwrap().scale_re(1f64.tanh());
        assert!(dense::frobenius(&(phi.matrix() - want.matrix())) < 1e-14);
    }

    #[test]
    fn short_range_zeta_arithmetic() {
        let q = ShortRangeQbp {
            b: 1.0,
            beta: 1.0,
            psi_norm: PI / 2.0,
            path_norm: Some(PI / 2.0),
            v_norm: 0.5,
        };
        assert!((q.path(SizeFactor::Sites(1), 0.0).unwrap() - 6.0).abs() < 1e-15);
        assert!((q.path(SizeFactor::Sites(1), 4.0).unwrap() - 6.0 * (-2f64).exp()).abs() < 1e-14);
        let ratio = q.path(SizeFactor::interval(), 4.0).unwrap()
            / q.path(SizeFactor::Sites(1), 4.0).unwrap();
        assert!((ratio - 4.0).abs() < 1e-14);
    }

    #[test]
    fn general_zeta_limits() {
        assert!(zeta_qbp_general(|_| 0.0, 1.0) < 1e-12);
        assert_eq!(zeta_qbp_general(|_| 10.0, 1.0), 2.0);
    }

    #[test]
    fn long_range_constant_is_finite() {
        let q = LongRangeQbp::new(4.0, 2.0, 1, 1.0, 1.0, 4.0, 4.0, false).unwrap();
        assert!(q.c_qbp.is_finite() && q.c_qbp > 0.0);
        assert!(q.sigma > 0.5 && q.sigma < 5.0 / 6.0);
        let want = q.sigma * 4.0 - q.p * (2.0 * (1.0 - q.sigma) + 1.0);
        assert!((want - 2.0).abs() < 1e-12);
        assert!(LongRangeQbp::new(4.0, 4.5, 1, 1.0, 1.0, 4.0, 4.0, false).is_err());
        assert!(LongRangeQbp::new(4.0, 3.5, 1, 1.0, 1.0, 4.0, 4.0, true).is_err());
    }

    #[test]
    fn filter_has_unit_mass() {
        for beta in [0.1, 1.0, 10.0] {
            let r = filter_l1(beta, &QuadOptions::default());
            let (m, err) = r.unwrap_or_else(|e| panic!("{e}"));
            assert!((m - 1.0).abs() < 1e-8, "beta {beta}: {m} ± {err}");
        }
    }

    fn random_chain(n: usize, seed: u64) -> (LocalOperator, LocalOperator) {
        use crate::interactions::{generate_model, DecayFunction, ModelKind};
        let l = Lattice::chain(n);
        let kind = ModelKind::RandomKLocal {
            k: 2,
            decay: DecayFunction::Exponential { b: 1.0 },
            strength: 1.0,
            r_max: 2,
        };
        let h = generate_model(&kind, &l, seed)
            .unwrap()
            .assemble(&Region::full(&l))
            .unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed + 99);
        let v = crate::interactions::gaussian_hermitian(&mut rng, 2, 0.8).unwrap();
        (h, LocalOperator::new(Region::single(&l, n / 2), v).unwrap())
    }

    #[test]
    fn time_domain_matches_spectral() {
        let (h, v) = random_chain(3, 5);
        let beta = 0.8;
        let exact = phi_spectral(&h, &v, beta).unwrap();
        let opts = QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 4000,
        };
        let (approx, _) =
            phi_time(&h, &v, beta, 20.0 * beta, &opts).unwrap_or_else(|e| panic!("{e}"));
        assert!(dense::op_norm(&(exact.matrix() - approx.matrix())).unwrap() < 1e-6);
        assert!(exact.op_norm().unwrap() <= v.op_norm().unwrap() + 1e-12);
    }

    #[test]
    fn commuting_eta_closed_form() {
        let l = Lattice::chain(2);
        let full = Region::full(&l);
        let h = LocalOperator::new(full.clone(), dense::kron(&pauli::z(), &pauli::z())).unwrap();
        let v = LocalOperator::new(Region::single(&l, 1), pauli::z().mapv(|x| x * 0.7)).unwrap();
        let beta = 0.9;
        let path = PerturbationPath::new(h, v.clone()).unwrap();
        let sol = eta(&path, beta, EtaVariant::Plain, None, &EtaOptions::default()).unwrap();
        for (s, e) in sol.s.iter().zip(&sol.eta) {
            let want = v.embed(&full).unwrap().exp_herm(-0.5 * beta * s).unwrap();
            assert!(dense::op_norm(&(e - want.matrix())).unwrap() < 1e-10);
        }
    }

    #[test]
    fn eta_reconstructs_perturbed_state() {
        let (h, v) = random_chain(4, 11);
        let beta = 0.7;
        let path = PerturbationPath::new(h.clone(), v).unwrap();
        let sol = eta(&path, beta, EtaVariant::Plain, None, &EtaOptions::default()).unwrap();
        let e0 = h.exp_herm(-beta).unwrap();
        let e1 = path.hamiltonian_at(1.0).unwrap().exp_herm(-beta).unwrap();
        let n = sol.last();
        let rebuilt = n.dot(e0.matrix()).dot(&dense::adjoint(n));
        let rel = dense::op_norm(&(rebuilt - e1.matrix())).unwrap() / e1.op_norm().unwrap();
        assert!(rel < 1e-8, "{rel}");

        let tilde = eta(&path, beta, EtaVariant::Tilde, None, &EtaOptions::default()).unwrap();
        let r0 = crate::gibbs::GibbsState::new(&h, beta).unwrap();
        let r1 = crate::gibbs::GibbsState::new(&path.hamiltonian_at(1.0).unwrap(), beta).unwrap();
        let t = tilde.last();
        let rebuilt = t.dot(r0.rho().matrix()).dot(&dense::adjoint(t));
        assert!(dense::op_norm(&(rebuilt - r1.rho().matrix())).unwrap() < 1e-8);
    }

    #[test]
    fn partition_ratio_residual_small() {
        let (h, v) = random_chain(4, 3);
        let path = PerturbationPath::new(h, v).unwrap();
        assert_eq!(partition_ratio_identity(&path, 0.7, 0.0).unwrap(), 0.0);
        assert!(partition_ratio_identity(&path, 0.7, 1.0).unwrap() < 1e-7);
    }

    #[test]
    fn local_generator_full_radius_is_exact() {
        let (h, v) = random_chain(4, 8);
        let a = phi_local(&h, &v, 1.0, 10).unwrap();
        assert!(a.error < 1e-12);
        let mut prev = f64::INFINITY;
        for r in 0..3 {
            let e = phi_local(&h, &v, 1.0, r).unwrap().error;
            assert!(e <= prev + 1e-12);
            prev = e;
        }
    }
}
