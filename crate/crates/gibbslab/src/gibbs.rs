//! Gibbs states, covariances and the region covariance sup.

use ndarray::{Array1, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{c, dense, DensityMatrix, LocalOperator, Mat, Spectrum, C64};
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::pauli;

/// e^{-βH} / Tr e^{-βH} together with the spectral data of H.
#[derive(Debug, Clone)]
pub struct GibbsState {
    hamiltonian: LocalOperator,
    beta: f64,
    rho: DensityMatrix,
    spectrum: Spectrum,
    log_partition: f64,
}

impl GibbsState {
    pub fn new(h: &LocalOperator, beta: f64) -> Result<GibbsState> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let spectrum = h.eig_herm()?;
        GibbsState::from_spectrum(h.clone(), spectrum, beta)
    }

    /// Reuses an eigendecomposition of `h`.
    pub fn from_spectrum(h: LocalOperator, spectrum: Spectrum, beta: f64) -> Result<GibbsState> {
        let e0 = spectrum.min();
        let w: Vec<f64> = spectrum
            .values
            .iter()
            .map(|&e| (-beta * (e - e0)).exp())
            .collect();
        let z: f64 = w.iter().sum();
        let rho = spectrum.apply(|e| c((-beta * (e - e0)).exp() / z, 0.0));
        let rho = DensityMatrix::trusted(LocalOperator::new(
            h.support().clone(),
            dense::hermitize(&rho),
        )?);
        Ok(GibbsState {
            hamiltonian: h,
            beta,
            rho,
            spectrum,
            log_partition: z.ln() - beta * e0,
        })
    }

    pub fn hamiltonian(&self) -> &LocalOperator {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn support(&self) -> &Region {
        self.rho.support()
    }

    /// ln Tr e^{-βH}.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn expect(&self, a: &LocalOperator) -> Result<C64> {
        self.rho.expect(a)
    }
}

/// Tr(ρ A B) - Tr(ρ A) Tr(ρ B).
pub fn covariance(rho: &DensityMatrix, a: &LocalOperator, b: &LocalOperator) -> Result<C64> {
    let ab = a.mul(b)?;
    Ok(rho.expect(&ab)? - rho.expect(a)? * rho.expect(b)?)
}

#[derive(Debug, Clone)]
pub struct CovarianceOptions {
    pub restarts: usize,
    pub max_rounds: usize,
    pub rel_tol: f64,
    pub seed: u64,
    /// Initial guess for the observable on the second region.
    pub warm_start: Option<LocalOperator>,
}

impl Default for CovarianceOptions {
    fn default() -> Self {
        CovarianceOptions {
            restarts: 8,
            max_rounds: 100,
            rel_tol: 1e-10,
            seed: 0,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CovarianceRegion {
    pub value: f64,
    /// Witness on X with ‖A‖ = 1.
    pub a: LocalOperator,
    /// Witness on Y with ‖B‖ = 1.
    pub b: LocalOperator,
    pub rounds: usize,
}

/// Lower estimate of sup_{‖A‖=‖B‖=1} |Cov_ρ(A, B)| over A on X and B on Y,
/// by alternating exact trace-norm maximization.
pub fn covariance_region(
    rho: &DensityMatrix,
    x: &Region,
    y: &Region,
    opts: &CovarianceOptions,
) -> Result<CovarianceRegion> {
    if !x.is_disjoint(y) {
        return Err(Error::Overlap);
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyRegion);
    }
    // fixed processing order so that (X;Y) and (Y;X) agree exactly
    let swap = x.sites()[0] > y.sites()[0];
    let (p, q) = if swap { (y, x) } else { (x, y) };
    let xy = p.union(q)?;
    let rho_xy = rho.reduce(&xy)?;
    let mut best = CovarianceRegion {
        value: 0.0,
        a: LocalOperator::identity(p.clone())?,
        b: LocalOperator::identity(q.clone())?,
        rounds: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Start> = schmidt_starts(&rho_xy, p, q, SCHMIDT_STARTS)?
        .into_iter()
        .map(|w| Start::Given(w, true))
        .collect();
    starts.extend((0..opts.restarts).map(|_| Start::Random));
    if let Some(w) = &opts.warm_start {
        if w.support() == y {
            starts.push(Start::Given(w.clone(), !swap));
        } else if w.support() == x {
            starts.push(Start::Given(w.clone(), swap));
        }
    }
    for start in starts {
        // `on_q` is the observable currently held on q
        let mut on_q = match start {
            Start::Random => random_observable(q, &mut rng)?,
            Start::Given(w, true) => w,
            Start::Given(w, false) => {
                // warm start lives on p: take one half-step first
                let k = reduced_response(&rho_xy, &w, q)?;
                LocalOperator::new(q.clone(), polar_adjoint(&k)?)?
            }
        };
        let mut value = 0.0_f64;
        let mut on_p = LocalOperator::identity(p.clone())?;
        let mut rounds = 0;
        for _ in 0..opts.max_rounds {
            rounds += 1;
            let kp = reduced_response(&rho_xy, &on_q, p)?;
            let v1 = dense::trace_norm(&kp)?;
            on_p = LocalOperator::new(p.clone(), polar_adjoint(&kp)?)?;
            let kq = reduced_response(&rho_xy, &on_p, q)?;
            let v2 = dense::trace_norm(&kq)?;
            on_q = LocalOperator::new(q.clone(), polar_adjoint(&kq)?)?;
            let slack = 1e-12 * (1.0 + value);
            if v1 < value - slack || v2 < v1 - slack {
                return Err(Error::Invariant(format!(
                    "alternating maximization decreased: {value} -> {v1} -> {v2}"
                )));
            }
            let prev = value;
            value = v2.max(v1);
            if value - prev <= opts.rel_tol * value.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        if value > best.value {
            best = CovarianceRegion {
                value,
                a: on_p,
                b: on_q,
                rounds,
            };
        }
    }
    if swap {
        std::mem::swap(&mut best.a, &mut best.b);
    }
    best.value = best.value.min(2.0);
    Ok(best)
}

/// Entry count of the realigned correlation matrix above which the Schmidt
/// starts are skipped.
const SCHMIDT_CAP: usize = 1 << 22;
const SCHMIDT_STARTS: usize = 2;

/// Starting observables on `q` from the operator-Schmidt decomposition of
/// C = ρ_pq - ρ_p ⊗ ρ_q. Realigned, Cov(A, B) = vec(Aᵀ)ᵀ R vec(Bᵀ), so the top
/// right singular vectors of R give B. Random Pauli starts alone can sit in
/// a symmetry sector that misses the dominant correlation.
fn schmidt_starts(
    rho_xy: &DensityMatrix,
    p: &Region,
    q: &Region,
    count: usize,
) -> Result<Vec<LocalOperator>> {
    let xy = rho_xy.support();
    let (dp, dq) = (p.hilbert_dim(), q.hilbert_dim());
    let (np, nq) = (dp * dp, dq * dq);
    if np.saturating_mul(nq) > SCHMIDT_CAP {
        return Ok(Vec::new());
    }
    let n = xy.len();
    let d = xy.lattice().local_dim();
    let (pp, pq) = (xy.positions_of(p)?, xy.positions_of(q)?);
    let perm: Vec<usize> = pp
        .iter()
        .copied()
        .chain(pp.iter().map(|i| n + i))
        .chain(pq.iter().copied())
        .chain(pq.iter().map(|i| n + i))
        .collect();
    let t = rho_xy
        .matrix()
        .view()
        .into_shape_with_order(IxDyn(&vec![d; 2 * n]))
        .map_err(|e| Error::Shape(e.to_string()))?
        .permuted_axes(IxDyn(&perm));
    let mut r = Mat::from_shape_vec((np, nq), t.iter().copied().collect())
        .map_err(|e| Error::Shape(e.to_string()))?;
    let rp = rho_xy.reduce(p)?;
    let rq = rho_xy.reduce(q)?;
    let (vp, vq): (Vec<C64>, Vec<C64>) = (
        rp.matrix().iter().copied().collect(),
        rq.matrix().iter().copied().collect(),
    );
    for ((i, j), x) in r.indexed_iter_mut() {
        *x -= vp[i] * vq[j];
    }
    let rh = dense::adjoint(&r);
    let right: Vec<Array1<C64>> = if nq <= np {
        let (_, vecs) = dense::eigh(&rh.dot(&r))?;
        (0..count.min(nq))
            .map(|k| vecs.column(nq - 1 - k).to_owned())
            .collect()
    } else {
        let (_, vecs) = dense::eigh(&r.dot(&rh))?;
        (0..count.min(np))
            .map(|k| rh.dot(&vecs.column(np - 1 - k)))
            .collect()
    };
    let mut out = Vec::new();
    for v in right {
        if v.iter().map(|z| z.norm_sqr()).sum::<f64>() < 1e-28 {
            continue;
        }
        let bt = Mat::from_shape_vec((dq, dq), v.to_vec()).expect("shape");
        out.push(LocalOperator::new(
            q.clone(),
            dense::polar_unitary(&bt.t().to_owned())?,
        )?);
    }
    Ok(out)
}

enum Start {
    Random,
    /// Operator and whether it lives on the second processed region.
    Given(LocalOperator, bool),
}

/// k = Tr_{¬target}(W ρ) - Tr(ρ W) ρ_target for W on the complementary
/// region, so that Cov(A_target, W) = Tr(k A_target).
fn reduced_response(rho_xy: &DensityMatrix, w: &LocalOperator, target: &Region) -> Result<Mat> {
    let full = rho_xy.support();
    let we = w.embed(full)?;
    let wr = LocalOperator::new(full.clone(), we.matrix().dot(rho_xy.matrix()))?;
    let mean = wr.trace();
    let part = wr.partial_trace(target)?;
    let rho_t = rho_xy.operator().partial_trace(target)?;
    Ok(part.matrix() - &(rho_t.matrix() * mean))
}

/// Unitary A with Tr(k A) = ‖k‖₁: for k = U Σ V†, A = V U†.
fn polar_adjoint(k: &Mat) -> Result<Mat> {
    Ok(dense::adjoint(&dense::polar_unitary(k)?))
}

fn random_observable(region: &Region, rng: &mut ChaCha8Rng) -> Result<LocalOperator> {
    if region.lattice().local_dim() == 2 {
        loop {
            let idx: Vec<usize> = (0..region.len()).map(|_| rng.random_range(0..4)).collect();
            if idx.iter().all(|&k| k == 0) {
                continue;
            }
            let factors: Vec<Mat> = idx.into_iter().map(pauli::by_index).collect();
            return LocalOperator::product(region.clone(), &factors);
        }
    }
    let d = region.hilbert_dim();
    let g = Mat::from_shape_fn((d, d), |_| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    LocalOperator::new(region.clone(), dense::polar_unitary(&g)?)
}

/// Checks the Gibbs invariants: ρ commutes with H and matches the spectral
/// reconstruction. Returns the two residuals.
pub fn residuals(state: &GibbsState) -> Result<(f64, f64)> {
    let h = state.hamiltonian().matrix();
    let r = state.rho().matrix();
    let comm = dense::frobenius(&(h.dot(r) - r.dot(h)));
    let hn = dense::frobenius(h).max(1.0);
    let tr = state.rho().operator().trace().re;
    Ok((comm / hn, (tr - 1.0).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn zz_pair(j: f64) -> LocalOperator {
        let l = Lattice::chain(2);
        LocalOperator::new(
            Region::full(&l),
            dense::kron(&pauli::z(), &pauli::z()) * c(-j, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_hamiltonian_is_maximally_mixed() {
        let l = Lattice::chain(3);
        let h = LocalOperator::zero(Region::full(&l)).unwrap();
        let g = GibbsState::new(&h, 2.0).unwrap();
        let want = dense::identity(8) * c(0.125, 0.0);
        assert!(dense::frobenius(&(g.rho().matrix() - &want)) < 1e-15);
    }

    #[test]
    fn single_qubit_magnetization() {
        let l = Lattice::chain(1);
        let h = LocalOperator::new(Region::full(&l), pauli::z()).unwrap();
        let g = GibbsState::new(&h, 1.0).unwrap();
        let m = g.expect(&h).unwrap();
        assert!((m.re + 1f64.tanh()).abs() < 1e-14);
    }

    #[test]
    fn ising_pair_covariance() {
        for beta in [0.3, 1.0, 2.5] {
            let h = zz_pair(1.0);
            let g = GibbsState::new(&h, beta).unwrap();
            let l = h.support().lattice().clone();
            let a = LocalOperator::new(Region::single(&l, 0), pauli::z()).unwrap();
            let b = LocalOperator::new(Region::single(&l, 1), pauli::z()).unwrap();
            let cov = covariance(g.rho(), &a, &b).unwrap();
            assert!((cov.re - beta.tanh()).abs() < 1e-13);
            let id = LocalOperator::identity(Region::single(&l, 1)).unwrap();
            assert!(covariance(g.rho(), &a, &id).unwrap().norm() < 1e-15);
            let r = covariance_region(
                g.rho(),
                &Region::single(&l, 0),
                &Region::single(&l, 1),
                &CovarianceOptions::default(),
            )
            .unwrap();
            assert!(r.value >= beta.tanh() - 1e-12);
            assert!(r.value <= beta.tanh() + 1e-12);
        }
    }

    #[test]
    fn overlapping_regions_rejected() {
        let h = zz_pair(1.0);
        let g = GibbsState::new(&h, 1.0).unwrap();
        let x = Region::full(h.support().lattice());
        assert_eq!(
            covariance_region(g.rho(), &x, &x, &CovarianceOptions::default()).unwrap_err(),
            Error::Overlap
        );
    }

    #[test]
    fn nonpositive_beta_rejected() {
        assert!(GibbsState::new(&zz_pair(1.0), 0.0).is_err());
    }
}
