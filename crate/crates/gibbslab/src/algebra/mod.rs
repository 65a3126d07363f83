//! Dense operators on tensor products of site spaces.

pub mod dense;
mod dump;
pub(crate) mod factor;

use std::sync::RwLock;

use ndarray::Array1;

pub use dense::{c, Mat, C64, ONE, ZERO};
pub use dump::{read_binary, write_binary};
pub(crate) use factor::FactorSplit;

use crate::error::{Error, Result};
use crate::lattice::Region;

/// Numerical tolerances shared by validity checks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative Frobenius deviation from Hermiticity.
    pub herm: f64,
    /// Most negative eigenvalue accepted for a density matrix.
    pub psd: f64,
    /// Deviation of a density matrix trace from one.
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            psd: 1e-10,
            trace: 1e-10,
        }
    }
}

static TOLERANCES: RwLock<Option<Tolerances>> = RwLock::new(None);
static DIM_CAP: RwLock<Option<usize>> = RwLock::new(None);

pub const DEFAULT_DIM_CAP: usize = 1 << 12;

pub fn tolerances() -> Tolerances {
    TOLERANCES.read().unwrap().unwrap_or_default()
}

pub fn set_tolerances(t: Tolerances) {
    *TOLERANCES.write().unwrap() = Some(t);
}

/// Largest Hilbert-space dimension any dense operator may have. Read from
/// `GIBBSLAB_DIM_CAP` unless overridden with [`set_dim_cap`].
pub fn dim_cap() -> usize {
    if let Some(cap) = *DIM_CAP.read().unwrap() {
        return cap;
    }
    std::env::var("GIBBSLAB_DIM_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DIM_CAP)
}

pub fn set_dim_cap(cap: Option<usize>) {
    *DIM_CAP.write().unwrap() = cap;
}

/// Fails unless D^|region| fits under the dimension cap.
pub fn check_cap(region: &Region) -> Result<usize> {
    let cap = dim_cap();
    let d = region.lattice().local_dim();
    let mut dim: usize = 1;
    for _ in 0..region.len() {
        dim = match dim.checked_mul(d) {
            Some(v) if v <= cap => v,
            _ => {
                return Err(Error::DimensionCap {
                    dim: d.saturating_pow(region.len() as u32),
                    cap,
                })
            }
        };
    }
    Ok(dim)
}

/// A dense matrix acting on the tensor product over its support region.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    support: Region,
    matrix: Mat,
}

impl LocalOperator {
    pub fn new(support: Region, matrix: Mat) -> Result<LocalOperator> {
        let dim = check_cap(&support)?;
        if matrix.dim() != (dim, dim) {
            return Err(Error::Shape(format!(
                "support of {} sites needs {dim}x{dim}, got {:?}",
                support.len(),
                matrix.dim()
            )));
        }
        Ok(LocalOperator { support, matrix })
    }

    pub fn identity(support: Region) -> Result<LocalOperator> {
        let dim = check_cap(&support)?;
        Ok(LocalOperator {
            support,
            matrix: dense::identity(dim),
        })
    }

    pub fn zero(support: Region) -> Result<LocalOperator> {
        let dim = check_cap(&support)?;
        Ok(LocalOperator {
            support,
            matrix: Mat::zeros((dim, dim)),
        })
    }

    /// Tensor product of single-site matrices, listed in site order.
    pub fn product(support: Region, factors: &[Mat]) -> Result<LocalOperator> {
        if factors.len() != support.len() {
            return Err(Error::Shape(format!(
                "{} factors for {} sites",
                factors.len(),
                support.len()
            )));
        }
        let mut m = dense::identity(1);
        for f in factors {
            m = dense::kron(&m, f);
        }
        LocalOperator::new(support, m)
    }

    pub fn support(&self) -> &Region {
        &self.support
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_matrix(&self, matrix: Mat) -> Result<LocalOperator> {
        LocalOperator::new(self.support.clone(), matrix)
    }

    pub fn adjoint(&self) -> LocalOperator {
        LocalOperator {
            support: self.support.clone(),
            matrix: dense::adjoint(&self.matrix),
        }
    }

    pub fn scale(&self, s: C64) -> LocalOperator {
        LocalOperator {
            support: self.support.clone(),
            matrix: &self.matrix * s,
        }
    }

    pub fn scale_re(&self, s: f64) -> LocalOperator {
        self.scale(c(s, 0.0))
    }

    /// Tensor with the identity on `into ∖ support`, factors in site order.
    pub fn embed(&self, into: &Region) -> Result<LocalOperator> {
        if !self.support.same_lattice(into) {
            return Err(Error::MismatchedLattice);
        }
        if self.support == *into {
            return Ok(self.clone());
        }
        let dim = check_cap(into)?;
        let pos = into.positions_of(&self.support)?;
        let split = FactorSplit::new(into.len(), into.lattice().local_dim(), &pos);
        let mut out = Mat::zeros((dim, dim));
        for i in 0..dim {
            let a = split.keep_of[i];
            let e = split.rest_of[i];
            for a2 in 0..split.keep_dim {
                let j = split.compose(a2, e);
                out[[i, j]] = self.matrix[[a, a2]];
            }
        }
        Ok(LocalOperator {
            support: into.clone(),
            matrix: out,
        })
    }

    /// Adds `s · embed(self, into)` to `target` without materializing the
    /// embedding.
    pub fn accumulate_into(&self, target: &mut Mat, into: &Region, s: C64) -> Result<()> {
        if !self.support.same_lattice(into) {
            return Err(Error::MismatchedLattice);
        }
        let dim = check_cap(into)?;
        if target.dim() != (dim, dim) {
            return Err(Error::Shape(format!("target is not {dim}x{dim}")));
        }
        let pos = into.positions_of(&self.support)?;
        let split = FactorSplit::new(into.len(), into.lattice().local_dim(), &pos);
        for i in 0..dim {
            let a = split.keep_of[i];
            let e = split.rest_of[i];
            for a2 in 0..split.keep_dim {
                let v = self.matrix[[a, a2]];
                if v != ZERO {
                    target[[i, split.compose(a2, e)]] += s * v;
                }
            }
        }
        Ok(())
    }

    /// Unnormalized partial trace over `support ∖ keep`.
    pub fn partial_trace(&self, keep: &Region) -> Result<LocalOperator> {
        if !self.support.same_lattice(keep) {
            return Err(Error::MismatchedLattice);
        }
        if *keep == self.support {
            return Ok(self.clone());
        }
        let pos = self.support.positions_of(keep)?;
        let m = partial_trace_matrix(
            &self.matrix,
            self.support.len(),
            self.support.lattice().local_dim(),
            &pos,
        );
        Ok(LocalOperator {
            support: keep.clone(),
            matrix: m,
        })
    }

    /// Normalized partial trace E_onto, as an operator on `onto`.
    pub fn conditional_expectation(&self, onto: &Region) -> Result<LocalOperator> {
        let traced = self.partial_trace(onto)?;
        let removed = self.support.len() - onto.len();
        let norm = (self.support.lattice().local_dim() as f64).powi(removed as i32);
        Ok(traced.scale_re(1.0 / norm))
    }

    pub fn trace(&self) -> C64 {
        dense::trace(&self.matrix)
    }

    pub fn op_norm(&self) -> Result<f64> {
        dense::op_norm(&self.matrix)
    }

    pub fn trace_norm(&self) -> Result<f64> {
        dense::trace_norm(&self.matrix)
    }

    pub fn frobenius(&self) -> f64 {
        dense::frobenius(&self.matrix)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        dense::hermitian_deviation(&self.matrix)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= tolerances().herm
    }

    /// Average with the adjoint.
    pub fn hermitize(&self) -> LocalOperator {
        LocalOperator {
            support: self.support.clone(),
            matrix: dense::hermitize(&self.matrix),
        }
    }

    fn binary(
        &self,
        other: &LocalOperator,
        f: impl Fn(&Mat, &Mat) -> Mat,
    ) -> Result<LocalOperator> {
        if self.support == other.support {
            return LocalOperator::new(self.support.clone(), f(&self.matrix, &other.matrix));
        }
        let region = self.support.union(&other.support)?;
        let a = self.embed(&region)?;
        let b = other.embed(&region)?;
        LocalOperator::new(region, f(&a.matrix, &b.matrix))
    }

    /// Sum on the union of supports.
    pub fn add(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.binary(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.binary(other, |a, b| a - b)
    }

    /// Product `self · other` on the union of supports.
    pub fn mul(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.binary(other, |a, b| a.dot(b))
    }

    pub fn commutator(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.binary(other, |a, b| a.dot(b) - b.dot(a))
    }

    pub fn anticommutator(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.binary(other, |a, b| a.dot(b) + b.dot(a))
    }

    /// Eigendecomposition of a Hermitian operator.
    pub fn eig_herm(&self) -> Result<Spectrum> {
        let dev = self.hermitian_deviation();
        if dev > tolerances().herm {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let (values, vectors) = dense::eigh(&self.matrix)?;
        Ok(Spectrum { values, vectors })
    }

    /// exp(A). Hermitian input goes through the eigendecomposition.
    pub fn matrix_exp(&self) -> Result<LocalOperator> {
        let m = if self.hermitian_deviation() <= tolerances().herm {
            self.eig_herm()?.apply(|x| c(x.exp(), 0.0))
        } else {
            dense::expm_general(&self.matrix)
        };
        LocalOperator::new(self.support.clone(), m)
    }

    /// exp(s·H) for Hermitian H and real s.
    pub fn exp_herm(&self, s: f64) -> Result<LocalOperator> {
        let m = self.eig_herm()?.apply(|x| c((s * x).exp(), 0.0));
        LocalOperator::new(self.support.clone(), m)
    }
}

/// Real eigenvalues in ascending order with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Array1<f64>,
    pub vectors: Mat,
}

impl Spectrum {
    pub fn from_matrix(m: &Mat) -> Result<Spectrum> {
        let dev = dense::hermitian_deviation(m);
        if dev > tolerances().herm {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let (values, vectors) = dense::eigh(m)?;
        Ok(Spectrum { values, vectors })
    }

    /// U f(Λ) U†.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> Mat {
        dense::spectral_apply(&self.values, &self.vectors, f)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// U† M U.
    pub fn to_eigenbasis(&self, m: &Mat) -> Mat {
        dense::adjoint(&self.vectors).dot(m).dot(&self.vectors)
    }

    /// U M U†.
    pub fn from_eigenbasis(&self, m: &Mat) -> Mat {
        self.vectors.dot(m).dot(&dense::adjoint(&self.vectors))
    }
}

/// Partial trace of a raw matrix on `n_sites` factors of dimension `d`,
/// keeping the factors at `keep` positions (sorted).
pub(crate) fn partial_trace_matrix(m: &Mat, n_sites: usize, d: usize, keep: &[usize]) -> Mat {
    let split = FactorSplit::new(n_sites, d, keep);
    let kd = split.keep_dim;
    let mut out = Mat::zeros((kd, kd));
    for k1 in 0..kd {
        for k2 in 0..kd {
            let mut s = ZERO;
            for e in 0..split.rest_dim {
                s += m[[split.compose(k1, e), split.compose(k2, e)]];
            }
            out[[k1, k2]] = s;
        }
    }
    out
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: LocalOperator,
}

impl DensityMatrix {
    /// Validates against the current [`Tolerances`].
    pub fn new(op: LocalOperator) -> Result<DensityMatrix> {
        let tol = tolerances();
        let dev = op.hermitian_deviation();
        if dev > tol.herm {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = op.trace();
        if (tr - ONE).norm() > tol.trace {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let low = dense::eigvalsh(&dense::hermitize(op.matrix()))?
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if low < -tol.psd {
            return Err(Error::InvalidParameter(format!(
                "density matrix has eigenvalue {low:.3e}"
            )));
        }
        Ok(DensityMatrix { op })
    }

    pub(crate) fn trusted(op: LocalOperator) -> DensityMatrix {
        DensityMatrix { op }
    }

    pub fn maximally_mixed(region: Region) -> Result<DensityMatrix> {
        let id = LocalOperator::identity(region)?;
        let d = id.dim() as f64;
        Ok(DensityMatrix {
            op: id.scale_re(1.0 / d),
        })
    }

    pub fn operator(&self) -> &LocalOperator {
        &self.op
    }

    pub fn matrix(&self) -> &Mat {
        self.op.matrix()
    }

    pub fn support(&self) -> &Region {
        self.op.support()
    }

    /// Reduced state on a subregion.
    pub fn reduce(&self, keep: &Region) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            op: self.op.partial_trace(keep)?,
        })
    }

    /// Tr(ρ A) for A supported inside the state's region.
    pub fn expect(&self, a: &LocalOperator) -> Result<C64> {
        let reduced = self.op.partial_trace(a.support())?;
        let m = reduced.matrix();
        let am = a.matrix();
        // Tr(ρ_A A) = Σ_ij ρ_ij A_ji
        let n = m.nrows();
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                s += m[[i, j]] * am[[j, i]];
            }
        }
        Ok(s)
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.op.sub(&other.op)?.trace_norm()
    }
}
