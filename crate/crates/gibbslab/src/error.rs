use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("regions belong to different lattices")]
    MismatchedLattice,
    #[error("operation needs a nonempty region")]
    EmptyRegion,
    #[error("region {inner:?} is not contained in {outer:?}")]
    NotSubset {
        inner: Vec<usize>,
        outer: Vec<usize>,
    },
    #[error("regions overlap")]
    Overlap,
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("dimension {dim} exceeds the cap of {cap} (set GIBBSLAB_DIM_CAP to raise it)")]
    DimensionCap { dim: usize, cap: usize },
    #[error("operator is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error(
        "quadrature did not converge: estimated error {estimate:.3e} above tolerance {tol:.3e}"
    )]
    Quadrature { estimate: f64, tol: f64 },
    #[error("integrator did not reach tolerance: residual {residual:.3e} above {tol:.3e}")]
    Integrator { residual: f64, tol: f64 },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
