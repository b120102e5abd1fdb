use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectral assumption violated: {0}")]
    SpectralAssumption(String),

    #[error("ill-conditioned backward recurrence at nu = {nu}: {detail}")]
    IllConditioned { nu: f64, detail: String },

    #[error("pole proximity: |nu - k_z| = {gap:.3e} at q = {q}; perturb N to move the eigenvalue")]
    PoleProximity { q: f64, gap: f64 },

    #[error("quadrature did not converge (achieved relative change {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("no discrete root found")]
    NoDiscreteRoot,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
}
