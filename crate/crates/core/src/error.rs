use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("eigensolver stopped after {iterations} expansions with max relative residual {residual:.3e}")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("ambiguous clustering: {0}")]
    AmbiguousClusters(String),

    #[error("invalid twist profile: {0}")]
    Profile(String),

    #[error("decay check failed at x = {x}: {detail}")]
    Decay { x: f64, detail: String },

    #[error("branch violation: |k| = {modulus:.6e} is not below {radius:.6e}")]
    Branch { modulus: f64, radius: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("linear solve failed at delta = {delta}: {detail} (spectral radius estimate of delta*T: {norm_estimate:.3e})")]
    DeltaTooLarge {
        delta: f64,
        norm_estimate: f64,
        detail: String,
    },

    #[error("certification refused: {0}")]
    Certification(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("root search did not converge from seed {seed}: {detail}")]
    RootNotConverged { seed: String, detail: String },

    #[error("branch tracking failed: {0}")]
    BranchTracking(String),

    #[error("contour instability at radius {radius}: {detail}")]
    Contour { radius: f64, detail: String },

    #[error("quadrature tolerance not reached: achieved error estimate {achieved:.3e}")]
    Quadrature { achieved: f64 },
}
