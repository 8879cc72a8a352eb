use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point outside the solid torus: fiber norm {norm}")]
    PointOutsideTorus { norm: f64 },

    #[error("model has no fiber structure (linear fixture)")]
    NoFiberStructure,

    #[error("not dominated at sampled resolution: a = {a} >= 1")]
    NotDominated { a: f64 },

    #[error("not a valid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("degenerate subspace basis: Gram determinant {gram:e}")]
    DegenerateBasis { gram: f64 },

    #[error("Jacobian annihilates the unstable direction")]
    ZeroImage,

    #[error("frame degeneracy at step {step}: pivot {pivot:e}")]
    FrameDegeneracy { step: usize, pivot: f64 },

    #[error("unstable direction not converged: residual {residual:e} > {limit:e}")]
    NotConverged { residual: f64, limit: f64 },

    #[error("experiment requires an embedding model; linear fixtures are excluded")]
    FixtureExcluded,

    #[error("invalid config at `{path}`: {reason}")]
    InvalidConfig { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
