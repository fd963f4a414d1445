use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain of the requested function or model.
    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature refinement (panel doubling or truncation doubling) did not settle.
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    /// Richardson extrapolants disagree by more than the tolerance.
    #[error("extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),

    /// The β′ shell peeling exhausted its shell budget.
    #[error("peeling did not terminate after {shells} shells")]
    PeelingNonTermination { shells: usize },

    /// A clipping predicate could not be resolved within tolerance.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// A cell needed for the observation ball touches the sampling boundary.
    #[error("boundary contamination: {0}")]
    BoundaryContamination(String),

    /// Too few interior cells were collected for an estimate.
    #[error("insufficient sample: {got} cells, need at least {need}")]
    InsufficientSample { got: usize, need: usize },

    /// Operation is only defined for some diagram dimensions.
    #[error("unsupported dimension {0}")]
    Dimension(usize),

    /// Serialized document carries a schema version we do not read.
    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error document.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NonConvergence(_) => "non_convergence",
            Error::ExtrapolationUnstable(_) => "extrapolation_unstable",
            Error::PeelingNonTermination { .. } => "peeling_non_termination",
            Error::Degenerate(_) => "degenerate",
            Error::BoundaryContamination(_) => "boundary_contamination",
            Error::InsufficientSample { .. } => "insufficient_sample",
            Error::Dimension(_) => "dimension",
            Error::SchemaVersion { .. } => "schema_version",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
