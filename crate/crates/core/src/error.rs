use thiserror::Error;

use crate::stencil::StencilError;

pub type Result<T, E = KsError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KsError {
    #[error(transparent)]
    Stencil(#[from] StencilError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("index {index} out of range 1..={max}")]
    Index { index: usize, max: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("field is not odd: max asymmetry {max_asymmetry:e}")]
    SymmetryViolation { max_asymmetry: f64 },
    #[error("solution blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },
    #[error("Jacobian is singular; the state is at or near a bifurcation")]
    NearBifurcation,
    #[error("eigenvalue iteration failed to converge after {sweeps} sweeps")]
    EigenFailure { sweeps: usize },
    #[error("continuation stalled at alpha = {alpha} (step {step:e})")]
    ContinuationStall { alpha: f64, step: f64 },
    #[error("stability search invalid: {0}")]
    SearchInvalid(String),
    #[error("degenerate Hopf point: imaginary part {omega:e}")]
    DegenerateHopf { omega: f64 },
    #[error("periodic orbit not found: {0}")]
    OrbitNotFound(String),
    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("incompatible domains: {0}")]
    IncompatibleDomains(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl KsError {
    /// Stable machine-readable name, printed by the CLI on failure.
    pub fn class(&self) -> &'static str {
        match self {
            KsError::Stencil(StencilError::InvalidOperator { .. }) => "invalid-operator",
            KsError::Stencil(StencilError::GridTooCoarse { .. }) => "grid-too-coarse",
            KsError::Unsupported(_) => "unsupported",
            KsError::Index { .. } => "index",
            KsError::Shape { .. } => "shape",
            KsError::SymmetryViolation { .. } => "symmetry-violation",
            KsError::BlowUp { .. } => "blow-up",
            KsError::Divergence { .. } => "divergence",
            KsError::NearBifurcation => "near-bifurcation",
            KsError::EigenFailure { .. } => "eigen-failure",
            KsError::ContinuationStall { .. } => "continuation-stall",
            KsError::SearchInvalid(_) => "search-invalid",
            KsError::DegenerateHopf { .. } => "degenerate-hopf",
            KsError::OrbitNotFound(_) => "orbit-not-found",
            KsError::DegenerateOrbit(_) => "degenerate-orbit",
            KsError::InsufficientData(_) => "insufficient-data",
            KsError::IncompatibleDomains(_) => "incompatible-domains",
            KsError::Usage(_) => "usage",
            KsError::Io(_) => "io",
            KsError::Parse(_) => "parse",
        }
    }
}

impl From<std::io::Error> for KsError {
    fn from(e: std::io::Error) -> Self {
        KsError::Io(e.to_string())
    }
}
