use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ring mismatch between scalar operands")]
    RingMismatch,
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("scalar parse error: {0}")]
    Parse(String),
    #[error("weight error: {0}")]
    Weight(String),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("parity error: {0}")]
    Parity(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("singular part does not match the canonical shape: {0}")]
    Shape(String),
    #[error("inconsistent polarization: {0}")]
    InconsistentPolarization(String),
    #[error("series not expressible in the scalar ring: {0}")]
    Expansion(String),
    #[error("missing dependency: {0}")]
    MissingDependency(String),
    #[error("nonzero even bosonic extraction: {0}")]
    NonzeroEvenIndex(String),
    #[error("nonzero odd fermionic extraction: {0}")]
    NonzeroOddIndex(String),
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),
    #[error("routes disagree: {0}")]
    BothRoutesDisagree(String),
    #[error("leading dilaton coefficient vanishes")]
    SingularLeading,
    #[error("constraint residual nonzero: {0}")]
    Residual(String),
    #[error("degree cap exceeded: {0}")]
    CapExceeded(String),
    #[error("unknown curve: {0}")]
    UnknownCurve(String),
}

pub type Result<T> = std::result::Result<T, Error>;
