use thiserror::Error;

/// Errors shared across the arithmetic and descent kernels.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands belong to different precision contexts")]
    ContextMismatch,

    #[error("inverse of a non-unit (valuation > 0)")]
    NonUnitInverse,

    #[error("p^M exceeds the native 64-bit residue range")]
    PrecisionOverflow,

    #[error("residue is not divisible by p^{0}")]
    InexactDivision(u32),

    #[error("substituted divided-power variable `{0}` has nonzero constant term")]
    NonTopologicallyNilpotentSubstitution(String),

    #[error("divided-power coordinate at index {index:?} is not p-integral")]
    IntegralityFailure { index: Vec<i32> },

    #[error("descent datum violates the cocycle condition")]
    CocycleInvalid,

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("constant term of the descent datum is not invertible")]
    NonUnitConstantTerm,

    #[error("matrix is not invertible at working precision")]
    NotInvertible,

    #[error("malformed point specification: {0}")]
    MalformedSpec(String),

    #[error("value cannot be resolved at working precision: {0}")]
    PrecisionInsufficient(String),

    #[error("argument out of range")]
    OutOfRange,

    #[error("seed component is contracted")]
    SeedNotFinite,

    #[error("link touches a contracted component")]
    LinkNotFinite,

    #[error("neighborhood configuration does not match the requested case: {0}")]
    ConfigMismatch(String),

    #[error("removed discs exhaust the sample lattice at the configured depth")]
    SampleExhausted,

    #[error("requested expansion order cannot certify the series tail")]
    TruncationInsufficient,

    #[error("denominator vanishes at working precision")]
    IndeterminateAtPole,

    #[error("nested-disc prefix does not determine a constant absolute value")]
    InsufficientPrefix,

    #[error("internal consistency check failed: {0}")]
    InternalInconsistency(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
