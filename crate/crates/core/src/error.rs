use thiserror::Error;

pub type Result<T, E = FusionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("need at least {min} {what}, got {got}")]
    TooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Zero-based index of a column that is identically zero after centering.
    #[error("predictor column {0} is constant")]
    ConstantColumn(usize),

    #[error("invalid hyper-parameter {name} = {value} (must be > 0)")]
    InvalidHyperParam { name: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Gram matrix of the merged design is not positive definite for this indicator.
    #[error("fused design is singular for indicator {0}")]
    SingularDesign(String),

    #[error("posterior precision matrix is not positive definite")]
    SingularSystem,

    #[error("inverse-gamma scale must be positive, got {0}")]
    DegenerateScale(f64),

    #[error("no admissible configuration for indicator {0}")]
    InadmissibleState(usize),

    #[error("chain has no draws")]
    EmptyChain,

    #[error("empty input")]
    EmptyInput,

    #[error("true grouping has one group per coefficient")]
    DegenerateGroups,
}
