use thiserror::Error;

/// Failure modes shared by every set operation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("set is empty")]
    EmptySet,
    #[error("optimization infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

impl SetError {
    /// True for failures that stem from the LP backend or floating point
    /// breakdown rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, SetError::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, SetError>;

pub(crate) fn dim_check(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(SetError::DimensionMismatch(format!(
            "{what}: expected {expected}, got {got}"
        )))
    }
}
