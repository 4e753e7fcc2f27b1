use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// A parameter or input violates a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("length mismatch: expected {expected}, got {got} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A factorization broke down (zero pivot or non-finite entry).
    #[error("solver failure: {0}")]
    Solver(String),

    /// A quadratic form that should be positive semidefinite is not.
    #[error("indefinite form: {0}")]
    Indefinite(String),

    #[error("dense assembly cap exceeded: {nodes} nodes > cap {cap}")]
    CapExceeded { nodes: usize, cap: usize },
}

impl LabError {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        LabError::Precondition(msg.into())
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Precondition(_)
            | LabError::LengthMismatch { .. }
            | LabError::CapExceeded { .. } => 2,
            LabError::Solver(_) | LabError::Indefinite(_) => 3,
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), LabError> {
    if expected == got {
        Ok(())
    } else {
        Err(LabError::LengthMismatch {
            what,
            expected,
            got,
        })
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
