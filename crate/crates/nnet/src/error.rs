use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnetError {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite gradient in tensor {tensor}; step skipped")]
    NonFiniteGradient { tensor: usize },
    #[error("non-finite parameter value in tensor {tensor}")]
    NonFiniteParameter { tensor: usize },
    #[error("class index {index} out of range for {classes} classes")]
    IndexOutOfRange { index: usize, classes: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("empty {0} partition")]
    EmptyPartition(&'static str),
}

pub type Result<T> = std::result::Result<T, NnetError>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(NnetError::ShapeMismatch {
            context,
            expected,
            actual,
        })
    }
}
