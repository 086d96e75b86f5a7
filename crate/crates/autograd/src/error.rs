use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("invalid shape for {op}: {shape:?} ({reason})")]
    InvalidShape {
        op: &'static str,
        shape: Vec<usize>,
        reason: String,
    },
    #[error("element count {got} does not fill shape {shape:?}")]
    ElementCount { shape: Vec<usize>, got: usize },
    #[error("gradient requested for a non-scalar output of shape {0:?}")]
    NonScalarOutput(Vec<usize>),
}

pub type Result<T> = std::result::Result<T, Error>;
