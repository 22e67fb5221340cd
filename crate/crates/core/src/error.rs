use std::path::PathBuf;

/// Errors produced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: file not found")]
    FileNotFound { path: PathBuf },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate vertex id {0}")]
    DuplicateVertex(usize),

    #[error("element {element} references missing vertex {vertex}")]
    MissingVertex { element: usize, vertex: usize },

    #[error("non-conforming mesh: edge ({0}, {1}) is shared by more than two elements")]
    NonConforming(usize, usize),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("point ({0}, {1}) lies outside the mesh")]
    OutsideMesh(f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerically singular matrix: zero pivot at index {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
