//! Crate-wide error type.
//!
//! Variants split into three families that the CLI maps onto exit codes:
//! input/parameter problems (exit 2), numerical degeneracies (exit 3), and
//! everything quantitative, which is reported through residual verdicts
//! rather than errors (exit 1).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A pointwise 3x3 system was singular. Carries the worst offending node
    /// and its determinant.
    #[error("singular pointwise system at node {node:?} (det = {det:.3e})")]
    SingularPoint { node: [usize; 3], det: f64 },

    /// Archive manifest is malformed or has an unsupported version.
    #[error("archive format error: {0}")]
    Format(String),

    /// Array payload does not match the declared grid/kind/degree.
    #[error("shape error: {0}")]
    Shape(String),

    /// Operation applied to a form of unsupported degree.
    #[error("degree error: {0}")]
    Degree(String),

    /// Every node was masked out (field vanishes identically at tolerance).
    #[error("all nodes masked: {0}")]
    AllMasked(String),

    /// A quantity that must be positive was not.
    #[error("positivity violated: {0}")]
    Positivity(String),

    /// The (X, Y, grad p) frame degenerates inside the requested region.
    #[error("frame degeneracy: {0}")]
    FrameDegeneracy(String),

    /// Invalid caller-supplied parameter.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The requested slice is not a level set of p at tolerance.
    #[error("slice is not a level set: {0}")]
    NotLevel(String),

    /// dp vanishes on the requested slice (critical level).
    #[error("critical level: {0}")]
    Critical(String),

    /// A field that must be tangent to the slice is not.
    #[error("tangency violated: {0}")]
    Tangency(String),

    /// Operation applied to a bundle of the wrong kind.
    #[error("bundle kind error: {0}")]
    Kind(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit-code family used by the CLI: 2 for input/parameter errors,
    /// 3 for numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SingularPoint { .. }
            | Error::AllMasked(_)
            | Error::FrameDegeneracy(_) => 3,
            _ => 2,
        }
    }
}
