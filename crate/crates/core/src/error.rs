use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("group element kind does not match the Lie structure")]
    KindMismatch,

    #[error("rotation matrix is not in SO(3): defect {0:.3e}")]
    NotARotation(f64),

    #[error("rotation angle at \u{3c0}: principal log branch is ambiguous")]
    AmbiguousLogBranch,

    #[error("bilinear form is inadmissible: {0}")]
    DegenerateForm(String),

    #[error("vertical map C is singular: the action is not free here")]
    VerticalDegeneracy,

    #[error(
        "group action is singular at the queried configuration \
         (gram eigenvalues span [{min_eig:.3e}, {max_eig:.3e}])"
    )]
    SingularAction { min_eig: f64, max_eig: f64 },

    #[error(
        "group action is singular along the path at t = {t:.4} \
         (min gram eigenvalue {min_eig:.3e})"
    )]
    SingularActionOnPath { t: f64, min_eig: f64 },

    #[error("metric is not positive definite at the queried point (min eigenvalue {0:.3e})")]
    MetricNotSpd(f64),

    #[error("path is not closed: endpoint gap {gap:.3e}")]
    PathNotClosed { gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
