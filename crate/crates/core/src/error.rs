use thiserror::Error;

use crate::lattice::Signature;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("gram matrix is not square: row {row} has {found} entries, expected {expected}")]
    NotSquare { row: usize, expected: usize, found: usize },
    #[error("gram matrix is not symmetric: entry ({row},{col}) differs from ({col},{row})")]
    Asymmetric { row: usize, col: usize },
    #[error("gram matrix is empty")]
    EmptyGram,
    #[error("vector has length {found}, lattice rank is {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error("lattice is degenerate")]
    Degenerate,
    #[error("vector {0} is isotropic")]
    Isotropic(String),
    #[error("zero vector is not allowed here")]
    ZeroVector,
    #[error("operation needs signature (1, m), lattice has {0}")]
    NotHyperbolic(Signature),
    #[error("operation needs a negative-definite lattice, lattice has {0}")]
    NotNegativeDefinite(Signature),
    #[error("reference vector {0} is not positive")]
    ReferenceNotPositive(String),
    #[error("vector {0} is not in the positive cone")]
    NotPositive(String),
    #[error("base point lies on the wall {0}")]
    BasePointOnWall(String),
    #[error("point lies on the wall {0}")]
    PointOnWall(String),
    #[error("invalid wall spec: {0}")]
    InvalidSpec(String),
    #[error("reflection in {wall} is not integral on basis vector e{basis_index}")]
    NonIntegralReflection { wall: String, basis_index: usize },
    #[error("matrix does not preserve the gram matrix")]
    NotAnIsometry,
    #[error("chain does not bound a common chamber within the positive cone: projected square {square} at entry {entry}")]
    ChainOutsidePositiveCone { entry: usize, square: String },
    #[error("kernel has dimension {0}, expected 1")]
    KernelDimension(usize),
    #[error("representative {vector} has square {found}, expected {expected}")]
    SquareMismatch { vector: String, expected: String, found: String },
    #[error("reduction stalled: reflecting in {wall} did not shrink the separating set ({before} -> {after})")]
    ReductionStalled { wall: String, before: usize, after: usize },
    #[error("could not cross facet {0} into an adjacent chamber")]
    CrossingFailed(String),
    #[error("catalog entry {entry}: {reason}")]
    Catalog { entry: String, reason: String },
    #[error("unknown lattice {0}")]
    UnknownLattice(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not_square",
            Error::Asymmetric { .. } => "asymmetric",
            Error::EmptyGram => "empty_gram",
            Error::RankMismatch { .. } => "rank_mismatch",
            Error::Degenerate => "degenerate",
            Error::Isotropic(_) => "isotropic",
            Error::ZeroVector => "zero_vector",
            Error::NotHyperbolic(_) => "not_hyperbolic",
            Error::NotNegativeDefinite(_) => "not_negative_definite",
            Error::ReferenceNotPositive(_) => "reference_not_positive",
            Error::NotPositive(_) => "not_positive",
            Error::BasePointOnWall(_) => "base_point_on_wall",
            Error::PointOnWall(_) => "point_on_wall",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::NonIntegralReflection { .. } => "non_integral_reflection",
            Error::NotAnIsometry => "not_an_isometry",
            Error::ChainOutsidePositiveCone { .. } => "chain_outside_positive_cone",
            Error::KernelDimension(_) => "kernel_dimension",
            Error::SquareMismatch { .. } => "square_mismatch",
            Error::ReductionStalled { .. } => "reduction_stalled",
            Error::CrossingFailed(_) => "crossing_failed",
            Error::Catalog { .. } => "catalog",
            Error::UnknownLattice(_) => "unknown_lattice",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Internal(_) => "internal",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
