use thiserror::Error;

/// Errors raised by the exact lattice and torus machinery.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("basis columns are linearly dependent")]
    DependentColumns,

    #[error("sublattice is not of full rank")]
    NotFullRank,

    #[error("matrix does not commute with the complex structure")]
    NotHolomorphic,

    #[error("matrix is not unimodular")]
    NotUnimodular,

    #[error("complex structure does not square to -I")]
    BadComplexStructure,

    #[error("tau must lie in the upper half-plane (imaginary part {0} is not positive)")]
    NotInUpperHalfPlane(String),

    #[error("cannot form a product of zero tori")]
    EmptyProduct,

    #[error("affine maps act on different tori")]
    TorusMismatch,

    #[error("group generation exceeded the cap of {0} elements")]
    CapExceeded(usize),

    #[error("unknown generator '{0}' in word")]
    UnknownLetter(char),

    #[error("malformed word '{0}'")]
    MalformedWord(String),

    #[error("subgroup generators must be 2-torsion points of the product torus")]
    NotTwoTorsion,

    #[error("translation parts must be normalized: {0}")]
    NotNormalized(String),

    #[error("the map '{0}' does not preserve the lattice of the quotient torus")]
    LatticeNotPreserved(char),

    #[error("malformed parameter '{0}'")]
    MalformedParameter(String),

    #[error("invalid search space: {0}")]
    InvalidSearchSpace(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
