use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("backend mismatch: {0}")]
    Backend(String),
    #[error("invalid group table: {0}")]
    GroupTable(String),
    #[error("not self-adjoint: residual {0:e}")]
    NotSelfAdjoint(f64),
    #[error("not positive: {0}")]
    NotPositive(String),
    #[error("not a complex: d∘d residual {residual:e} in degree {degree}")]
    NotAComplex { degree: usize, residual: f64 },
    #[error("not a chain map: residual {residual:e} in degree {degree}")]
    NotChainMap { degree: usize, residual: f64 },
    #[error("not acyclic: reduced cohomology dimensions {0:?}")]
    NotAcyclic(Vec<f64>),
    #[error("singular map: {0}")]
    Singular(String),
    #[error("non-invertible: {0}")]
    NotInvertible(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("torsion formulas disagree: {0:?}")]
    Inconsistent(Vec<f64>),
    #[error("non-unimodular: {0}")]
    NonUnimodular(String),
    #[error("lookup: {0}")]
    Lookup(String),
    #[error("no usable spectral gap near the split threshold")]
    NoGap,
}

pub type Result<T> = std::result::Result<T, Error>;
