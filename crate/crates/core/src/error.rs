use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("unknown prime index {0}")]
    UnknownPrime(usize),
    #[error("subsets belong to different profiles")]
    ProfileMismatch,
    #[error("pair is not admissible")]
    Inadmissible,
    #[error("enumeration bound exceeded: g = {g} > {bound}")]
    BoundExceeded { g: usize, bound: usize },
    #[error("face is not a vertex")]
    NotAVertex,
    #[error("cusp vectors are not accepted here")]
    CuspInput,
    #[error("invalid degree vector: {0}")]
    InvalidDegrees(String),
    #[error("genericity constraints require a generic vector")]
    NotGeneric,
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("grid too large: {0}")]
    GridTooLarge(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported field order {0}")]
    UnsupportedField(u64),
    #[error("conductor {0} exceeds the coefficient cap")]
    ConductorTooLarge(u64),
    #[error("character is trivial")]
    TrivialCharacter,
    #[error("inconsistent seed: {0}")]
    InconsistentSeed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
