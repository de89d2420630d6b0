//! Exact combinatorics and valuation calculus for stratified Hilbert modular
//! varieties at `p`: strata, degree vectors, the `U_p` correspondence on
//! degrees, the regions it preserves, and the character-sum identities used to
//! glue companion forms.

pub mod characters;
pub mod degrees;
pub mod embeddings;
pub mod error;
pub mod hecke;
pub mod rational;
pub mod regions;
pub mod report;
pub mod strata;

pub use degrees::DegreeVector;
pub use embeddings::{EmbeddingIndex, EmbeddingSubset, PrimeProfile, PrimeSet};
pub use error::{Error, Result};
pub use rational::Q;
pub use report::{Counterexample, RegionReport, SCHEMA_VERSION};
pub use strata::{AdmissiblePair, Face};
