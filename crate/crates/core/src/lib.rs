//! Gaussian two-mode entanglement of formation via the canonical
//! squeezed-state decomposition.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod covariance;
pub mod ensemble;
pub mod eof;
pub mod epr;
pub mod error;
pub mod feasibility;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod random;
pub mod standard_form;
pub mod tolerance;

pub use canonical::{canonical_reduce, CanonicalForm, CanonicalReduction};
pub use covariance::CovMat4;
pub use error::{Error, Result};
pub use standard_form::{reduce_to_standard_form, LocalScalePair, StandardFormParams};
pub use tolerance::Tolerances;
