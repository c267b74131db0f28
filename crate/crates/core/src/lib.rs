//! Norms of scalar and vector-valued sequence spaces over finite truncations,
//! summing-operator norms, and tensor norms built from them.
//!
//! Suprema are reported as lower bounds attained at a feasible witness and
//! infima as upper bounds attained at a feasible witness (see [`optim`]).

pub mod error;
pub mod opnorm;
pub mod optim;
pub mod spaces;
pub mod summing;
pub mod tensor;
pub mod vector_norms;
pub mod verify;

pub use error::{Error, Result};
pub use optim::{BoundDirection, OptBudget, Witnessed};
pub use spaces::{FiniteSequence, Space, SpaceSpec};
pub use vector_norms::{NormOracle, VectorSequence};
