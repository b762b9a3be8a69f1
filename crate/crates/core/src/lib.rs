//! Exact and sampled computations for Bayesian updating on pure quantum
//! states, and the reductions that make them hard.

pub mod error;
pub mod exact;
pub mod hilbert;
pub mod sphere;
pub mod io;
pub mod matchperm;
pub mod estimators;
pub mod satcompile;
pub mod graphred;
pub mod verify;

pub use error::{Error, Result};
pub use exact::{ExactLikelihood, ExactVector, Factored};
pub use graphred::{ReductionPlan, WeightedDigraph};
pub use hilbert::{ComplexVector, Observation, ObservationSet, PureState, SignVector};
pub use io::{CompiledInstance, JsonFormat};
pub use matchperm::{DoubledMatrix, SquareMatrix, SymmetricMatrix};
pub use satcompile::{CompiledMle, CompiledQbu, Mnae3SatInstance};
pub use sphere::{Convention, ExpansionConfig};
pub use verify::{Check, RunReport, Status, SuiteConfig};
