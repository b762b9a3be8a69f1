//! Graph-side reduction: cycle covers, amplification gadgets, double graphs,
//! bipartite lifts and compilation of cycle-cover counting to QBU instances.

mod digraph;
mod evaluate;
mod gadget;
mod plan;

pub use digraph::*;
pub use evaluate::{leading_from_equispaced, leading_from_scaled, pairing_polynomial, scaled_node_values, ChainEvaluator, Poly};
pub use gadget::*;
pub use plan::*;
