//! Probabilistic environment: explicit atom trees and Markov chains.

mod markov;
mod tree;

pub use markov::{unroll, Horizon, MarkovModel, EXIT_LABEL};
pub use tree::{Atom, AtomId, AtomTree, NodeSpec, TreeBuilder};
