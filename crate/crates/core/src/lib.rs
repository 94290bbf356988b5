//! Conditional optimal stopping on finite probability trees and discounted
//! Markov chains.
//!
//! An agent stops a payoff process `G`, but only payoffs received before the
//! exit time `σ` count, and the agent maximizes the payoff conditional on
//! that event. The resulting problem is time-inconsistent; this crate
//! computes precommitted optima, equilibrium stopping policies and Snell
//! pairs, and verifies equilibrium and supermartingale conditions exactly.

pub mod error;
pub mod examples;
pub mod infinite;
pub mod io;
pub mod model;
pub mod policy;
pub mod random;
pub mod recursion;
pub mod scalar;

pub use error::{ModelError, ParseScalarError, SolveError};
pub use model::{unroll, Atom, AtomId, AtomTree, Horizon, MarkovModel, NodeSpec};
pub use policy::{StoppingPolicy, StoppingPreference};
pub use recursion::{backward_solve, SnellPair};
pub use scalar::{Exact, Float, Scalar};
