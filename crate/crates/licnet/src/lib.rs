//! Deterministic bit-pipe models of discrete memoryless networks.
//!
//! The pipeline goes from channel transition matrices to per-message channel
//! parameters σ² (squared second singular values of divergence transition
//! matrices), to bit-pipe models of single-hop channels (point-to-point,
//! broadcast, multiple-access, interference), to routing capacities of
//! multi-hop layered networks and their feedback-enhanced variants.
//!
//! Modules follow the pipeline order:
//!
//! - [`probability`] — distributions, channel matrices, perturbation vectors,
//!   and the local quadratic approximation of the KL divergence.
//! - [`dtm`] — divergence transition matrices and their constrained top
//!   singular pair.
//! - [`singlehop`] — channel parameters σ² for P2P/BC/MAC/IC topologies and
//!   the structural inequality validators.
//! - [`model`] — rate regions, a small dense simplex LP solver, weighted
//!   sum-rate maximization, and sum capacities of single-hop models.
//! - [`multihop`] — layered networks: per-message path optimization via
//!   Viterbi, sum capacity, identical-layer communication modes, flow
//!   balance, and scheme repair.
//! - [`feedback`] — feedback parameter substitution and the feedback
//!   variants of the layered-network quantities.
//! - [`cli`] — JSON network documents and the command surface used by the
//!   `licnet` binary.

mod linalg;
mod minmax;

pub mod cli;
pub mod dtm;
pub mod feedback;
pub mod model;
pub mod multihop;
pub mod probability;
pub mod singlehop;

pub use probability::{ChannelMatrix, PerturbationVector, ProbabilityVector};
pub use singlehop::IcParameterGrid;
