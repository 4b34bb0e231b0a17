//! Path extrapolation on navigation graphs.
//!
//! The crate covers the whole pipeline:
//!
//! - [`graph`]: directed article graphs, incidence matrices, trajectories and
//!   the on-disk dataset format.
//! - [`corpus`]: random-walk path generation over an article corpus, with the
//!   title validity filter and the dense/sparse link policies.
//! - [`features`]: degree, TF-IDF and click-count features, the dual hypergraph
//!   transformation and the two features read off the dual hypergraph.
//! - [`model`]: the edge-logit network, the non-backtracking transition
//!   operator, horizon propagation, the target-likelihood loss with its exact
//!   gradient, and training.
//! - [`eval`]: target probability, choice accuracy, precision@k, a brute-force
//!   walk oracle and the experiment matrix.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod model;

pub use error::{Error, Result};
pub use graph::{density, EdgeId, NavGraph, NodeId, Trajectory};
