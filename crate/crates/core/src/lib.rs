//! Randomized gossip for average consensus.
//!
//! Each node of a connected network holds a private value and the goal is
//! for every node to learn the average using only exchanges along edges.
//! Writing the constraints `x_i = x_j` for every edge as `A x = 0`, with `A`
//! the edge–node incidence matrix, turns gossip into a randomized solver for
//! a linear system:
//!
//! - the primal method ([`engine::rbk_step`]) samples a set of edges and
//!   replaces the values in every connected component of the sampled
//!   subgraph by their average, which is exactly a randomized block
//!   Kaczmarz projection;
//! - the dual method ([`engine::rnm_step`]) keeps a weight per edge and takes
//!   a randomized Newton step on the dual objective; node values are
//!   recovered as `c + Aᵀy`.
//!
//! [`analysis`] computes the expected contraction factor `ρ` exactly (or by
//! Monte Carlo), bounds the ε-averaging time and drives the block-size
//! speedup experiments.
//!
//! ```
//! use gossip_core::{analysis, engine, Graph, SamplerSpec};
//! use gossip_core::sampling::trial_rng;
//!
//! let g = Graph::ring(12).unwrap();
//! let c: Vec<f64> = (0..12).map(f64::from).collect();
//! let trace = engine::run(
//!     engine::Engine::Primal,
//!     &g,
//!     SamplerSpec::FixedSize(3),
//!     c,
//!     &engine::RunOptions::default(),
//!     trial_rng(7, 0),
//! )
//! .unwrap();
//! assert!(trace.converged);
//!
//! let report = analysis::rate(&g, SamplerSpec::FixedSize(3), 0).unwrap();
//! assert!(report.rho > 0.0 && report.rho < 1.0);
//! ```

pub mod analysis;
pub mod engine;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod sampling;
pub mod union_find;

pub use error::{Error, Result};
pub use graph::{Component, Graph, GraphSpec, IncidenceSystem};
pub use sampling::{SamplerSpec, SketchSample};
