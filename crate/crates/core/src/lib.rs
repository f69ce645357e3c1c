//! Layer-wise exploration of contextual word embeddings.
//!
//! The crate turns per-layer embedding tensors into 2D projections and
//! quantifies what the projection got wrong:
//!
//! - [`corpus`]: `LFEB` tensors, JSONL annotations, manifests and token filters.
//! - [`projection`]: per-layer PCA, pass-through of external projections.
//! - [`clustering`]: agglomerative clustering in 2D and HD with
//!   silhouette-based cut selection.
//! - [`metrics`]: MST-based FPR/FNR, neighborhood and distance metrics, HD k-NN.
//! - [`seriation`]: distance-matrix orderings.
//! - [`summaries`]: cluster summary labels with certainty.
//! - [`flow`]: frames, cluster stretching, flow paths, bundling and hulls.
//! - [`session`] and [`service`]: cached session computation and the HTTP API.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod flow;
pub mod matrix;
pub mod metrics;
pub mod projection;
pub mod seriation;
pub mod service;
pub mod session;
pub mod summaries;
pub mod synthetic;

pub use error::{Error, Result};
pub use matrix::{DistanceMatrix, Matrix};
