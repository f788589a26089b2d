//! Role-community detection in directed networks.
//!
//! The pipeline has three stages: a path-count similarity matrix between
//! nodes (cosine similarity of scaled in/out walk-count profiles), a sparse
//! connected similarity network built with the relaxed minimum spanning
//! tree, and a multiscale diffusion-based community scan over that network.

pub mod error;
pub mod graph;
pub mod pipeline;
pub mod rbs;
pub mod rmst;
pub mod stability;

pub use error::{Error, Result};
