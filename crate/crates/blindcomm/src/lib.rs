//! Blind community detection from filtered graph signals.
//!
//! Observations are signals `y = H(S) w` produced by a polynomial graph
//! filter driven by random excitations, where each observation's graph is an
//! unobserved draw from a latent planted partition model. The library infers
//! the number of communities (MDL order selection on the sample-covariance
//! spectrum) and the node partition (k-means on the top covariance
//! eigenvectors), provides the matching analytic theory as an oracle, and
//! ships an experiment harness plus a CLI (`blindcomm`).

pub mod config;
pub mod error;
pub mod excitation;
pub mod experiment;
pub mod filter;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod order;
pub mod partition;
pub mod rng;
pub mod spectral;
pub mod stocks;
pub mod theory;

pub use error::{Error, Result};
