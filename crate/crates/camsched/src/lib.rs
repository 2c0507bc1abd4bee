//! Camera-polling scheduler for multi-camera target tracking.
//!
//! In a network of non-overlapping cameras, re-identifying a target in every
//! frame of every camera is wasteful: most polls either look at the camera the
//! target is already known to occupy or at cameras it cannot have reached yet.
//! This crate treats "which camera do we poll next, if any" as a sequential
//! decision problem and learns a polling policy with Q-learning.
//!
//! Module map:
//! - [`netmodel`]: camera network and trajectory data model, file formats,
//!   synthetic data generation, train/test splitting, link inference.
//! - [`env`]: the decision process itself: agent state, feature encoding,
//!   presence oracle with simulated re-identification errors, rewards,
//!   transitions.
//! - [`mlp`]: small fully connected Q-network with manual backpropagation and
//!   Adam, plus a finite-difference gradient check.
//! - [`agent`]: replay memory, n-step targets, the training loop, greedy
//!   rollouts, and a tabular Q-learning variant for small state spaces.
//! - [`baselines`]: exhaustive, neighbor, and Gaussian-wait polling schedulers.
//! - [`metrics`]: selection accuracy/precision/recall, polled-frame counts,
//!   confusion matrices, and multi-camera tracking accuracy.

pub mod agent;
pub mod baselines;
pub mod env;
pub mod error;
pub mod metrics;
pub mod mlp;
pub mod netmodel;
pub mod seed;

pub use error::{Error, Result};
