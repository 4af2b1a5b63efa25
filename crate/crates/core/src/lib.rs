//! Streaming gradient boosting with no-regret online weak learners.
//!
//! The crate provides two online boosting algorithms (one for smooth
//! strongly convex losses, one for non-smooth strongly convex losses via
//! residual projection), a batch gradient-boosting baseline, and a harness
//! that measures weak-learner edge, average regret and training cost.

pub mod batch_gb;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod learners;
pub mod losses;
pub mod metrics;
pub mod model_io;
pub mod sgb_nonsmooth;
pub mod sgb_smooth;
pub mod synthetic;

pub use error::{Error, Result};
