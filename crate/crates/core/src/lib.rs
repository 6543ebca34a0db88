//! Concept drift detection for temporally ordered, labeled feature vectors.
//!
//! A family of samples is cut into fixed-size temporal batches. Each pair of
//! consecutive batches is clustered with MiniBatch K-Means and scored by its
//! average silhouette coefficient; a jump in that score between consecutive
//! pairs flags drift. The [`scenarios`] module then measures what drift-aware
//! retraining buys over never retraining and over retraining every interval,
//! using the four classifiers in [`classifiers`].

pub mod classifiers;
pub mod clustering;
pub mod data;
mod error;
pub mod linalg;
pub mod scenarios;
pub mod silhouette;
pub mod synth;

pub use error::{Error, Result};
