//! Learned interest point detection on triangle meshes.
//!
//! The crate covers the full pipeline:
//!
//! - [`mesh`]: OFF parsing, diameter, normals, Taubin curvature, kNN/radius
//!   queries and edge-graph geodesics.
//! - [`attributes`]: the 43 per-vertex attributes (10 basic, 33 multi-scale
//!   difference-of-Gaussians).
//! - [`forest`]: a from-scratch Gini random forest with per-tree balanced
//!   bootstrapping for heavily imbalanced labels.
//! - [`groundtruth`]: clustering of annotator clicks into ground-truth points.
//! - [`detector`]: labeling, training, scoring and non-max suppression.
//! - [`evaluation`]: geodesic correspondence, FNE/FPE, set-wise IOU and AUC.
//! - [`config`] and [`commands`]: the file-driven pipeline behind the CLI.
//!
//! Per-vertex and per-tree loops run on rayon when the `parallel` feature is
//! enabled (default); results are identical with or without it.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attributes;
pub mod commands;
pub mod config;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod fixtures;
pub mod forest;
pub mod groundtruth;
pub mod mesh;

pub use error::{Error, Result};
