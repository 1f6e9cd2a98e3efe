//! Deformable radar polygon: a lightweight free-space representation built
//! from sparse radar detections, tracked over frames and predicted forward
//! with Doppler.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collision;
pub mod deformation;
pub mod error;
pub mod formation;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod ism;
pub mod metrics;
pub mod sim;
pub mod svg;
