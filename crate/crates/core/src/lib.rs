//! Single-shot flash relighting guided by a depth map.
//!
//! The pipeline takes a flash photograph and its depth map, estimates
//! intrinsic maps (albedo, normals, roughness), predicts cast shadows for a
//! novel light direction from a light-frame encoding of the point cloud, and
//! synthesizes the relit image. Directional relights combine linearly into
//! environment relights.

pub mod brdf;
pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod imaging;
pub mod math;
pub mod neural;
pub mod relight;

pub use error::{Error, Result};
