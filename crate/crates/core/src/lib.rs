//! Digital-twin simulation and learned beam selection for mmWave links.
//!
//! The crate models a base station serving users along street-level grids,
//! traces line-of-sight channels against that model, and scores beam-steering
//! codebooks over the synthesized channels. On top of the simulator it
//! provides dataset generation (including a perturbed "real world" surrogate),
//! a small from-scratch MLP classifier for position-to-beam prediction, and
//! top-k evaluation utilities with a nearest-neighbor lookup baseline.
//!
//! Everything is deterministic given explicit seeds: random draws go through
//! [`seeding::derive_seed`] so that per-item streams are independent of
//! iteration order, and floating-point accumulations use fixed orders.

pub mod codebook;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod neural;
pub mod raytrace;
pub mod seeding;

pub use error::{Error, Result};
