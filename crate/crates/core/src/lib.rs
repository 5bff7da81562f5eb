//! Object-goal navigation on procedural 2D semantic worlds: mapping, geodesic
//! cost maps, sampling-based MPC, cost-map providers, dataset collection and
//! an evaluation harness.

pub mod controller;
pub mod costfield;
pub mod error;
pub mod grid;
pub mod harness;
pub mod mapping;
pub mod predictor;
pub mod world;

pub use error::{Error, Result};
pub mod dataset;
