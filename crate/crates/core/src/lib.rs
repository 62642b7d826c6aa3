//! Smartphone pavement-roughness pipeline: trace ingest, route
//! segmentation, section RMS and IRI estimates, distress indices, rating
//! panel QA, and index correlations.

pub mod config;
pub mod correlation;
pub mod distress;
pub mod error;
pub mod ingest;
pub mod model;
pub mod qa;
pub mod roughness;
pub mod segment;
pub mod stats;
pub mod synth;

pub use config::Config;
pub use error::{Error, Result};
pub use model::*;
