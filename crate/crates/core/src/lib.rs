pub mod error;
pub mod grid;
pub mod systems;

pub use error::{Error, Result};
pub use grid::{SpatioTemporalGrid, SplitGrid, Normalizer, NormalizerKind};
pub mod embedding;
pub mod network;
pub mod forecast;
pub mod metrics;
pub mod experiment;
pub mod config;
pub mod cli;
