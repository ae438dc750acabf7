//! Feature-geometry selection from training data (mutual information for the
//! lags, false nearest neighbours for the stencil sizes) and construction of
//! the space-time delay training patterns.

mod fnn;
mod mi;
mod patterns;
mod select;

use std::fmt;

pub use fnn::{false_nearest_neighbors, series_false_fractions, FnnConfig, FnnProfile};
pub use mi::{
    binned_entropy, first_minimum, mi_profile, mutual_information, spatial_mi_profile,
    temporal_mi_profile, MiEstimate, MiMode, MiOptions, MiProfile,
};
pub(crate) use patterns::fill_stencil;
pub use patterns::{build_patterns, check_feasible, BoundaryPolicy, FeaturePattern, FeatureParams, PatternSet};
pub use select::{select_features, Selection, SelectionConfig};

/// Direction along which 1-D lines are extracted from a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Time series at a fixed site.
    Temporal,
    /// Spatial profile at a fixed time.
    Spatial,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Temporal => "temporal",
            Axis::Spatial => "spatial",
        })
    }
}
