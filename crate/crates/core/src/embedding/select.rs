use super::mi::zero_lag_bits;
use super::{
    false_nearest_neighbors, first_minimum, mi_profile, Axis, FeatureParams, FnnConfig, FnnProfile,
    MiMode, MiOptions, MiProfile,
};
use crate::error::{Error, Result};
use crate::grid::SpatioTemporalGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub bins: usize,
    pub mi_mode: MiMode,
    /// Spatial lines are rings (periodic systems).
    pub periodic_space: bool,
    /// `None` picks the largest lag the grid supports (capped at 100).
    pub max_temporal_lag: Option<usize>,
    pub max_spatial_lag: Option<usize>,
    pub plateau_drop: f64,
    pub plateau_window: usize,
    /// Prepend the lag-0 value (the binned entropy) before searching for the
    /// first minimum, so lag 1 can be selected when `I(1) < I(2)`.
    pub anchor_zero_lag: bool,
    pub fnn: FnnConfig,
    /// A dimension is accepted once its false fraction falls below this.
    pub fnn_threshold: f64,
    /// When no dimension reaches the threshold, take the one with the fewest
    /// false neighbours instead of failing.
    pub fnn_min_fallback: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            bins: 16,
            mi_mode: MiMode::Pooled,
            periodic_space: false,
            max_temporal_lag: None,
            max_spatial_lag: None,
            plateau_drop: 0.5,
            plateau_window: 3,
            anchor_zero_lag: true,
            fnn: FnnConfig::default(),
            fnn_threshold: 0.01,
            fnn_min_fallback: true,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!("bins must be >= 2, got {}", self.bins)));
        }
        if !(self.plateau_drop > 0.0 && self.plateau_drop <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "plateau_drop must lie in (0, 1], got {}",
                self.plateau_drop
            )));
        }
        if !(self.fnn_threshold > 0.0 && self.fnn_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fnn_threshold must lie in (0, 1), got {}",
                self.fnn_threshold
            )));
        }
        if self.fnn.max_dim < 1 || !(self.fnn.r_tol > 0.0) || !(self.fnn.a_tol > 0.0) {
            return Err(Error::InvalidConfig("FNN needs max_dim >= 1 and positive tolerances".into()));
        }
        Ok(())
    }

    fn mi_options(&self) -> MiOptions {
        MiOptions {
            bins: self.bins,
            mode: self.mi_mode,
            periodic_space: self.periodic_space,
        }
    }
}

/// The selected geometry plus the profiles it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub params: FeatureParams,
    pub temporal_mi: MiProfile,
    pub spatial_mi: MiProfile,
    pub temporal_fnn: FnnProfile,
    pub spatial_fnn: FnnProfile,
    /// FNN embedding dimension along time (`J* + 1`).
    pub temporal_dim: usize,
    /// FNN embedding dimension along space.
    pub spatial_dim: usize,
}

fn auto_lag(len: usize, requested: Option<usize>, axis: Axis) -> Result<usize> {
    if let Some(l) = requested {
        return Ok(l);
    }
    let lag = ((len - 1) / 2).min(100);
    if lag < 3 {
        return Err(Error::Range(format!(
            "{axis} axis has only {len} samples; too short for an MI profile"
        )));
    }
    Ok(lag)
}

fn pick_lag(grid: &SpatioTemporalGrid, profile: &MiProfile, cfg: &SelectionConfig) -> Result<usize> {
    if cfg.anchor_zero_lag {
        let h = zero_lag_bits(grid, profile.axis, &cfg.mi_options());
        first_minimum(&profile.with_zero_lag(h), cfg.plateau_drop, cfg.plateau_window)
    } else {
        first_minimum(profile, cfg.plateau_drop, cfg.plateau_window)
    }
}

fn embedding_dim(profile: &FnnProfile, cfg: &SelectionConfig) -> Result<usize> {
    if let Some(d) = profile.embedding_dimension(cfg.fnn_threshold) {
        return Ok(d);
    }
    if cfg.fnn_min_fallback {
        return Ok(profile.min_fraction_dimension());
    }
    Err(Error::SelectionFailure(format!(
        "{} false-neighbour fraction never fell below {} up to dimension {} (min {:.4})",
        profile.axis,
        cfg.fnn_threshold,
        profile.dims.len(),
        profile.false_fraction.iter().copied().fold(f64::INFINITY, f64::min)
    )))
}

/// Lowers `max_dim` to the largest dimension an open line of `len` samples can embed at `lag`.
fn capped(fnn: &FnnConfig, len: usize, lag: usize, periodic: bool) -> Result<FnnConfig> {
    if periodic {
        return Ok(*fnn);
    }
    let fits = len.saturating_sub(2) / lag;
    if fits < 1 {
        return Err(Error::SelectionFailure(format!(
            "a line of {len} samples is too short to embed at lag {lag}"
        )));
    }
    Ok(FnnConfig {
        max_dim: fnn.max_dim.min(fits),
        ..*fnn
    })
}

/// Estimates `(I*, J*, K*, L*)` from a training grid.
///
/// `L*` and `K*` are the first minima of the temporal and spatial MI profiles.
/// With `d_t` and `d_s` the FNN embedding dimensions along each axis at those
/// lags, `J* = d_t - 1` and `I* = ceil((d_s - 1) / 2)`.
pub fn select_features(grid: &SpatioTemporalGrid, cfg: &SelectionConfig) -> Result<Selection> {
    cfg.validate()?;
    let opts = cfg.mi_options();
    let t_lag = auto_lag(grid.rows(), cfg.max_temporal_lag, Axis::Temporal)?;
    let s_lag = auto_lag(grid.cols(), cfg.max_spatial_lag, Axis::Spatial)?;
    let temporal_mi = mi_profile(grid, Axis::Temporal, t_lag, &opts)?;
    let spatial_mi = mi_profile(grid, Axis::Spatial, s_lag, &opts)?;
    let l_star = pick_lag(grid, &temporal_mi, cfg)?;
    let k_star = pick_lag(grid, &spatial_mi, cfg)?;

    let fnn = FnnConfig {
        periodic_space: cfg.periodic_space,
        ..cfg.fnn
    };
    let temporal_fnn = false_nearest_neighbors(grid, Axis::Temporal, l_star, &capped(&fnn, grid.rows(), l_star, false)?)?;
    let spatial_fnn =
        false_nearest_neighbors(grid, Axis::Spatial, k_star, &capped(&fnn, grid.cols(), k_star, fnn.periodic_space)?)?;
    let temporal_dim = embedding_dim(&temporal_fnn, cfg)?;
    let spatial_dim = embedding_dim(&spatial_fnn, cfg)?;

    let params = FeatureParams::new(spatial_dim / 2, temporal_dim - 1, k_star, l_star)?;
    Ok(Selection {
        params,
        temporal_mi,
        spatial_mi,
        temporal_fnn,
        spatial_fnn,
        temporal_dim,
        spatial_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lag_anchor_allows_lag_one() {
        let p = MiProfile {
            axis: Axis::Spatial,
            lags: vec![1, 2, 3],
            mi_bits: vec![0.2, 0.3, 0.25],
            degenerate: vec![false; 3],
        };
        assert_eq!(first_minimum(&p.with_zero_lag(2.0), 0.5, 1).unwrap(), 1);
        assert!(first_minimum(&p, 0.5, 1).is_err());
    }

    #[test]
    fn fallback_switch() {
        let p = FnnProfile {
            axis: Axis::Temporal,
            lag: 2,
            dims: vec![1, 2, 3],
            false_fraction: vec![0.5, 0.1, 0.2],
            degenerate: false,
        };
        let mut cfg = SelectionConfig::default();
        assert_eq!(embedding_dim(&p, &cfg).unwrap(), 2);
        cfg.fnn_min_fallback = false;
        assert!(matches!(embedding_dim(&p, &cfg), Err(Error::SelectionFailure(_))));
    }
}
