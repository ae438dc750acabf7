//! False nearest neighbours (Kennel, Brown & Abarbanel) along a grid axis.

use rayon::prelude::*;

use super::mi::lines;
use super::Axis;
use crate::error::{Error, Result};
use crate::grid::SpatioTemporalGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnnConfig {
    /// Distance-ratio threshold for the added coordinate.
    pub r_tol: f64,
    /// Threshold on the `(d+1)`-dimensional distance relative to the series spread.
    pub a_tol: f64,
    pub max_dim: usize,
    /// Treat spatial lines as rings; every site then yields an embedding point.
    pub periodic_space: bool,
}

impl Default for FnnConfig {
    fn default() -> Self {
        Self {
            r_tol: 15.0,
            a_tol: 2.0,
            max_dim: 10,
            periodic_space: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnnProfile {
    pub axis: Axis,
    pub lag: usize,
    /// `1..=max_dim`.
    pub dims: Vec<usize>,
    pub false_fraction: Vec<f64>,
    /// Every line along the axis was constant.
    pub degenerate: bool,
}

impl FnnProfile {
    /// Dimension with the smallest false fraction (the first, on ties).
    pub fn min_fraction_dimension(&self) -> usize {
        let mut best = 0;
        for (i, &f) in self.false_fraction.iter().enumerate() {
            if f < self.false_fraction[best] {
                best = i;
            }
        }
        self.dims[best]
    }

    /// First embedding dimension whose false fraction is below `threshold`.
    pub fn embedding_dimension(&self, threshold: f64) -> Option<usize> {
        self.dims
            .iter()
            .zip(&self.false_fraction)
            .find(|(_, &f)| f < threshold)
            .map(|(&d, _)| d)
    }
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// False-neighbour fractions of one scalar series for `d = 1..=max_dim`.
///
/// Returns `None` for a constant series. Uses exhaustive neighbour search.
pub fn series_false_fractions(x: &[f64], lag: usize, cfg: &FnnConfig) -> Result<Option<Vec<f64>>> {
    false_fractions(x, lag, cfg, false)
}

fn false_fractions(x: &[f64], lag: usize, cfg: &FnnConfig, periodic: bool) -> Result<Option<Vec<f64>>> {
    if lag < 1 || cfg.max_dim < 1 {
        return Err(Error::InvalidConfig("FNN lag and max_dim must be at least 1".into()));
    }
    let needed = if periodic { 3 } else { cfg.max_dim * lag + 2 };
    if x.len() < needed {
        return Err(Error::Range(format!(
            "FNN with max_dim={} and lag={lag} needs at least {needed} samples, got {}",
            cfg.max_dim,
            x.len()
        )));
    }
    let spread = std_dev(x);
    if !(spread > 0.0) {
        return Ok(None);
    }
    // A ring is unrolled so that every start index has all coordinates.
    let unrolled: Vec<f64>;
    let series = if periodic {
        unrolled = (0..x.len() + cfg.max_dim * lag).map(|i| x[i % x.len()]).collect();
        &unrolled[..]
    } else {
        x
    };
    let mut out = Vec::with_capacity(cfg.max_dim);
    for d in 1..=cfg.max_dim {
        // Points need the extra coordinate at offset d*lag.
        let count = if periodic { x.len() } else { x.len() - d * lag };
        let mut false_count = 0usize;
        for i in 0..count {
            let mut best = f64::INFINITY;
            let mut best_j = usize::MAX;
            for j in 0..count {
                if j == i {
                    continue;
                }
                let mut dist = 0.0;
                for c in 0..d {
                    let diff = series[i + c * lag] - series[j + c * lag];
                    dist += diff * diff;
                    if dist >= best {
                        break;
                    }
                }
                if dist < best {
                    best = dist;
                    best_j = j;
                }
            }
            let extra = (series[i + d * lag] - series[best_j + d * lag]).abs();
            let r_d = best.sqrt();
            let ratio_false = if r_d > 0.0 {
                extra / r_d > cfg.r_tol
            } else {
                extra > 0.0
            };
            let r_next = (best + extra * extra).sqrt();
            if ratio_false || r_next / spread > cfg.a_tol {
                false_count += 1;
            }
        }
        out.push(false_count as f64 / count as f64);
    }
    Ok(Some(out))
}

/// FNN fractions averaged over every non-constant line along `axis`.
pub fn false_nearest_neighbors(
    grid: &SpatioTemporalGrid,
    axis: Axis,
    lag: usize,
    cfg: &FnnConfig,
) -> Result<FnnProfile> {
    let periodic = axis == Axis::Spatial && cfg.periodic_space;
    let per_line = lines(grid, axis)
        .par_iter()
        .map(|line| false_fractions(line, lag, cfg, periodic))
        .collect::<Result<Vec<_>>>()?;
    let active: Vec<&Vec<f64>> = per_line.iter().flatten().collect();
    let degenerate = active.is_empty();
    let false_fraction = (0..cfg.max_dim)
        .map(|d| {
            if degenerate {
                0.0
            } else {
                active.iter().map(|f| f[d]).sum::<f64>() / active.len() as f64
            }
        })
        .collect();
    Ok(FnnProfile {
        axis,
        lag,
        dims: (1..=cfg.max_dim).collect(),
        false_fraction,
        degenerate,
    })
}
