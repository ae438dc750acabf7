//! Structural similarity between grids and distances between feature quadruples.

use crate::embedding::FeatureParams;
use crate::error::{Error, Result};
use crate::grid::SpatioTemporalGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    /// Side of the square sliding window.
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    /// Fixed dynamic range; `None` uses `max - min` over both grids.
    pub dynamic_range: Option<f64>,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 8,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: None,
        }
    }
}

impl SsimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::InvalidConfig("SSIM window must be >= 1".into()));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::InvalidConfig(format!("SSIM needs k1, k2 > 0, got {} and {}", self.k1, self.k2)));
        }
        if let Some(r) = self.dynamic_range {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!("dynamic range must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// Mean SSIM over every `window x window` block (stride 1).
pub fn ssim(a: &SpatioTemporalGrid, b: &SpatioTemporalGrid, cfg: &SsimConfig) -> Result<f64> {
    cfg.validate()?;
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension {
            expected: a.rows() * a.cols(),
            got: b.rows() * b.cols(),
        });
    }
    let (rows, cols, w) = (a.rows(), a.cols(), cfg.window);
    if w > rows || w > cols {
        return Err(Error::Range(format!("SSIM window {w} does not fit a {rows}x{cols} grid")));
    }
    let range = match cfg.dynamic_range {
        Some(r) => r,
        None => {
            let (lo_a, hi_a) = a.min_max();
            let (lo_b, hi_b) = b.min_max();
            hi_a.max(hi_b) - lo_a.min(lo_b)
        }
    };
    if range == 0.0 {
        // Both grids are the same constant.
        return Ok(1.0);
    }
    let c1 = (cfg.k1 * range).powi(2);
    let c2 = (cfg.k2 * range).powi(2);
    let area = (w * w) as f64;
    let (va, vb) = (a.as_slice(), b.as_slice());
    let mut total = 0.0;
    for r0 in 0..=rows - w {
        for c0 in 0..=cols - w {
            let (mut sa, mut sb) = (0.0, 0.0);
            for r in r0..r0 + w {
                for c in c0..c0 + w {
                    sa += va[r * cols + c];
                    sb += vb[r * cols + c];
                }
            }
            let (ma, mb) = (sa / area, sb / area);
            let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
            for r in r0..r0 + w {
                for c in c0..c0 + w {
                    let da = va[r * cols + c] - ma;
                    let db = vb[r * cols + c] - mb;
                    saa += da * da;
                    sbb += db * db;
                    sab += da * db;
                }
            }
            let (var_a, var_b, cov) = (saa / area, sbb / area, sab / area);
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        }
    }
    Ok(total / ((rows - w + 1) * (cols - w + 1)) as f64)
}

/// SSIM of `candidate` against `reference`, with the dynamic range taken from
/// `reference` alone unless `cfg` fixes one. A diverging candidate then cannot
/// inflate the stabilising constants and score near 1.
pub fn ssim_against(reference: &SpatioTemporalGrid, candidate: &SpatioTemporalGrid, cfg: &SsimConfig) -> Result<f64> {
    if cfg.dynamic_range.is_some() {
        return ssim(reference, candidate, cfg);
    }
    let (lo, hi) = reference.min_max();
    let cfg = SsimConfig {
        dynamic_range: (hi > lo).then_some(hi - lo),
        ..*cfg
    };
    ssim(reference, candidate, &cfg)
}

fn deltas(p: &FeatureParams, q: &FeatureParams) -> [f64; 4] {
    let (a, b) = (p.as_array(), q.as_array());
    std::array::from_fn(|i| a[i] as f64 - b[i] as f64)
}

/// `sqrt(dI^2 + dJ^2 + dK^2 + dL^2)`.
pub fn distance_euclidean(p: &FeatureParams, p_star: &FeatureParams) -> f64 {
    deltas(p, p_star).iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// `|dI| + |dJ| + |dK| + |dL|`.
pub fn distance_manhattan(p: &FeatureParams, p_star: &FeatureParams) -> f64 {
    deltas(p, p_star).iter().map(|d| d.abs()).sum()
}
