use std::f64::consts::PI;

use rand::Rng;

use super::seeded_rng;
use crate::error::{Error, Result};
use crate::grid::SpatioTemporalGrid;

/// A synthetic stand-in for sunspot-area data: activity bands that appear at
/// mid latitudes each cycle and drift toward the equator.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyConfig {
    /// Time slices (rotations).
    pub steps: usize,
    /// Latitude bins spanning [-90, 90] degrees.
    pub latitudes: usize,
    /// Cycle length in time slices.
    pub period: f64,
    /// Peak area of a band.
    pub amplitude: f64,
    /// Relative multiplicative noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for ButterflyConfig {
    fn default() -> Self {
        Self {
            steps: 1888,
            latitudes: 50,
            period: 147.0,
            amplitude: 1000.0,
            noise: 0.3,
            seed: 0,
        }
    }
}

pub fn synthetic_butterfly(config: &ButterflyConfig) -> Result<SpatioTemporalGrid> {
    if config.steps < 1 || config.latitudes < 2 || !(config.period > 1.0) || !(config.noise >= 0.0) {
        return Err(Error::InvalidConfig(
            "butterfly grid needs steps >= 1, latitudes >= 2, period > 1 and noise >= 0".into(),
        ));
    }
    let mut rng = seeded_rng(config.seed);
    let m = config.latitudes;
    let mut values = Vec::with_capacity(config.steps * m);
    for n in 0..config.steps {
        let phase = (n as f64 / config.period).fract();
        let strength = (PI * phase).sin().powi(2);
        // Band centre migrates from 30 to 5 degrees over a cycle.
        let centre = 30.0 - 25.0 * phase;
        for j in 0..m {
            let lat = -90.0 + 180.0 * (j as f64 + 0.5) / m as f64;
            let band = (-((lat.abs() - centre) / 6.0).powi(2)).exp();
            let jitter = 1.0 + config.noise * (2.0 * rng.gen::<f64>() - 1.0);
            values.push((config.amplitude * strength * band * jitter).max(0.0));
        }
    }
    Ok(SpatioTemporalGrid::from_vec(config.steps, m, values)?.with_space_label("latitude"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_negative_and_symmetric_bands() {
        let g = synthetic_butterfly(&ButterflyConfig { steps: 300, noise: 0.0, ..Default::default() }).unwrap();
        assert!(g.as_slice().iter().all(|&v| v >= 0.0));
        for n in [10, 70, 200] {
            let row = g.row(n);
            for j in 0..25 {
                assert!((row[j] - row[49 - j]).abs() < 1e-9 * (1.0 + row[j]));
            }
        }
        // Cycle minimum has no activity.
        assert!(g.row(0).iter().all(|&v| v == 0.0));
    }
}
