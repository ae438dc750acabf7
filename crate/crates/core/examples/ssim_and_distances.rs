//! Structural similarity on a few synthetic fields and the two distances
//! between feature geometries.
//!
//! cargo run --release --example ssim_and_distances

use spacetime_forecast::embedding::FeatureParams;
use spacetime_forecast::metrics::{distance_euclidean, distance_manhattan, ssim, SsimConfig};
use spacetime_forecast::SpatioTemporalGrid;

fn main() -> spacetime_forecast::Result<()> {
    let wave = |phase: f64| {
        SpatioTemporalGrid::from_fn(40, 40, move |n, m| ((n as f64 * 0.3) + (m as f64 * 0.2) + phase).sin())
    };
    let reference = wave(0.0)?;
    let cfg = SsimConfig::default();
    let cases = [
        ("identical", reference.clone()),
        ("phase +0.3", wave(0.3)?),
        ("phase +pi", wave(std::f64::consts::PI)?),
        ("scaled x0.5", reference.try_map(|v| Ok(0.5 * v))?),
        ("offset +1", reference.try_map(|v| Ok(v + 1.0))?),
        ("flat zero", SpatioTemporalGrid::from_fn(40, 40, |_, _| 0.0)?),
    ];
    for (name, g) in &cases {
        println!("{name:<12} ssim {:+.4}", ssim(&reference, g, &cfg)?);
    }

    let star = FeatureParams::new(1, 3, 2, 3)?;
    for p in [star, FeatureParams::new(2, 3, 2, 3)?, FeatureParams::new(0, 1, 5, 9)?] {
        println!(
            "{p} vs {star}: euclidean {:.4} manhattan {}",
            distance_euclidean(&p, &star),
            distance_manhattan(&p, &star)
        );
    }
    Ok(())
}
