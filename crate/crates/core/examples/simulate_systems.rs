//! Generates the three benchmark systems and writes them as grid files.
//!
//! cargo run --release --example simulate_systems [out_dir]

use std::path::PathBuf;

use spacetime_forecast::grid::write_grid;
use spacetime_forecast::systems::{
    simulate_henon, simulate_ks, simulate_lorenz96, HenonLatticeConfig, KsConfig, Lorenz96Config, Lorenz96Init,
};
use spacetime_forecast::SpatioTemporalGrid;

fn describe(name: &str, g: &SpatioTemporalGrid) {
    let (lo, hi) = g.min_max();
    let mean = g.as_slice().iter().sum::<f64>() / g.as_slice().len() as f64;
    println!("{name:<10} {:>4} x {:<4} range [{lo:8.4}, {hi:8.4}] mean {mean:8.4}", g.rows(), g.cols());
}

fn main() -> spacetime_forecast::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("stf-systems"));
    std::fs::create_dir_all(&out)?;

    let henon = simulate_henon(&HenonLatticeConfig { seed: 1, ..Default::default() })?;
    let l96 = simulate_lorenz96(&Lorenz96Config {
        init: Lorenz96Init::Perturbed { seed: 1, amplitude: 1.0 },
        ..Default::default()
    })?;
    let ks = simulate_ks(&KsConfig { modes: 22, ..Default::default() })?;

    for (name, g) in [("henon", &henon), ("lorenz96", &l96), ("ks", &ks)] {
        describe(name, g);
        write_grid(g, out.join(format!("{name}.grid")))?;
    }
    println!("grids written to {}", out.display());
    Ok(())
}
