//! Reads (I*, J*, K*, L*) off the mutual-information and false-nearest-neighbour
//! profiles of a simulated lattice.
//!
//! cargo run --release --example select_features

use spacetime_forecast::embedding::{select_features, SelectionConfig};
use spacetime_forecast::grid::split;
use spacetime_forecast::systems::{simulate_henon, simulate_lorenz96, HenonLatticeConfig, Lorenz96Config, Lorenz96Init};

fn main() -> spacetime_forecast::Result<()> {
    let henon = simulate_henon(&HenonLatticeConfig { seed: 1, ..Default::default() })?;
    let l96 = simulate_lorenz96(&Lorenz96Config {
        init: Lorenz96Init::Perturbed { seed: 1, amplitude: 1.0 },
        ..Default::default()
    })?;

    let cases = [("henon", henon, false), ("lorenz96", l96, true)];
    for (name, grid, periodic) in cases {
        let train = split(&grid, 500)?.train;
        let cfg = SelectionConfig {
            periodic_space: periodic,
            fnn_threshold: 0.05,
            ..Default::default()
        };
        let sel = select_features(&train, &cfg)?;
        println!("== {name}: {}", sel.params);
        println!("temporal MI (bits), first 8 lags:");
        for (lag, v) in sel.temporal_mi.lags.iter().zip(&sel.temporal_mi.mi_bits).take(8) {
            println!("  {lag:3} {v:.4}");
        }
        println!("spatial MI (bits), first 8 lags:");
        for (lag, v) in sel.spatial_mi.lags.iter().zip(&sel.spatial_mi.mi_bits).take(8) {
            println!("  {lag:3} {v:.4}");
        }
        let fnn = |p: &spacetime_forecast::embedding::FnnProfile| {
            p.false_fraction.iter().map(|f| format!("{f:.3}")).collect::<Vec<_>>().join(" ")
        };
        println!("temporal FNN fractions (d=1..): {}", fnn(&sel.temporal_fnn));
        println!("spatial  FNN fractions (d=1..): {}", fnn(&sel.spatial_fnn));
        println!("embedding dims: temporal {}, spatial {}", sel.temporal_dim, sel.spatial_dim);
    }
    Ok(())
}
