//! Trains a space-time-delay network on Lorenz-96 from the bundled preset,
//! forecasts the held-out slices closed-loop and compares against persistence.
//!
//! cargo run --release --example train_and_forecast [seed]

use spacetime_forecast::config::parse_config;
use spacetime_forecast::embedding::build_patterns;
use spacetime_forecast::forecast::forecast;
use spacetime_forecast::grid::{denormalize, normalize, split};
use spacetime_forecast::metrics::ssim_against;
use spacetime_forecast::network::{init_network, train, NetworkConfig};
use spacetime_forecast::SpatioTemporalGrid;

fn main() -> spacetime_forecast::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let preset = concat!(env!("CARGO_MANIFEST_DIR"), "/presets/lorenz96.cfg");
    let mut cfg = parse_config(preset)?;
    cfg.network.seed = seed;
    cfg.training.seed = seed;

    let grid = cfg.load_grid()?;
    let s = split(&grid, cfg.n_train)?;
    let params = cfg.features.expect("preset pins the geometry");
    let train_norm = normalize(&s.train, &cfg.normalizer)?;
    let patterns = build_patterns(&train_norm, &params, cfg.boundary)?;
    println!("{params}: {} patterns of dimension {}", patterns.len(), params.input_dim());

    let net = init_network(&NetworkConfig { input_dim: params.input_dim(), ..cfg.network })?;
    let out = train(net, &patterns, &cfg.training)?;
    for (step, loss) in out.loss_trace.iter().step_by(20) {
        println!("  step {step:>7}  loss {loss:.3e}");
    }
    println!("train mse {:.3e}", out.network.mse(&patterns)?);

    let pred = forecast(&out.network, &train_norm, &params, s.test.rows(), cfg.boundary)?
        .predicted
        .expect("non-empty test split");
    let pred = denormalize(&pred, &cfg.normalizer)?;
    let last = s.train.row(s.train.rows() - 1).to_vec();
    let persistence = SpatioTemporalGrid::from_fn(s.test.rows(), s.test.cols(), |_, m| last[m])?;

    println!("ssim network     {:.4}", ssim_against(&s.test, &pred, &cfg.ssim)?);
    println!("ssim persistence {:.4}", ssim_against(&s.test, &persistence, &cfg.ssim)?);
    Ok(())
}
