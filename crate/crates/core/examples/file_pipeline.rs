//! End-to-end run on gridded observations loaded from disk: a synthetic
//! sunspot-style butterfly diagram goes through the grid file format, a
//! logarithmic normalizer, selection, training and a closed-loop forecast.
//!
//! cargo run --release --example file_pipeline

use spacetime_forecast::config::parse_config_str;
use spacetime_forecast::embedding::{build_patterns, select_features};
use spacetime_forecast::forecast::forecast;
use spacetime_forecast::grid::{denormalize, normalize, split, write_grid};
use spacetime_forecast::metrics::ssim_against;
use spacetime_forecast::network::{init_network, train, NetworkConfig};
use spacetime_forecast::systems::{synthetic_butterfly, ButterflyConfig};

fn main() -> spacetime_forecast::Result<()> {
    let dir = tempfile::tempdir()?;
    let grid = synthetic_butterfly(&ButterflyConfig { seed: 7, ..Default::default() })?;
    write_grid(&grid, dir.path().join("butterfly.grid"))?;

    let text = "\
[system]
kind = file
path = butterfly.grid

[split]
n_train = 1646

[normalizer]
kind = logarithmic
alpha_nor = 0
beta_nor = 10

[selection]
fnn_max_dim = 10
fnn_threshold = 0.05

[network]
hidden = 20
activation = logistic
alpha_rng = 1e-2

[training]
eta = 0.3
momentum = 0.01
n_steps = 200000
";
    let cfg = parse_config_str(text, &dir.path().join("butterfly.cfg"))?;
    let grid = cfg.load_grid()?;
    let s = split(&grid, cfg.n_train)?;
    println!("loaded {} x {} ({})", grid.rows(), grid.cols(), grid.space_label.as_deref().unwrap_or("space"));

    let params = select_features(&s.train, &cfg.selection)?.params;
    println!("selected {params}");

    let train_norm = normalize(&s.train, &cfg.normalizer)?;
    let patterns = build_patterns(&train_norm, &params, cfg.boundary)?;
    let net = init_network(&NetworkConfig { input_dim: params.input_dim(), ..cfg.network })?;
    let out = train(net, &patterns, &cfg.training)?;
    println!("train mse (normalized) {:.3e}", out.network.mse(&patterns)?);

    let pred = forecast(&out.network, &train_norm, &params, s.test.rows(), cfg.boundary)?
        .predicted
        .expect("non-empty test split");
    let pred = denormalize(&pred, &cfg.normalizer)?;
    println!("forecast {} rotations, ssim {:.4}", pred.rows(), ssim_against(&s.test, &pred, &cfg.ssim)?);
    Ok(())
}
