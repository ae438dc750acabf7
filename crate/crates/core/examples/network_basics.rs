//! The one-hidden-layer network on its own: a finite-difference check of the
//! backpropagated gradient, a small regression fit and the text format.
//!
//! cargo run --release --example network_basics

use spacetime_forecast::embedding::PatternSet;
use spacetime_forecast::network::{
    backprop_gradients, format_network, init_network, parse_network, train, Activation, NetworkConfig, TrainConfig,
};

fn main() -> spacetime_forecast::Result<()> {
    let net = init_network(&NetworkConfig {
        activation: Activation::Logistic,
        alpha_rng: 1.0,
        seed: 3,
        ..NetworkConfig::new(3, 4)
    })?;
    let x = [0.2, -0.4, 0.7];
    let target = 0.3;
    let analytic = backprop_gradients(&net, &x, target)?;

    // Perturb the first output weight and compare.
    let h = 1e-6;
    let loss = |n: &spacetime_forecast::network::Network| -> spacetime_forecast::Result<f64> {
        Ok((target - n.forward(&x)?).powi(2))
    };
    let (mut up, mut down) = (net.clone(), net.clone());
    up.w2[0] += h;
    down.w2[0] -= h;
    let numeric = (loss(&up)? - loss(&down)?) / (2.0 * h);
    println!("dE/dw2[0]: backprop {:.8}  finite difference {:.8}", analytic.w2[0], numeric);

    // Fit y = 0.25 + 0.5 x0 - 0.2 x1 on a grid of inputs.
    let (mut inputs, mut targets) = (Vec::new(), Vec::new());
    for a in 0..10 {
        for b in 0..10 {
            let (x0, x1) = (a as f64 / 9.0, b as f64 / 9.0);
            inputs.extend([x0, x1]);
            targets.push(0.25 + 0.5 * x0 - 0.2 * x1);
        }
    }
    let data = PatternSet::from_parts(2, inputs, targets)?;
    let net = init_network(&NetworkConfig { linear_output: true, alpha_rng: 0.5, ..NetworkConfig::new(2, 6) })?;
    let before = net.mse(&data)?;
    let out = train(net, &data, &TrainConfig { eta: 0.1, momentum: 0.5, n_steps: 50_000, ..Default::default() })?;
    println!("mse {before:.3e} -> {:.3e}", out.network.mse(&data)?);

    let text = format_network(&out.network);
    let back = parse_network(&text, std::path::Path::new("<memory>"))?;
    assert_eq!(back, out.network);
    println!("text form ({} parameters) round-trips exactly:\n{}", back.param_count(), text.lines().take(5).collect::<Vec<_>>().join("\n"));
    Ok(())
}
