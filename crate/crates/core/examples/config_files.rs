//! Loads each bundled preset and shows what it resolves to, then shows the
//! error reported for a malformed file.
//!
//! cargo run --release --example config_files

use std::path::Path;

use spacetime_forecast::config::{parse_config, parse_config_str};

fn main() {
    let presets = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    for name in ["henon", "lorenz96", "ks", "sunspot"] {
        let path = presets.join(format!("{name}.cfg"));
        match parse_config(&path) {
            Ok(cfg) => println!(
                "{name:<9} system={} n_train={} features={} hidden={} ({}) eta={} steps={}",
                cfg.system.name(),
                cfg.n_train,
                cfg.features.map(|p| p.to_string()).unwrap_or_else(|| "selected".into()),
                cfg.network.hidden,
                cfg.network.activation,
                cfg.training.eta,
                cfg.training.n_steps,
            ),
            // The sunspot preset points at a data file that is not bundled.
            Err(e) => println!("{name:<9} not loadable here: {e}"),
        }
    }

    let bad = std::fs::read_to_string(presets.join("henon.cfg"))
        .expect("bundled preset")
        .replace("hidden = 10", "hidden = ten");
    match parse_config_str(&bad, Path::new("broken.cfg")) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("malformed file: {e}"),
    }
}
