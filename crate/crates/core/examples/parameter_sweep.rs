//! Monte Carlo sweep of feature geometries around the selected one on the
//! Hénon lattice, with a CSV record file and a binned summary.
//!
//! cargo run --release --example parameter_sweep [trials] [out_dir]

use std::path::PathBuf;

use spacetime_forecast::config::parse_config;
use spacetime_forecast::embedding::select_features;
use spacetime_forecast::experiment::{report, run_sweep};
use spacetime_forecast::grid::split;

fn main() -> spacetime_forecast::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(40);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("stf-sweep"));
    std::fs::create_dir_all(&out)?;

    let cfg = parse_config(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/henon.cfg"))?;
    let grid = cfg.load_grid()?;
    let s = split(&grid, cfg.n_train)?;
    let optimal = select_features(&s.train, &cfg.selection)?.params;
    println!("selected {optimal}");

    let mut sweep = cfg.sweep_config(optimal);
    sweep.trials = trials;
    // The records file makes a rerun with more trials pick up where this one stopped.
    let records = run_sweep(&s, &sweep, Some(&out.join("records.csv")))?;
    let rep = report(&records, &out, cfg.sweep.bin_width)?;

    println!("{:>8} {:>6} {:>12} {:>10}", "d_e bin", "count", "median ssim", "max ssim");
    for row in &rep.summary {
        println!("{:>4}-{:<3} {:>6} {:>12.4} {:>10.4}", row.de_bin_lo, row.de_bin_hi, row.count, row.median_ssim, row.max_ssim);
    }
    if let Some(best) = rep.best {
        println!("best: {best}");
    }
    println!("records.csv and summary.csv in {}", out.display());
    Ok(())
}
