//! Command-line front end used by the `stf` binary.

use std::collections::hash_map::DefaultHasher;
use std::ffi::OsString;
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, ExperimentConfig};
use crate::embedding::{build_patterns, select_features, FeatureParams, FnnProfile, MiProfile};
use crate::error::{Error, Result};
use crate::experiment::{read_records, report, run_sweep};
use crate::forecast::forecast;
use crate::grid::{denormalize, normalize, split, write_grid};
use crate::metrics::ssim_against;
use crate::network::{init_network, read_network, train, write_network, Network, NetworkConfig};

#[derive(Debug, Parser)]
#[command(
    name = "stf",
    version,
    about = "Space-time delay neural forecasting of spatiotemporal grids",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (generate) or run directory (everything else).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the configured grid (simulated or loaded) in grid format.
    Generate,
    /// Estimate (I*, J*, K*, L*) from the training split and write the MI and FNN profiles.
    Select,
    /// Train a network at the configured (or selected) geometry.
    Train,
    /// Forecast the test split closed-loop and score it with SSIM.
    Forecast {
        /// Use a saved network instead of training one.
        #[arg(long)]
        network: Option<PathBuf>,
    },
    /// Monte Carlo sweep over feature geometries (resumes an existing run directory).
    Sweep {
        #[arg(long)]
        trials: Option<usize>,
        /// Training steps per trial.
        #[arg(long)]
        n_steps: Option<usize>,
    },
    /// Summarize a records CSV.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        bin_width: f64,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 success, 1 runtime failure, 2 usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn load_config(cli: &Cli) -> CliResult<(ExperimentConfig, String)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --config <FILE>".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut cfg = parse_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    if let Some(w) = cli.workers {
        cfg.sweep.workers = w;
    }
    Ok((cfg, text))
}

/// `<output.dir>/<system>-<config hash>-<unix seconds>` unless `--out` is given.
fn run_dir(cli: &Cli, cfg: &ExperimentConfig, text: &str) -> Result<PathBuf> {
    let dir = match &cli.out {
        Some(d) => d.clone(),
        None => {
            let mut h = DefaultHasher::new();
            text.hash(&mut h);
            cli.seed.hash(&mut h);
            let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            cfg.output_dir.join(format!("{}-{:016x}-{stamp}", cfg.system.name(), h.finish()))
        }
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_profile_mi(p: &MiProfile, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lag", "value"])?;
    for (lag, v) in p.lags.iter().zip(&p.mi_bits) {
        w.write_record([lag.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_profile_fnn(p: &FnnProfile, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dim", "fraction"])?;
    for (d, v) in p.dims.iter().zip(&p.false_fraction) {
        w.write_record([d.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn resolve_params(cfg: &ExperimentConfig) -> Result<FeatureParams> {
    if let Some(p) = cfg.features {
        return Ok(p);
    }
    let grid = cfg.load_grid()?;
    let s = split(&grid, cfg.n_train)?;
    Ok(select_features(&s.train, &cfg.selection)?.params)
}

fn train_network(cfg: &ExperimentConfig, params: &FeatureParams, dir: &Path) -> Result<(Network, f64)> {
    let grid = cfg.load_grid()?;
    let s = split(&grid, cfg.n_train)?;
    let norm = normalize(&s.train, &cfg.normalizer)?;
    let patterns = build_patterns(&norm, params, cfg.boundary)?;
    let net = init_network(&NetworkConfig {
        input_dim: params.input_dim(),
        ..cfg.network
    })?;
    let out = train(net, &patterns, &cfg.training)?;
    let mse = out.network.mse(&patterns)?;
    let mut w = csv::Writer::from_path(dir.join("loss.csv"))?;
    w.write_record(["step", "loss"])?;
    for (step, loss) in &out.loss_trace {
        w.write_record([step.to_string(), loss.to_string()])?;
    }
    w.flush()?;
    write_network(&out.network, dir.join("network.txt"))?;
    Ok((out.network, mse))
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut stdout = std::io::stdout().lock();
    match &cli.command {
        Command::Generate => {
            let (cfg, text) = load_config(&cli)?;
            let grid = cfg.load_grid()?;
            let path = match &cli.out {
                Some(p) => {
                    if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                        fs::create_dir_all(parent)?;
                    }
                    p.clone()
                }
                None => {
                    let dir = run_dir(&cli, &cfg, &text)?;
                    dir.join(format!("{}.grid", cfg.system.name()))
                }
            };
            write_grid(&grid, &path)?;
            writeln!(stdout, "wrote {}x{} grid to {}", grid.rows(), grid.cols(), path.display())?;
        }
        Command::Select => {
            let (cfg, text) = load_config(&cli)?;
            let grid = cfg.load_grid()?;
            let s = split(&grid, cfg.n_train)?;
            let sel = select_features(&s.train, &cfg.selection)?;
            let dir = run_dir(&cli, &cfg, &text)?;
            write_profile_mi(&sel.temporal_mi, &dir.join("temporal_mi.csv"))?;
            write_profile_mi(&sel.spatial_mi, &dir.join("spatial_mi.csv"))?;
            write_profile_fnn(&sel.temporal_fnn, &dir.join("temporal_fnn.csv"))?;
            write_profile_fnn(&sel.spatial_fnn, &dir.join("spatial_fnn.csv"))?;
            let p = sel.params;
            let line = format!(
                "I*={} J*={} K*={} L*={}",
                p.half_width, p.depth, p.spatial_lag, p.temporal_lag
            );
            fs::write(dir.join("selection.txt"), format!("{line}\n"))?;
            writeln!(stdout, "{line}")?;
            writeln!(stdout, "profiles written to {}", dir.display())?;
        }
        Command::Train => {
            let (cfg, text) = load_config(&cli)?;
            let params = resolve_params(&cfg)?;
            let dir = run_dir(&cli, &cfg, &text)?;
            let (_, mse) = train_network(&cfg, &params, &dir)?;
            writeln!(stdout, "trained {params}: train mse {mse:.6e}")?;
            writeln!(stdout, "network written to {}", dir.join("network.txt").display())?;
        }
        Command::Forecast { network } => {
            let (cfg, text) = load_config(&cli)?;
            let params = resolve_params(&cfg)?;
            let dir = run_dir(&cli, &cfg, &text)?;
            let net = match network {
                Some(p) => read_network(p)?,
                None => train_network(&cfg, &params, &dir)?.0,
            };
            let grid = cfg.load_grid()?;
            let s = split(&grid, cfg.n_train)?;
            let norm = normalize(&s.train, &cfg.normalizer)?;
            let pred = forecast(&net, &norm, &params, s.test.rows(), cfg.boundary)?
                .predicted
                .expect("test split is non-empty");
            let physical = denormalize(&pred, &cfg.normalizer)?;
            write_grid(&physical, dir.join("forecast.grid"))?;
            let score = ssim_against(&s.test, &physical, &cfg.ssim)?;
            writeln!(stdout, "forecast {params} over {} steps: ssim {score:.6}", s.test.rows())?;
            writeln!(stdout, "forecast written to {}", dir.join("forecast.grid").display())?;
        }
        Command::Sweep { trials, n_steps } => {
            let (mut cfg, text) = load_config(&cli)?;
            if let Some(t) = trials {
                cfg.sweep.trials = *t;
            }
            if let Some(n) = n_steps {
                cfg.sweep.n_steps = Some(*n);
            }
            let optimal = resolve_params(&cfg)?;
            let grid = cfg.load_grid()?;
            let s = split(&grid, cfg.n_train)?;
            let dir = run_dir(&cli, &cfg, &text)?;
            let sweep = cfg.sweep_config(optimal);
            let records = run_sweep(&s, &sweep, Some(&dir.join("records.csv")))?;
            let rep = report(&records, &dir, cfg.sweep.bin_width)?;
            let ok = records.iter().filter(|r| r.ssim.is_some()).count();
            writeln!(stdout, "{} trials ({ok} scored) around {optimal}", records.len())?;
            if let Some(best) = rep.best {
                writeln!(stdout, "best: {best}")?;
            }
            writeln!(stdout, "records and summary written to {}", dir.display())?;
        }
        Command::Report { records, bin_width } => {
            if !(*bin_width > 0.0) {
                return Err(CliError::Usage("--bin-width must be positive".into()));
            }
            let recs = read_records(records)?;
            let dir = match &cli.out {
                Some(d) => d.clone(),
                None => records.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let rep = report(&recs, &dir, *bin_width)?;
            writeln!(stdout, "de_bin_lo,de_bin_hi,count,median_ssim,max_ssim")?;
            for r in &rep.summary {
                writeln!(
                    stdout,
                    "{},{},{},{:.6},{:.6}",
                    r.de_bin_lo, r.de_bin_hi, r.count, r.median_ssim, r.max_ssim
                )?;
            }
            match rep.best {
                Some(best) => writeln!(stdout, "best: {best}")?,
                None => writeln!(stdout, "best: none (no scored trials)")?,
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_args_is_usage_error() {
        assert_eq!(run(["stf"]), 2);
        assert_eq!(run(["stf", "frobnicate"]), 2);
        assert_eq!(run(["stf", "select"]), 2);
    }

    #[test]
    fn missing_config_is_runtime_error() {
        assert_eq!(run(["stf", "generate", "--config", "/nonexistent/x.cfg"]), 1);
    }
}
