//! Experiment configuration files.
//!
//! Plain `key = value` lines grouped under `[section]` headers. `#` and `;`
//! start comments. Every key is checked: unknown keys, duplicates, values of
//! the wrong type and out-of-range values are errors naming the key and line.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::embedding::{BoundaryPolicy, FeatureParams, FnnConfig, MiMode, SelectionConfig};
use crate::error::{Error, Result};
use crate::experiment::{ParamRanges, SweepConfig, TrialSettings};
use crate::grid::{read_grid, Normalizer, NormalizerKind, SpatioTemporalGrid};
use crate::metrics::SsimConfig;
use crate::network::{Activation, InitRule, NetworkConfig, TrainConfig};
use crate::systems::{
    simulate_henon, simulate_ks, simulate_lorenz96, HenonLatticeConfig, KsConfig, KsInit, Lorenz96Config,
    Lorenz96Init,
};

/// Keys that must be present in every config, as `section.key`.
pub const REQUIRED_KEYS: [&str; 7] = [
    "system.kind",
    "split.n_train",
    "normalizer.alpha_nor",
    "normalizer.beta_nor",
    "network.hidden",
    "training.eta",
    "training.n_steps",
];

const SECTIONS: [&str; 10] = [
    "system", "split", "normalizer", "selection", "features", "network", "training", "ssim", "sweep", "output",
];

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Henon(HenonLatticeConfig),
    Lorenz96(Lorenz96Config),
    Ks(KsConfig),
    /// A grid file; relative paths resolve against the config file's directory.
    File { path: PathBuf, time_step: Option<f64> },
}

impl SystemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Henon(_) => "henon",
            SystemSpec::Lorenz96(_) => "lorenz96",
            SystemSpec::Ks(_) => "ks",
            SystemSpec::File { .. } => "file",
        }
    }

    /// Replaces the seed of a stochastic initial condition, if there is one.
    pub fn reseed(&mut self, seed: u64) {
        match self {
            SystemSpec::Henon(c) => c.seed = seed,
            SystemSpec::Lorenz96(c) => {
                if let Lorenz96Init::Perturbed { seed: s, .. } = &mut c.init {
                    *s = seed;
                }
            }
            SystemSpec::Ks(_) | SystemSpec::File { .. } => {}
        }
    }
}

/// `[sweep]` section; ranges left unset default to [`ParamRanges::around`] the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub trials: usize,
    pub master_seed: u64,
    pub workers: usize,
    /// Training budget per trial; `None` keeps `[training] n_steps`.
    pub n_steps: Option<usize>,
    pub i: Option<(usize, usize)>,
    pub j: Option<(usize, usize)>,
    pub k: Option<(usize, usize)>,
    pub l: Option<(usize, usize)>,
    pub bin_width: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            trials: 200,
            master_seed: 0,
            workers: 0,
            n_steps: None,
            i: None,
            j: None,
            k: None,
            l: None,
            bin_width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub n_train: usize,
    pub normalizer: Normalizer,
    pub selection: SelectionConfig,
    /// Geometry used by train/forecast/sweep; `None` means "run selection".
    pub features: Option<FeatureParams>,
    pub boundary: BoundaryPolicy,
    /// `input_dim` is filled in once the geometry is known.
    pub network: NetworkConfig,
    pub training: TrainConfig,
    pub ssim: SsimConfig,
    pub sweep: SweepSection,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Generates or reads the full grid.
    pub fn load_grid(&self) -> Result<SpatioTemporalGrid> {
        match &self.system {
            SystemSpec::Henon(c) => simulate_henon(c),
            SystemSpec::Lorenz96(c) => simulate_lorenz96(c),
            SystemSpec::Ks(c) => simulate_ks(c),
            SystemSpec::File { path, time_step } => {
                let g = read_grid(path)?;
                Ok(match time_step {
                    Some(dt) => g.with_time_step(*dt),
                    None => g,
                })
            }
        }
    }

    pub fn trial_settings(&self) -> TrialSettings {
        TrialSettings {
            net: self.network,
            train: self.training,
            normalizer: self.normalizer,
            boundary: self.boundary,
            ssim: self.ssim,
        }
    }

    /// Sweep around `optimal` with the `[sweep]` overrides applied.
    pub fn sweep_config(&self, optimal: FeatureParams) -> SweepConfig {
        let base = ParamRanges::around(&optimal);
        let pick = |r: Option<(usize, usize)>, d: std::ops::RangeInclusive<usize>| r.map(|(a, b)| a..=b).unwrap_or(d);
        let mut settings = self.trial_settings();
        if let Some(n) = self.sweep.n_steps {
            settings.train.n_steps = n;
        }
        SweepConfig {
            trials: self.sweep.trials,
            ranges: ParamRanges {
                i: pick(self.sweep.i, base.i),
                j: pick(self.sweep.j, base.j),
                k: pick(self.sweep.k, base.k),
                l: pick(self.sweep.l, base.l),
            },
            optimal,
            settings,
            master_seed: self.sweep.master_seed,
            workers: self.sweep.workers,
        }
    }

    /// Overrides every seed (data, weights, sampling, sweep).
    pub fn reseed(&mut self, seed: u64) {
        self.system.reseed(seed);
        self.network.seed = seed;
        self.training.seed = seed;
        self.sweep.master_seed = seed;
    }
}

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

/// Raw entries plus bookkeeping of which ones were read.
struct Fields<'a> {
    origin: &'a Path,
    entries: BTreeMap<(String, String), Entry>,
    used: BTreeSet<(String, String)>,
}

impl<'a> Fields<'a> {
    fn parse(text: &str, origin: &'a Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let l = strip_comment(raw).trim();
            if l.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(origin, line, "unterminated section header"))?
                    .trim()
                    .to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(Error::parse(
                        origin,
                        line,
                        format!("unknown section [{name}] (known: {})", SECTIONS.join(", ")),
                    ));
                }
                section = Some(name);
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, line, format!("expected `key = value`, got `{l}`")))?;
            let sec = section
                .clone()
                .ok_or_else(|| Error::parse(origin, line, "key outside of any [section]"))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::parse(origin, line, "empty key"));
            }
            let slot = (sec.clone(), key.clone());
            if let Some(prev) = entries.get(&slot) {
                let prev: &Entry = prev;
                return Err(Error::parse(
                    origin,
                    line,
                    format!("duplicate key `{sec}.{key}` (first set on line {})", prev.line),
                ));
            }
            entries.insert(
                slot,
                Entry {
                    value: v.trim().to_string(),
                    line,
                },
            );
        }
        Ok(Self {
            origin,
            entries,
            used: BTreeSet::new(),
        })
    }

    fn raw(&mut self, sec: &str, key: &str) -> Option<(&str, usize)> {
        let slot = (sec.to_string(), key.to_string());
        let e = self.entries.get(&slot)?;
        self.used.insert(slot);
        Some((e.value.as_str(), e.line))
    }

    fn opt<T: FromStr>(&mut self, sec: &str, key: &str, what: &str) -> Result<Option<T>> {
        let origin = self.origin;
        match self.raw(sec, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| {
                Error::parse(origin, line, format!("`{sec}.{key}`: expected {what}, got `{v}`"))
            }),
        }
    }

    fn real(&mut self, sec: &str, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.opt(sec, key, "a number")?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(self.invalid(sec, key, "must be finite"));
            }
        }
        Ok(v)
    }

    fn count(&mut self, sec: &str, key: &str) -> Result<Option<usize>> {
        // Accept `1e6`-style counts as long as they are whole numbers.
        let origin = self.origin;
        match self.raw(sec, key) {
            None => Ok(None),
            Some((v, line)) => {
                let bad = || Error::parse(origin, line, format!("`{sec}.{key}`: expected a non-negative integer, got `{v}`"));
                if let Ok(n) = v.parse::<usize>() {
                    return Ok(Some(n));
                }
                let x: f64 = v.parse().map_err(|_| bad())?;
                if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) {
                    Ok(Some(x as usize))
                } else {
                    Err(bad())
                }
            }
        }
    }

    fn at_least(&mut self, sec: &str, key: &str, min: usize) -> Result<Option<usize>> {
        let v = self.count(sec, key)?;
        if let Some(n) = v {
            if n < min {
                return Err(self.invalid(sec, key, &format!("must be >= {min}, got {n}")));
            }
        }
        Ok(v)
    }

    fn flag(&mut self, sec: &str, key: &str) -> Result<Option<bool>> {
        let origin = self.origin;
        match self.raw(sec, key) {
            None => Ok(None),
            Some((v, line)) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(Some(true)),
                "false" | "no" | "off" | "0" => Ok(Some(false)),
                _ => Err(Error::parse(origin, line, format!("`{sec}.{key}`: expected true or false, got `{v}`"))),
            },
        }
    }

    fn seed(&mut self, sec: &str, key: &str) -> Result<Option<u64>> {
        self.opt(sec, key, "an unsigned integer seed")
    }

    fn text(&mut self, sec: &str, key: &str) -> Option<String> {
        self.raw(sec, key).map(|(v, _)| v.to_string())
    }

    fn parsed<T: FromStr<Err = Error>>(&mut self, sec: &str, key: &str) -> Result<Option<T>> {
        let origin = self.origin;
        match self.raw(sec, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::parse(origin, line, format!("`{sec}.{key}`: {e}"))),
        }
    }

    fn range(&mut self, sec: &str, key: &str) -> Result<Option<(usize, usize)>> {
        let origin = self.origin;
        match self.raw(sec, key) {
            None => Ok(None),
            Some((v, line)) => {
                let bad = || Error::parse(origin, line, format!("`{sec}.{key}`: expected `lo..hi` or `lo,hi`, got `{v}`"));
                let (a, b) = v.split_once("..").or_else(|| v.split_once(',')).ok_or_else(bad)?;
                let lo: usize = a.trim().parse().map_err(|_| bad())?;
                let hi: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(Error::parse(origin, line, format!("`{sec}.{key}`: empty range {lo}..{hi}")));
                }
                Ok(Some((lo, hi)))
            }
        }
    }

    fn reals(&mut self, sec: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let origin = self.origin;
        match self.raw(sec, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::parse(origin, line, format!("`{sec}.{key}`: bad number `{}`", t.trim())))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn line_of(&self, sec: &str, key: &str) -> usize {
        self.entries
            .get(&(sec.to_string(), key.to_string()))
            .map(|e| e.line)
            .unwrap_or(0)
    }

    fn invalid(&self, sec: &str, key: &str, msg: &str) -> Error {
        Error::parse(self.origin, self.line_of(sec, key), format!("`{sec}.{key}`: {msg}"))
    }

    fn missing(&self, key: &str) -> Error {
        Error::parse(self.origin, 0, format!("missing required key `{key}`"))
    }

    fn finish(self) -> Result<()> {
        for (slot, e) in &self.entries {
            if !self.used.contains(slot) {
                return Err(Error::parse(self.origin, e.line, format!("unknown key `{}.{}`", slot.0, slot.1)));
            }
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    let cut = line.find(['#', ';']).unwrap_or(line.len());
    &line[..cut]
}

fn parse_system(f: &mut Fields, base_dir: &Path) -> Result<SystemSpec> {
    let kind = f.text("system", "kind").ok_or_else(|| f.missing("system.kind"))?;
    let steps = f.at_least("system", "steps", 2)?;
    let burn_in = f.count("system", "burn_in")?.unwrap_or(0);
    let sites = f.count("system", "sites")?;
    let seed = f.seed("system", "seed")?;
    let spec = match kind.to_ascii_lowercase().as_str() {
        "henon" => {
            let d = HenonLatticeConfig::default();
            SystemSpec::Henon(HenonLatticeConfig {
                sites: sites.unwrap_or(d.sites),
                steps: steps.unwrap_or(d.steps),
                seed: seed.unwrap_or(d.seed),
                boundary_u: f.real("system", "boundary_u")?.unwrap_or(d.boundary_u),
                boundary_v: f.real("system", "boundary_v")?.unwrap_or(d.boundary_v),
                burn_in,
            })
        }
        "lorenz96" => {
            let d = Lorenz96Config::default();
            let init = match f.reals("system", "initial_state")? {
                Some(v) => Lorenz96Init::Explicit(v),
                None => Lorenz96Init::Perturbed {
                    seed: seed.unwrap_or(0),
                    amplitude: f.real("system", "init_amplitude")?.unwrap_or(1.0),
                },
            };
            SystemSpec::Lorenz96(Lorenz96Config {
                sites: sites.unwrap_or(d.sites),
                forcing: f.real("system", "forcing")?.unwrap_or(d.forcing),
                dt: f.real("system", "dt")?.unwrap_or(d.dt),
                steps: steps.unwrap_or(d.steps),
                burn_in,
                init,
            })
        }
        "ks" => {
            let d = KsConfig::default();
            let init = match f.text("system", "init").as_deref() {
                None | Some("bump") => {
                    let KsInit::Bump { lo, hi, amplitude } = d.init else { unreachable!() };
                    KsInit::Bump {
                        lo: f.real("system", "bump_lo")?.unwrap_or(lo),
                        hi: f.real("system", "bump_hi")?.unwrap_or(hi),
                        amplitude: f.real("system", "bump_amplitude")?.unwrap_or(amplitude),
                    }
                }
                Some("zero") => KsInit::Zero,
                Some(other) => {
                    return Err(f.invalid("system", "init", &format!("expected bump or zero, got `{other}`")));
                }
            };
            SystemSpec::Ks(KsConfig {
                domain_length: f.real("system", "domain_length")?.unwrap_or(d.domain_length),
                dt: f.real("system", "dt")?.unwrap_or(d.dt),
                modes: f.count("system", "modes")?.unwrap_or(d.modes),
                steps: steps.unwrap_or(d.steps),
                burn_in,
                init,
            })
        }
        "file" => {
            let p = f.text("system", "path").ok_or_else(|| f.missing("system.path"))?;
            let path = base_dir.join(p);
            if !path.exists() {
                return Err(f.invalid("system", "path", &format!("{} does not exist", path.display())));
            }
            SystemSpec::File {
                path,
                time_step: f.real("system", "time_step")?,
            }
        }
        other => {
            return Err(f.invalid(
                "system",
                "kind",
                &format!("expected henon, lorenz96, ks or file, got `{other}`"),
            ))
        }
    };
    let check = match &spec {
        SystemSpec::Henon(c) => c.validate(),
        SystemSpec::Lorenz96(c) => c.validate(),
        SystemSpec::Ks(c) => c.validate(),
        SystemSpec::File { .. } => Ok(()),
    };
    check.map_err(|e| f.invalid("system", "kind", &e.to_string()))?;
    Ok(spec)
}

fn parse_selection(f: &mut Fields) -> Result<SelectionConfig> {
    let d = SelectionConfig::default();
    let fd = FnnConfig::default();
    let mi_mode = match f.text("selection", "mi_mode").as_deref() {
        None => d.mi_mode,
        Some("pooled") => MiMode::Pooled,
        Some("per_line") => MiMode::PerLine,
        Some(other) => return Err(f.invalid("selection", "mi_mode", &format!("expected pooled or per_line, got `{other}`"))),
    };
    let cfg = SelectionConfig {
        bins: f.at_least("selection", "bins", 2)?.unwrap_or(d.bins),
        mi_mode,
        periodic_space: f.flag("selection", "periodic_space")?.unwrap_or(d.periodic_space),
        max_temporal_lag: f.at_least("selection", "max_temporal_lag", 1)?,
        max_spatial_lag: f.at_least("selection", "max_spatial_lag", 1)?,
        plateau_drop: f.real("selection", "plateau_drop")?.unwrap_or(d.plateau_drop),
        plateau_window: f.at_least("selection", "plateau_window", 1)?.unwrap_or(d.plateau_window),
        anchor_zero_lag: f.flag("selection", "anchor_zero_lag")?.unwrap_or(d.anchor_zero_lag),
        fnn: FnnConfig {
            r_tol: f.real("selection", "fnn_r_tol")?.unwrap_or(fd.r_tol),
            a_tol: f.real("selection", "fnn_a_tol")?.unwrap_or(fd.a_tol),
            max_dim: f.at_least("selection", "fnn_max_dim", 1)?.unwrap_or(fd.max_dim),
            periodic_space: false,
        },
        fnn_threshold: f.real("selection", "fnn_threshold")?.unwrap_or(d.fnn_threshold),
        fnn_min_fallback: f.flag("selection", "fnn_min_fallback")?.unwrap_or(d.fnn_min_fallback),
    };
    cfg.validate().map_err(|e| f.invalid("selection", "bins", &e.to_string()))?;
    Ok(cfg)
}

/// Parses config text. `origin` is used in messages and to resolve relative paths.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<ExperimentConfig> {
    let mut f = Fields::parse(text, origin)?;
    if f.entries.is_empty() {
        return Err(Error::parse(
            origin,
            0,
            format!("empty configuration; required keys: {}", REQUIRED_KEYS.join(", ")),
        ));
    }
    let missing: Vec<&str> = REQUIRED_KEYS
        .iter()
        .copied()
        .filter(|k| {
            let (s, key) = k.split_once('.').unwrap();
            !f.entries.contains_key(&(s.to_string(), key.to_string()))
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::parse(origin, 0, format!("missing required keys: {}", missing.join(", "))));
    }
    let base_dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();

    let system = parse_system(&mut f, &base_dir)?;
    let n_train = f.at_least("split", "n_train", 1)?.unwrap();

    let kind = match f.text("normalizer", "kind").as_deref() {
        None | Some("linear") => NormalizerKind::Linear,
        Some("logarithmic") | Some("log") => NormalizerKind::Logarithmic,
        Some(other) => {
            return Err(f.invalid("normalizer", "kind", &format!("expected linear or logarithmic, got `{other}`")))
        }
    };
    let normalizer = Normalizer {
        kind,
        alpha: f.real("normalizer", "alpha_nor")?.unwrap(),
        beta: f.real("normalizer", "beta_nor")?.unwrap(),
    };
    normalizer
        .validate()
        .map_err(|e| f.invalid("normalizer", "beta_nor", &e.to_string()))?;

    let selection = parse_selection(&mut f)?;

    let dims = [
        f.count("features", "I")?,
        f.count("features", "J")?,
        f.count("features", "K")?,
        f.count("features", "L")?,
    ];
    let features = match dims {
        [Some(i), Some(j), Some(k), Some(l)] => {
            Some(FeatureParams::new(i, j, k, l).map_err(|e| f.invalid("features", "K", &e.to_string()))?)
        }
        [None, None, None, None] => None,
        _ => {
            return Err(Error::parse(
                origin,
                f.line_of("features", "I").max(f.line_of("features", "L")),
                "[features] needs all of I, J, K and L or none of them",
            ))
        }
    };
    let default_boundary = match system {
        SystemSpec::Lorenz96(_) | SystemSpec::Ks(_) => BoundaryPolicy::Wrap,
        _ => BoundaryPolicy::Skip,
    };
    let boundary = f.parsed("features", "boundary")?.unwrap_or(default_boundary);

    let hidden = f.at_least("network", "hidden", 1)?.unwrap();
    let d = NetworkConfig::new(1, hidden);
    let network = NetworkConfig {
        activation: f.parsed::<Activation>("network", "activation")?.unwrap_or(d.activation),
        linear_output: f.flag("network", "linear_output")?.unwrap_or(false),
        alpha_rng: f.real("network", "alpha_rng")?.unwrap_or(d.alpha_rng),
        beta_rng: f.real("network", "beta_rng")?.unwrap_or(d.beta_rng),
        init_rule: f.parsed::<InitRule>("network", "init_rule")?.unwrap_or(d.init_rule),
        seed: f.seed("network", "seed")?.unwrap_or(0),
        ..d
    };

    let td = TrainConfig::default();
    let eta = f.real("training", "eta")?.unwrap();
    if eta < 0.0 {
        return Err(f.invalid("training", "eta", "must be >= 0"));
    }
    let momentum = f.real("training", "momentum")?.unwrap_or(td.momentum);
    if !(0.0..1.0).contains(&momentum) {
        return Err(f.invalid("training", "momentum", "must lie in [0, 1)"));
    }
    let training = TrainConfig {
        eta,
        momentum,
        n_steps: f.at_least("training", "n_steps", 1)?.unwrap(),
        batch_size: f.at_least("training", "batch_size", 1)?.unwrap_or(td.batch_size),
        trace_every: f.at_least("training", "trace_every", 1)?.unwrap_or(td.trace_every),
        seed: f.seed("training", "seed")?.unwrap_or(0),
    };

    let sd = SsimConfig::default();
    let ssim = SsimConfig {
        window: f.at_least("ssim", "window", 1)?.unwrap_or(sd.window),
        k1: f.real("ssim", "k1")?.unwrap_or(sd.k1),
        k2: f.real("ssim", "k2")?.unwrap_or(sd.k2),
        dynamic_range: f.real("ssim", "dynamic_range")?,
    };
    ssim.validate().map_err(|e| f.invalid("ssim", "k1", &e.to_string()))?;

    let wd = SweepSection::default();
    let sweep = SweepSection {
        trials: f.at_least("sweep", "trials", 1)?.unwrap_or(wd.trials),
        master_seed: f.seed("sweep", "master_seed")?.unwrap_or(wd.master_seed),
        workers: f.count("sweep", "workers")?.unwrap_or(wd.workers),
        n_steps: f.at_least("sweep", "n_steps", 1)?,
        i: f.range("sweep", "I")?,
        j: f.range("sweep", "J")?,
        k: f.range("sweep", "K")?,
        l: f.range("sweep", "L")?,
        bin_width: f.real("sweep", "bin_width")?.unwrap_or(wd.bin_width),
    };
    if !(sweep.bin_width > 0.0) {
        return Err(f.invalid("sweep", "bin_width", "must be positive"));
    }
    for key in ["K", "L"] {
        let r = if key == "K" { sweep.k } else { sweep.l };
        if matches!(r, Some((0, _))) {
            return Err(f.invalid("sweep", key, "lags start at 1"));
        }
    }

    let output_dir = base_dir.join(f.text("output", "dir").unwrap_or_else(|| "runs".into()));
    f.finish()?;
    Ok(ExperimentConfig {
        system,
        n_train,
        normalizer,
        selection,
        features,
        boundary,
        network,
        training,
        ssim,
        sweep,
        output_dir,
    })
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_config_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[system]
kind = henon
[split]
n_train = 500
[normalizer]
alpha_nor = 0.515
beta_nor = 2.947992
[network]
hidden = 10
[training]
eta = 0.1
n_steps = 1e6
";

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config_str(text, Path::new("test.cfg"))
    }

    fn err_text(text: &str) -> String {
        parse(text).unwrap_err().to_string()
    }

    #[test]
    fn minimal_config() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.training.n_steps, 1_000_000);
        assert_eq!(c.boundary, BoundaryPolicy::Skip);
        assert_eq!(c.network.hidden, 10);
        assert!(c.features.is_none());
        assert_eq!(c.system.name(), "henon");
    }

    #[test]
    fn empty_file_lists_required_keys() {
        let e = err_text("# nothing here\n");
        for k in REQUIRED_KEYS {
            assert!(e.contains(k), "{e}");
        }
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let e = err_text(&format!("{MINIMAL}colour = blue\n"));
        assert!(e.contains("training.colour") && e.contains(":14:"), "{e}");
    }

    #[test]
    fn type_mismatch_names_key_and_line() {
        let e = err_text(&MINIMAL.replace("hidden = 10", "hidden = ten"));
        assert!(e.contains("network.hidden") && e.contains(":10:"), "{e}");
        let e = err_text(&MINIMAL.replace("hidden = 10", "hidden = 0"));
        assert!(e.contains("network.hidden") && e.contains(">= 1"), "{e}");
    }

    #[test]
    fn invariant_violations() {
        let e = err_text(&MINIMAL.replace("beta_nor = 2.947992", "beta_nor = 0"));
        assert!(e.contains("normalizer.beta_nor"), "{e}");
        let e = err_text(&format!("{MINIMAL}momentum = 1.5\n"));
        assert!(e.contains("training.momentum"), "{e}");
        let e = err_text(&format!("{MINIMAL}[features]\nI = 1\n"));
        assert!(e.contains("[features]"), "{e}");
        let e = err_text(&format!("{MINIMAL}n_steps = 5\n"));
        assert!(e.contains("duplicate"), "{e}");
    }

    #[test]
    fn sections_and_overrides() {
        let text = format!(
            "{MINIMAL}[features]\nI=2\nJ=2\nK=1\nL=9\nboundary=wrap\n[sweep]\ntrials=3\nL=1..5\nn_steps=100\n[selection]\nmi_mode=per_line\n"
        );
        let mut c = parse(&text).unwrap();
        let fp = c.features.unwrap();
        assert_eq!(fp.as_array(), [2, 2, 1, 9]);
        let sw = c.sweep_config(fp);
        assert_eq!(sw.ranges.l, 1..=5);
        assert_eq!(sw.ranges.k, 1..=12);
        assert_eq!(sw.settings.train.n_steps, 100);
        assert_eq!(c.selection.mi_mode, MiMode::PerLine);
        c.reseed(77);
        assert_eq!(c.network.seed, 77);
        assert!(matches!(c.system, SystemSpec::Henon(HenonLatticeConfig { seed: 77, .. })));
    }
}
