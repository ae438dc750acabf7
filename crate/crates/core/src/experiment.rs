//! Monte Carlo sweeps over feature geometries, scored by SSIM of the
//! closed-loop forecast against the held-out test slices.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, OpenOptions};
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::embedding::{build_patterns, check_feasible, BoundaryPolicy, FeatureParams};
use crate::error::{Error, Result};
use crate::forecast::forecast;
use crate::grid::{denormalize, normalize, Normalizer, SplitGrid, SpatioTemporalGrid};
use crate::metrics::{distance_euclidean, distance_manhattan, ssim_against, SsimConfig};
use crate::network::{init_network, train, NetworkConfig, TrainConfig};
use crate::systems::seeded_rng;

/// Everything a trial needs besides the geometry and the seed.
///
/// `net.input_dim` and both seeds are overwritten per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSettings {
    pub net: NetworkConfig,
    pub train: TrainConfig,
    pub normalizer: Normalizer,
    pub boundary: BoundaryPolicy,
    pub ssim: SsimConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    Diverged,
    Infeasible,
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrialStatus::Ok => "ok",
            TrialStatus::Diverged => "diverged",
            TrialStatus::Infeasible => "infeasible",
        })
    }
}

impl FromStr for TrialStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(TrialStatus::Ok),
            "diverged" => Ok(TrialStatus::Diverged),
            "infeasible" => Ok(TrialStatus::Infeasible),
            other => Err(Error::InvalidConfig(format!("unknown trial status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub params: FeatureParams,
    pub d_e: f64,
    pub d_manhattan: f64,
    /// Present only for `Ok` trials.
    pub ssim: Option<f64>,
    pub train_mse: Option<f64>,
    pub wall_time_s: f64,
    pub seed: u64,
    pub status: TrialStatus,
}

impl TrialRecord {
    /// Equality on everything except the wall-clock time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        self.trial == other.trial
            && self.params == other.params
            && self.d_e.to_bits() == other.d_e.to_bits()
            && self.d_manhattan.to_bits() == other.d_manhattan.to_bits()
            && bits(self.ssim) == bits(other.ssim)
            && bits(self.train_mse) == bits(other.train_mse)
            && self.seed == other.seed
            && self.status == other.status
    }
}

/// Output of a successful pipeline run, kept for callers that want the grids.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialArtifacts {
    pub record: TrialRecord,
    pub network: Option<crate::network::Network>,
    /// Denormalized forecast.
    pub forecast: Option<SpatioTemporalGrid>,
}

/// Network and training seeds derived from one trial seed.
fn derived_seeds(trial_seed: u64) -> (u64, u64) {
    let mut rng = seeded_rng(trial_seed);
    (rng.gen(), rng.gen())
}

/// normalize, build patterns, train, forecast `test.rows()` steps, denormalize, score.
pub fn run_trial(
    train_grid: &SpatioTemporalGrid,
    test_grid: &SpatioTemporalGrid,
    params: &FeatureParams,
    optimal: &FeatureParams,
    settings: &TrialSettings,
    trial_seed: u64,
) -> TrialRecord {
    run_trial_full(train_grid, test_grid, params, optimal, settings, trial_seed, 0).record
}

pub fn run_trial_full(
    train_grid: &SpatioTemporalGrid,
    test_grid: &SpatioTemporalGrid,
    params: &FeatureParams,
    optimal: &FeatureParams,
    settings: &TrialSettings,
    trial_seed: u64,
    trial: usize,
) -> TrialArtifacts {
    let start = Instant::now();
    let mut record = TrialRecord {
        trial,
        params: *params,
        d_e: distance_euclidean(params, optimal),
        d_manhattan: distance_manhattan(params, optimal),
        ssim: None,
        train_mse: None,
        wall_time_s: 0.0,
        seed: trial_seed,
        status: TrialStatus::Infeasible,
    };
    let outcome = (|| -> Result<(TrialStatus, Option<_>)> {
        if check_feasible(train_grid.rows(), train_grid.cols(), params, settings.boundary).is_err()
            || test_grid.cols() != train_grid.cols()
        {
            return Ok((TrialStatus::Infeasible, None));
        }
        let norm_train = normalize(train_grid, &settings.normalizer)?;
        let patterns = build_patterns(&norm_train, params, settings.boundary)?;
        let (net_seed, train_seed) = derived_seeds(trial_seed);
        let net_cfg = NetworkConfig {
            input_dim: params.input_dim(),
            seed: net_seed,
            ..settings.net
        };
        let train_cfg = TrainConfig {
            seed: train_seed,
            ..settings.train
        };
        let net = init_network(&net_cfg)?;
        let trained = match train(net, &patterns, &train_cfg) {
            Ok(t) => t.network,
            Err(Error::TrainingDivergence { .. }) => return Ok((TrialStatus::Diverged, None)),
            Err(e) => return Err(e),
        };
        let mse = trained.mse(&patterns)?;
        let pred = match forecast(&trained, &norm_train, params, test_grid.rows(), settings.boundary) {
            Ok(r) => r.predicted.expect("test split has at least one row"),
            Err(Error::NonFinite(_)) => return Ok((TrialStatus::Diverged, None)),
            Err(e) => return Err(e),
        };
        let physical = match denormalize(&pred, &settings.normalizer) {
            Ok(g) => g,
            Err(Error::NonFinite(_) | Error::Domain(_)) => return Ok((TrialStatus::Diverged, None)),
            Err(e) => return Err(e),
        };
        let score = ssim_against(test_grid, &physical, &settings.ssim)?;
        if !score.is_finite() || !mse.is_finite() {
            return Ok((TrialStatus::Diverged, None));
        }
        record.ssim = Some(score);
        record.train_mse = Some(mse);
        Ok((TrialStatus::Ok, Some((trained, physical))))
    })();
    let (status, extra) = match outcome {
        Ok(v) => v,
        // Anything else (e.g. an SSIM window larger than the test split) means
        // this geometry cannot be scored.
        Err(_) => (TrialStatus::Infeasible, None),
    };
    record.status = status;
    record.wall_time_s = start.elapsed().as_secs_f64();
    let (network, forecast) = match extra {
        Some((n, f)) => (Some(n), Some(f)),
        None => (None, None),
    };
    TrialArtifacts {
        record,
        network,
        forecast,
    }
}

/// Inclusive sampling ranges for `(I, J, K, L)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamRanges {
    pub i: RangeInclusive<usize>,
    pub j: RangeInclusive<usize>,
    pub k: RangeInclusive<usize>,
    pub l: RangeInclusive<usize>,
}

impl ParamRanges {
    /// `I in [0,5]`, `J in [0,8]`, `K in [1,12]`, `L in [1, 2 L*]`.
    pub fn around(optimal: &FeatureParams) -> Self {
        Self {
            i: 0..=5,
            j: 0..=8,
            k: 1..=12,
            l: 1..=(2 * optimal.temporal_lag).max(1),
        }
    }

    /// A single point.
    pub fn pinned(p: &FeatureParams) -> Self {
        Self {
            i: p.half_width..=p.half_width,
            j: p.depth..=p.depth,
            k: p.spatial_lag..=p.spatial_lag,
            l: p.temporal_lag..=p.temporal_lag,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("I", &self.i), ("J", &self.j), ("K", &self.k), ("L", &self.l)] {
            if r.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} range {r:?} is empty")));
            }
        }
        if *self.k.start() < 1 || *self.l.start() < 1 {
            return Err(Error::InvalidConfig("K and L ranges must start at 1 or above".into()));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> FeatureParams {
        FeatureParams {
            half_width: rng.gen_range(self.i.clone()),
            depth: rng.gen_range(self.j.clone()),
            spatial_lag: rng.gen_range(self.k.clone()),
            temporal_lag: rng.gen_range(self.l.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub trials: usize,
    pub ranges: ParamRanges,
    pub optimal: FeatureParams,
    pub settings: TrialSettings,
    pub master_seed: u64,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidConfig("sweep needs at least one trial".into()));
        }
        self.ranges.validate()?;
        self.settings.net.validate()?;
        self.settings.train.validate()?;
        self.settings.normalizer.validate()?;
        self.settings.ssim.validate()
    }

    /// Seed of trial `index`; the geometry is the first draw from it.
    pub fn trial_seed(&self, index: usize) -> u64 {
        self.master_seed.wrapping_add(index as u64)
    }

    pub fn trial_params(&self, index: usize) -> FeatureParams {
        self.ranges.sample(&mut seeded_rng(self.trial_seed(index)))
    }
}

/// Runs every trial not already present in `records_path` (if given),
/// appending each finished record to it, and returns the full set ordered by
/// trial index.
pub fn run_sweep(split: &SplitGrid, sweep: &SweepConfig, records_path: Option<&Path>) -> Result<Vec<TrialRecord>> {
    sweep.validate()?;
    let mut done: BTreeMap<usize, TrialRecord> = BTreeMap::new();
    if let Some(path) = records_path {
        if path.exists() && fs::metadata(path)?.len() > 0 {
            for r in read_records(path)? {
                if r.trial < sweep.trials {
                    done.insert(r.trial, r);
                }
            }
        }
    }
    let pending: Vec<usize> = (0..sweep.trials).filter(|i| !done.contains_key(i)).collect();

    let appender = match records_path {
        Some(path) => {
            let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            if fresh {
                w.write_record(RECORD_COLUMNS)?;
                w.flush()?;
            }
            Some(Mutex::new(w))
        }
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let fresh: Vec<TrialRecord> = pool.install(|| {
        pending
            .par_iter()
            .map(|&index| -> Result<TrialRecord> {
                let params = sweep.trial_params(index);
                let seed = sweep.trial_seed(index);
                let rec = run_trial_full(&split.train, &split.test, &params, &sweep.optimal, &sweep.settings, seed, index).record;
                if let Some(w) = &appender {
                    let mut w = w.lock().expect("record writer poisoned");
                    w.write_record(record_fields(&rec))?;
                    w.flush()?;
                }
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for r in fresh {
        done.insert(r.trial, r);
    }
    Ok(done.into_values().collect())
}

pub const RECORD_COLUMNS: [&str; 12] = [
    "trial", "I", "J", "K", "L", "d_e", "d_manhattan", "ssim", "train_mse", "wall_time_s", "seed", "status",
];

pub const SUMMARY_COLUMNS: [&str; 5] = ["de_bin_lo", "de_bin_hi", "count", "median_ssim", "max_ssim"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record_fields(r: &TrialRecord) -> Vec<String> {
    let [i, j, k, l] = r.params.as_array();
    vec![
        r.trial.to_string(),
        i.to_string(),
        j.to_string(),
        k.to_string(),
        l.to_string(),
        r.d_e.to_string(),
        r.d_manhattan.to_string(),
        opt(r.ssim),
        opt(r.train_mse),
        r.wall_time_s.to_string(),
        r.seed.to_string(),
        r.status.to_string(),
    ]
}

pub fn write_records(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record(record_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(RECORD_COLUMNS) {
        return Err(Error::parse(path, 1, format!("expected header {}", RECORD_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row?;
        let line = idx + 2;
        let field = |c: usize| row.get(c).unwrap_or("");
        let bad = |c: usize| Error::parse(path, line, format!("bad {} `{}`", RECORD_COLUMNS[c], field(c)));
        let int = |c: usize| field(c).parse::<usize>().map_err(|_| bad(c));
        let real = |c: usize| field(c).parse::<f64>().map_err(|_| bad(c));
        let maybe = |c: usize| if field(c).is_empty() { Ok(None) } else { real(c).map(Some) };
        let params = FeatureParams::new(int(1)?, int(2)?, int(3)?, int(4)?).map_err(|_| bad(3))?;
        out.push(TrialRecord {
            trial: int(0)?,
            params,
            d_e: real(5)?,
            d_manhattan: real(6)?,
            ssim: maybe(7)?,
            train_mse: maybe(8)?,
            wall_time_s: real(9)?,
            seed: field(10).parse().map_err(|_| bad(10))?,
            status: field(11).parse().map_err(|_| bad(11))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub de_bin_lo: f64,
    pub de_bin_hi: f64,
    pub count: usize,
    pub median_ssim: f64,
    pub max_ssim: f64,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// SSIM statistics of `Ok` trials grouped into `d_e` bins of width `bin_width`.
/// Empty bins are omitted.
pub fn summarize(records: &[TrialRecord], bin_width: f64) -> Vec<SummaryRow> {
    let mut bins: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let (TrialStatus::Ok, Some(s)) = (r.status, r.ssim) {
            bins.entry((r.d_e / bin_width).floor() as usize).or_default().push(s);
        }
    }
    bins.into_iter()
        .map(|(b, mut v)| SummaryRow {
            de_bin_lo: b as f64 * bin_width,
            de_bin_hi: (b + 1) as f64 * bin_width,
            count: v.len(),
            max_ssim: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            median_ssim: median(&mut v).unwrap(),
        })
        .collect()
}

pub fn best_record(records: &[TrialRecord]) -> Option<&TrialRecord> {
    records
        .iter()
        .filter(|r| r.status == TrialStatus::Ok)
        .filter_map(|r| r.ssim.map(|s| (s, r)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, r)| r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Vec<SummaryRow>,
    pub best: Option<TrialRecord>,
}

/// Writes `records.csv` and `summary.csv` into `out_dir`.
pub fn report(records: &[TrialRecord], out_dir: impl AsRef<Path>, bin_width: f64) -> Result<Report> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    write_records(records, out_dir.join("records.csv"))?;
    let summary = summarize(records, bin_width);
    let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    w.write_record(SUMMARY_COLUMNS)?;
    for s in &summary {
        w.write_record([
            s.de_bin_lo.to_string(),
            s.de_bin_hi.to_string(),
            s.count.to_string(),
            s.median_ssim.to_string(),
            s.max_ssim.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(Report {
        summary,
        best: best_record(records).cloned(),
    })
}

impl fmt::Display for TrialRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trial {} {} d_e={:.4} ssim=", self.trial, self.params, self.d_e)?;
        match self.ssim {
            Some(s) => write!(f, "{s:.6}")?,
            None => f.write_str("-")?,
        }
        write!(f, " status={}", self.status)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::split;
    use crate::network::Activation;

    fn toy_split() -> SplitGrid {
        let g = SpatioTemporalGrid::from_fn(60, 12, |n, m| {
            (0.3 * n as f64 + 2.0 * std::f64::consts::PI * m as f64 / 12.0).sin()
        })
        .unwrap();
        split(&g, 50).unwrap()
    }

    fn settings() -> TrialSettings {
        TrialSettings {
            net: NetworkConfig {
                activation: Activation::Logistic,
                alpha_rng: 1.0,
                ..NetworkConfig::new(1, 6)
            },
            train: TrainConfig { eta: 0.3, n_steps: 3000, ..Default::default() },
            normalizer: Normalizer::linear(0.5, 2.5),
            boundary: BoundaryPolicy::Wrap,
            ssim: SsimConfig { window: 4, ..Default::default() },
        }
    }

    fn fp(i: usize, j: usize, k: usize, l: usize) -> FeatureParams {
        FeatureParams::new(i, j, k, l).unwrap()
    }

    #[test]
    fn trial_is_deterministic_and_scored() {
        let s = toy_split();
        let a = run_trial(&s.train, &s.test, &fp(1, 1, 1, 2), &fp(1, 1, 1, 2), &settings(), 42);
        let b = run_trial(&s.train, &s.test, &fp(1, 1, 1, 2), &fp(1, 1, 1, 2), &settings(), 42);
        assert_eq!(a.status, TrialStatus::Ok);
        assert!(a.same_outcome(&b));
        assert_eq!(a.d_e, 0.0);
        assert!(a.ssim.unwrap().abs() <= 1.0);
    }

    #[test]
    fn infeasible_geometry() {
        let s = toy_split();
        let r = run_trial(&s.train, &s.test, &fp(0, 5, 1, 10), &fp(1, 1, 1, 2), &settings(), 1);
        assert_eq!(r.status, TrialStatus::Infeasible);
        assert!(r.ssim.is_none());
    }

    #[test]
    fn pinned_sweep_matches_single_trial() {
        let s = toy_split();
        let opt = fp(1, 1, 1, 2);
        let sweep = SweepConfig {
            trials: 1,
            ranges: ParamRanges::pinned(&opt),
            optimal: opt,
            settings: settings(),
            master_seed: 7,
            workers: 1,
        };
        let recs = run_sweep(&s, &sweep, None).unwrap();
        let single = run_trial(&s.train, &s.test, &opt, &opt, &settings(), 7);
        assert_eq!(recs.len(), 1);
        assert!(recs[0].same_outcome(&single));
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let s = toy_split();
        let opt = fp(1, 1, 1, 2);
        let mut sweep = SweepConfig {
            trials: 6,
            ranges: ParamRanges { i: 0..=2, j: 0..=2, k: 1..=3, l: 1..=3 },
            optimal: opt,
            settings: TrialSettings { train: TrainConfig { n_steps: 500, ..settings().train }, ..settings() },
            master_seed: 100,
            workers: 3,
        };
        let full = run_sweep(&s, &sweep, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        sweep.trials = 2;
        run_sweep(&s, &sweep, Some(&path)).unwrap();
        sweep.trials = 6;
        let resumed = run_sweep(&s, &sweep, Some(&path)).unwrap();
        assert_eq!(resumed.len(), 6);
        for (a, b) in full.iter().zip(&resumed) {
            assert!(a.same_outcome(b), "{a} vs {b}");
        }
        assert_eq!(read_records(&path).unwrap().len(), 6);
    }

    #[test]
    fn records_round_trip_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let rep = report(&[], dir.path(), 1.0).unwrap();
        assert!(rep.best.is_none());
        let text = fs::read_to_string(dir.path().join("records.csv")).unwrap();
        assert_eq!(text.trim(), RECORD_COLUMNS.join(","));

        let recs = vec![
            TrialRecord {
                trial: 0,
                params: fp(1, 3, 2, 3),
                d_e: 0.0,
                d_manhattan: 0.0,
                ssim: Some(0.7113910123456789),
                train_mse: Some(1.25e-7),
                wall_time_s: 0.5,
                seed: u64::MAX,
                status: TrialStatus::Ok,
            },
            TrialRecord {
                trial: 1,
                params: fp(0, 0, 1, 1),
                d_e: 15f64.sqrt(),
                d_manhattan: 7.0,
                ssim: None,
                train_mse: None,
                wall_time_s: 0.1,
                seed: 3,
                status: TrialStatus::Diverged,
            },
        ];
        let rep = report(&recs, dir.path(), 1.0).unwrap();
        assert_eq!(read_records(dir.path().join("records.csv")).unwrap(), recs);
        assert_eq!(rep.best.unwrap().d_e, 0.0);
        assert_eq!(rep.summary.len(), 1);
    }

    #[test]
    fn summary_bins() {
        let mk = |d_e: f64, s: f64| TrialRecord {
            trial: 0,
            params: fp(0, 0, 1, 1),
            d_e,
            d_manhattan: d_e,
            ssim: Some(s),
            train_mse: Some(0.0),
            wall_time_s: 0.0,
            seed: 0,
            status: TrialStatus::Ok,
        };
        let rows = summarize(&[mk(0.5, 0.9), mk(0.2, 0.7), mk(0.9, 0.8), mk(3.1, 0.1)], 1.0);
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].count, rows[0].median_ssim, rows[0].max_ssim), (3, 0.8, 0.9));
        assert_eq!((rows[1].de_bin_lo, rows[1].de_bin_hi), (3.0, 4.0));
    }
}
