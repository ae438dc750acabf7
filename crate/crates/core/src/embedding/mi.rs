//! Histogram mutual information and lag profiles along either grid axis.

use rayon::prelude::*;

use super::Axis;
use crate::error::{Error, Result};
use crate::grid::SpatioTemporalGrid;

/// Result of one mutual-information estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub bits: f64,
    /// Set when either input has zero range; `bits` is then 0.
    pub degenerate: bool,
}

/// Equal-width bin indices spanning the range of `x`, or `None` if `x` is constant.
fn bin_indices(x: &[f64], bins: usize) -> Option<Vec<usize>> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return None;
    }
    let scale = bins as f64 / range;
    Some(
        x.iter()
            .map(|&v| (((v - lo) * scale) as usize).min(bins - 1))
            .collect(),
    )
}

fn check_inputs(a: &[f64], b: &[f64], bins: usize) -> Result<()> {
    if bins < 1 {
        return Err(Error::InvalidConfig("bin count must be at least 1".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 * bins {
        return Err(Error::Range(format!(
            "mutual information with {bins} bins needs at least {} samples, got {}",
            2 * bins,
            a.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mutual information input".into()));
    }
    Ok(())
}

/// Sums `p log2(ratio)` terms in a canonical order so that the result does not
/// depend on which operand came first.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Plug-in entropy (bits) of `x` under the same equal-width binning.
pub fn binned_entropy(x: &[f64], bins: usize) -> f64 {
    let Some(idx) = bin_indices(x, bins) else {
        return 0.0;
    };
    let mut counts = vec![0u64; bins];
    for i in idx {
        counts[i] += 1;
    }
    let n = x.len() as f64;
    sorted_sum(
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| (c as f64 / n) * (n / c as f64).log2())
            .collect(),
    )
}

/// Histogram estimate of `I(a; b)` in bits over a `bins x bins` joint histogram.
///
/// Each term is `p(a,b) log2(c_ab n / (c_a c_b))` with all count products
/// formed exactly, so `mutual_information(a, a)` reproduces
/// [`binned_entropy`]`(a)` bit for bit and the estimate is exactly symmetric.
pub fn mutual_information(a: &[f64], b: &[f64], bins: usize) -> Result<MiEstimate> {
    check_inputs(a, b, bins)?;
    let (Some(ia), Some(ib)) = (bin_indices(a, bins), bin_indices(b, bins)) else {
        return Ok(MiEstimate {
            bits: 0.0,
            degenerate: true,
        });
    };
    let mut joint = vec![0u64; bins * bins];
    let mut ca = vec![0u64; bins];
    let mut cb = vec![0u64; bins];
    for (&i, &j) in ia.iter().zip(&ib) {
        joint[i * bins + j] += 1;
        ca[i] += 1;
        cb[j] += 1;
    }
    let n = a.len() as u64;
    let nf = n as f64;
    let mut terms = Vec::with_capacity(bins * bins);
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            let ratio = (c * n) as f64 / (ca[i] * cb[j]) as f64;
            terms.push((c as f64 / nf) * ratio.log2());
        }
    }
    Ok(MiEstimate {
        bits: sorted_sum(terms).max(0.0),
        degenerate: false,
    })
}

/// Average mutual information as a function of lag along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MiProfile {
    pub axis: Axis,
    /// `1..=max_lag`.
    pub lags: Vec<usize>,
    pub mi_bits: Vec<f64>,
    /// True at a lag where every line was degenerate.
    pub degenerate: Vec<bool>,
}

impl MiProfile {
    pub fn value_at(&self, lag: usize) -> Option<f64> {
        self.lags.iter().position(|&l| l == lag).map(|i| self.mi_bits[i])
    }

    /// Copy with a lag-0 entry prepended.
    pub(crate) fn with_zero_lag(&self, bits: f64) -> MiProfile {
        let mut p = self.clone();
        p.lags.insert(0, 0);
        p.mi_bits.insert(0, bits);
        p.degenerate.insert(0, false);
        p
    }
}

/// How per-line statistics are combined into one value per lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MiMode {
    /// Estimate MI on every line separately and average the estimates.
    PerLine,
    /// Pool the lagged pairs of all lines into one joint histogram.
    #[default]
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiOptions {
    pub bins: usize,
    pub mode: MiMode,
    /// Treat spatial lines as rings, so every site contributes a lagged pair.
    pub periodic_space: bool,
}

impl MiOptions {
    pub fn new(bins: usize) -> Self {
        Self {
            bins,
            mode: MiMode::default(),
            periodic_space: false,
        }
    }
}

/// Extracts the 1-D lines along `axis`: columns for temporal, rows for spatial.
pub(crate) fn lines(grid: &SpatioTemporalGrid, axis: Axis) -> Vec<Vec<f64>> {
    match axis {
        Axis::Temporal => (0..grid.cols()).map(|m| grid.column(m)).collect(),
        Axis::Spatial => grid.iter_rows().map(<[f64]>::to_vec).collect(),
    }
}

/// `(x[i], x[i+lag])` for one line, cyclic when `periodic`.
fn lagged(line: &[f64], lag: usize, periodic: bool) -> (Vec<f64>, Vec<f64>) {
    let n = line.len();
    if periodic {
        let b = (0..n).map(|i| line[(i + lag) % n]).collect();
        (line.to_vec(), b)
    } else {
        (line[..n - lag].to_vec(), line[lag..].to_vec())
    }
}

/// Lag-`l` MI along `axis` for `l = 1..=max_lag`.
pub fn mi_profile(grid: &SpatioTemporalGrid, axis: Axis, max_lag: usize, opts: &MiOptions) -> Result<MiProfile> {
    let lines = lines(grid, axis);
    let len = lines[0].len();
    if max_lag < 1 || 2 * max_lag >= len {
        return Err(Error::Range(format!(
            "{axis} MI profile needs 1 <= max_lag < {len}/2, got max_lag={max_lag}"
        )));
    }
    let periodic = axis == Axis::Spatial && opts.periodic_space;
    let per_lag = (1..=max_lag)
        .into_par_iter()
        .map(|lag| match opts.mode {
            MiMode::PerLine => {
                let mut sum = 0.0;
                let mut used = 0usize;
                for line in &lines {
                    let (a, b) = lagged(line, lag, periodic);
                    let est = mutual_information(&a, &b, opts.bins)?;
                    if !est.degenerate {
                        sum += est.bits;
                        used += 1;
                    }
                }
                Ok(if used == 0 {
                    (0.0, true)
                } else {
                    (sum / used as f64, false)
                })
            }
            MiMode::Pooled => {
                let (mut a, mut b) = (Vec::new(), Vec::new());
                for line in &lines {
                    let (la, lb) = lagged(line, lag, periodic);
                    a.extend(la);
                    b.extend(lb);
                }
                let est = mutual_information(&a, &b, opts.bins)?;
                Ok((est.bits, est.degenerate))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MiProfile {
        axis,
        lags: (1..=max_lag).collect(),
        mi_bits: per_lag.iter().map(|p| p.0).collect(),
        degenerate: per_lag.iter().map(|p| p.1).collect(),
    })
}

/// Entropy of the values along `axis` under the pooled binning; the lag-0 MI.
pub(crate) fn zero_lag_bits(grid: &SpatioTemporalGrid, axis: Axis, opts: &MiOptions) -> f64 {
    match opts.mode {
        MiMode::Pooled => binned_entropy(grid.as_slice(), opts.bins),
        MiMode::PerLine => {
            let hs: Vec<f64> = lines(grid, axis)
                .iter()
                .map(|l| binned_entropy(l, opts.bins))
                .filter(|&h| h > 0.0)
                .collect();
            if hs.is_empty() {
                0.0
            } else {
                hs.iter().sum::<f64>() / hs.len() as f64
            }
        }
    }
}

/// MI between `s[n][m]` and `s[n+l][m]`, averaged over sites, per-line estimates.
pub fn temporal_mi_profile(grid: &SpatioTemporalGrid, max_lag: usize, bins: usize) -> Result<MiProfile> {
    let opts = MiOptions {
        mode: MiMode::PerLine,
        ..MiOptions::new(bins)
    };
    mi_profile(grid, Axis::Temporal, max_lag, &opts)
}

/// MI between `s[n][m]` and `s[n][m+k]`, averaged over time, per-line estimates.
pub fn spatial_mi_profile(grid: &SpatioTemporalGrid, max_lag: usize, bins: usize) -> Result<MiProfile> {
    let opts = MiOptions {
        mode: MiMode::PerLine,
        ..MiOptions::new(bins)
    };
    mi_profile(grid, Axis::Spatial, max_lag, &opts)
}

/// Picks the lag from an MI profile.
///
/// Returns the smallest lag that is a strict interior local minimum. Failing
/// that, returns the smallest lag whose MI has dropped to at most
/// `plateau_drop` times the lag-1 value and then stays within 5% over the
/// following `plateau_window` lags.
pub fn first_minimum(profile: &MiProfile, plateau_drop: f64, plateau_window: usize) -> Result<usize> {
    let mi = &profile.mi_bits;
    if mi.is_empty() {
        return Err(Error::SelectionFailure("empty MI profile".into()));
    }
    for i in 1..mi.len().saturating_sub(1) {
        if mi[i - 1] > mi[i] && mi[i] < mi[i + 1] {
            return Ok(profile.lags[i]);
        }
    }
    let first = profile.value_at(1).unwrap_or(mi[0]);
    for i in 0..mi.len() {
        if i + plateau_window >= mi.len() {
            break;
        }
        if profile.lags[i] == 0 || mi[i] > plateau_drop * first || mi[i] <= 0.0 {
            continue;
        }
        let flat = (1..=plateau_window).all(|w| ((mi[i + w] - mi[i]) / mi[i]).abs() < 0.05);
        if flat {
            return Ok(profile.lags[i]);
        }
    }
    Err(Error::SelectionFailure(format!(
        "{} MI profile over lags 1..={} has neither a local minimum nor a plateau; widen max_lag",
        profile.axis,
        profile.lags.last().copied().unwrap_or(0)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::seeded_rng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn profile(v: &[f64]) -> MiProfile {
        MiProfile {
            axis: Axis::Temporal,
            lags: (1..=v.len()).collect(),
            mi_bits: v.to_vec(),
            degenerate: vec![false; v.len()],
        }
    }

    #[test]
    fn identical_uniform_sixteen_bins_is_four_bits() {
        let a: Vec<f64> = (0..1600).map(|i| (i % 16) as f64).collect();
        let est = mutual_information(&a, &a, 16).unwrap();
        assert!((est.bits - 4.0).abs() < 1e-12);
        assert_eq!(est.bits, binned_entropy(&a, 16));
    }

    #[test]
    fn independent_uniform_is_small() {
        let mut rng = seeded_rng(7);
        let a: Vec<f64> = (0..100_000).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..100_000).map(|_| rng.gen()).collect();
        let est = mutual_information(&a, &b, 16).unwrap();
        // Plug-in bias is about (bins-1)^2 / (2 n ln 2) = 0.0016 bits.
        assert!(est.bits < 0.05, "{}", est.bits);
    }

    #[test]
    fn shuffle_destroys_information() {
        // Logistic map at r = 4: strongly deterministic at lag 1.
        let mut x = 0.3141;
        let series: Vec<f64> = (0..20_000)
            .map(|_| {
                x = 4.0 * x * (1.0 - x);
                x
            })
            .collect();
        let lagged = mutual_information(&series[..19_999], &series[1..], 16).unwrap().bits;
        let mut shuffled = series.clone();
        shuffled.shuffle(&mut seeded_rng(1));
        let shuf = mutual_information(&series, &shuffled, 16).unwrap().bits;
        assert!(shuf < 0.05 && lagged > 1.0, "shuffled {shuf}, lagged {lagged}");
    }

    #[test]
    fn constant_is_degenerate() {
        let a = vec![1.0; 64];
        let b: Vec<f64> = (0..64).map(f64::from).collect();
        let est = mutual_information(&a, &b, 8).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.bits, 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(mutual_information(&[1.0; 10], &[1.0; 9], 2).is_err());
        assert!(mutual_information(&[1.0; 10], &[1.0; 10], 8).is_err());
    }

    #[test]
    fn first_minimum_examples() {
        assert_eq!(first_minimum(&profile(&[4.0, 2.0, 1.0, 2.0, 3.0]), 0.5, 3).unwrap(), 3);
        assert_eq!(
            first_minimum(&profile(&[4.0, 2.0, 1.0, 0.99, 0.985, 0.984]), 0.5, 3).unwrap(),
            3
        );
        assert!(matches!(
            first_minimum(&profile(&[1.0, 2.0, 3.0, 4.0]), 0.5, 2),
            Err(Error::SelectionFailure(_))
        ));
    }

    #[test]
    fn noise_profile_near_zero() {
        let mut rng = seeded_rng(5);
        let g = SpatioTemporalGrid::from_fn(2000, 8, |_, _| rng.gen()).unwrap();
        let p = temporal_mi_profile(&g, 10, 8).unwrap();
        assert!(p.mi_bits.iter().all(|&v| v < 0.05), "{:?}", p.mi_bits);
        let g = SpatioTemporalGrid::from_fn(8, 2000, |_, _| rng.gen()).unwrap();
        let p = spatial_mi_profile(&g, 10, 8).unwrap();
        assert!(p.mi_bits.iter().all(|&v| v < 0.05), "{:?}", p.mi_bits);
    }

    #[test]
    fn constant_axes_flag_degenerate() {
        let g = SpatioTemporalGrid::from_fn(100, 40, |_, m| m as f64).unwrap();
        let p = temporal_mi_profile(&g, 5, 4).unwrap();
        assert!(p.degenerate.iter().all(|&d| d));
        let g = SpatioTemporalGrid::from_fn(100, 40, |n, _| n as f64).unwrap();
        let p = spatial_mi_profile(&g, 5, 4).unwrap();
        assert!(p.degenerate.iter().all(|&d| d));
    }

    #[test]
    fn pooled_noise_near_zero_and_constant_degenerate() {
        let mut rng = seeded_rng(6);
        let g = SpatioTemporalGrid::from_fn(300, 30, |_, _| rng.gen()).unwrap();
        for periodic_space in [false, true] {
            let opts = MiOptions { periodic_space, ..MiOptions::new(16) };
            for axis in [Axis::Temporal, Axis::Spatial] {
                let p = mi_profile(&g, axis, 10, &opts).unwrap();
                assert!(p.mi_bits.iter().all(|&v| v < 0.05), "{axis}: {:?}", p.mi_bits);
            }
        }
        let c = SpatioTemporalGrid::from_fn(100, 40, |_, _| 3.0).unwrap();
        let p = mi_profile(&c, Axis::Temporal, 5, &MiOptions::new(4)).unwrap();
        assert!(p.degenerate.iter().all(|&d| d));
    }

    #[test]
    fn periodic_pairs_wrap() {
        // Ring of period 4: the lag-4 copy equals the line itself.
        let g = SpatioTemporalGrid::from_fn(200, 8, |n, m| ((n * 7 + m) % 4) as f64 + 0.1 * n as f64 / 200.0).unwrap();
        let opts = MiOptions { periodic_space: true, mode: MiMode::Pooled, bins: 4 };
        let p = mi_profile(&g, Axis::Spatial, 3, &opts).unwrap();
        let h = binned_entropy(g.as_slice(), 4);
        assert!(p.mi_bits.iter().all(|&v| v <= h + 1e-12));
    }

    #[test]
    fn profile_lag_bound() {
        let g = SpatioTemporalGrid::from_fn(20, 4, |n, m| (n + m) as f64).unwrap();
        assert!(matches!(temporal_mi_profile(&g, 10, 2), Err(Error::Range(_))));
    }

    proptest::proptest! {
        #[test]
        fn symmetric_and_non_negative(seed in 0u64..1000, bins in 2usize..20) {
            let mut rng = seeded_rng(seed);
            let a: Vec<f64> = (0..200).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let b: Vec<f64> = a.iter().map(|x| x * x + rng.gen_range(-1.0..1.0)).collect();
            let ab = mutual_information(&a, &b, bins).unwrap().bits;
            let ba = mutual_information(&b, &a, bins).unwrap().bits;
            proptest::prop_assert_eq!(ab, ba);
            proptest::prop_assert!(ab >= 0.0);
            proptest::prop_assert_eq!(mutual_information(&a, &a, bins).unwrap().bits, binned_entropy(&a, bins));
        }
    }
}
