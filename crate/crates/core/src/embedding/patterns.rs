//! Space-time delay feature vectors and training pairs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::SpatioTemporalGrid;

/// Geometry of the input stencil: `2I+1` sites spaced `K` apart, taken at
/// `J+1` time slices spaced `L` apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureParams {
    /// `I`: number of neighbours on each side.
    pub half_width: usize,
    /// `J`: number of past slices.
    pub depth: usize,
    /// `K`.
    pub spatial_lag: usize,
    /// `L`.
    pub temporal_lag: usize,
}

impl FeatureParams {
    pub fn new(i: usize, j: usize, k: usize, l: usize) -> Result<Self> {
        if k < 1 || l < 1 {
            return Err(Error::InvalidConfig(format!(
                "spatial and temporal lags must be >= 1, got K={k}, L={l}"
            )));
        }
        Ok(Self {
            half_width: i,
            depth: j,
            spatial_lag: k,
            temporal_lag: l,
        })
    }

    /// `(2I+1)(J+1)`.
    pub fn input_dim(&self) -> usize {
        (2 * self.half_width + 1) * (self.depth + 1)
    }

    pub fn spatial_width(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Oldest time offset used by a stencil, `J*L`.
    pub fn history(&self) -> usize {
        self.depth * self.temporal_lag
    }

    /// Furthest spatial offset, `I*K`.
    pub fn reach(&self) -> usize {
        self.half_width * self.spatial_lag
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.half_width, self.depth, self.spatial_lag, self.temporal_lag]
    }
}

impl fmt::Display for FeatureParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [i, j, k, l] = self.as_array();
        write!(f, "(I={i}, J={j}, K={k}, L={l})")
    }
}

/// How stencils that leave the spatial domain are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Periodic indexing.
    Wrap,
    /// Sites whose stencil leaves the domain produce no pattern.
    #[default]
    Skip,
    /// Out-of-range indices read the nearest edge value.
    Clamp,
}

impl FromStr for BoundaryPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wrap" => Ok(Self::Wrap),
            "skip" => Ok(Self::Skip),
            "clamp" => Ok(Self::Clamp),
            other => Err(Error::InvalidConfig(format!(
                "unknown boundary policy {other:?} (expected wrap, skip or clamp)"
            ))),
        }
    }
}

impl fmt::Display for BoundaryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Wrap => "wrap",
            Self::Skip => "skip",
            Self::Clamp => "clamp",
        })
    }
}

impl BoundaryPolicy {
    /// Maps a signed site index into the domain, or `None` under `Skip` when it falls outside.
    #[inline]
    fn resolve(self, m: isize, cols: usize) -> Option<usize> {
        let c = cols as isize;
        match self {
            Self::Wrap => Some(m.rem_euclid(c) as usize),
            Self::Clamp => Some(m.clamp(0, c - 1) as usize),
            Self::Skip => (0..c).contains(&m).then_some(m as usize),
        }
    }

    /// Whether a site at `m` has a complete stencil.
    pub fn admits(self, m: usize, cols: usize, params: &FeatureParams) -> bool {
        match self {
            Self::Skip => m >= params.reach() && m + params.reach() < cols,
            _ => true,
        }
    }
}

/// Writes the stencil of `(n, m)` into `out` using `row(t)` to read slice `t`.
///
/// Layout: `out[j*(2I+1) + (i+I)] = s[n - j*L][m + i*K]`. Returns `false`
/// when the stencil is not admissible under `policy`.
pub(crate) fn fill_stencil<'a, R>(
    row: R,
    n: usize,
    m: usize,
    cols: usize,
    params: &FeatureParams,
    policy: BoundaryPolicy,
    out: &mut [f64],
) -> bool
where
    R: Fn(usize) -> &'a [f64],
{
    let width = params.spatial_width();
    let half = params.half_width as isize;
    let k = params.spatial_lag as isize;
    for j in 0..=params.depth {
        let slice = row(n - j * params.temporal_lag);
        for i in -half..=half {
            let Some(site) = policy.resolve(m as isize + i * k, cols) else {
                return false;
            };
            out[j * width + (i + half) as usize] = slice[site];
        }
    }
    true
}

/// One training pair borrowed from a [`PatternSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturePattern<'a> {
    pub input: &'a [f64],
    pub target: f64,
    /// `(n, m)` of the centre value `s[n][m]`; the target is `s[n+1][m]`.
    pub origin: (usize, usize),
}

/// All training pairs for one parameter choice, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    origins: Vec<(usize, usize)>,
}

impl PatternSet {
    pub fn from_parts(dim: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if dim == 0 || inputs.len() != dim * targets.len() {
            return Err(Error::Dimension {
                expected: dim * targets.len(),
                got: inputs.len(),
            });
        }
        let origins = (0..targets.len()).map(|i| (i, 0)).collect();
        Ok(Self {
            dim,
            inputs,
            targets,
            origins,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn get(&self, i: usize) -> FeaturePattern<'_> {
        FeaturePattern {
            input: &self.inputs[i * self.dim..(i + 1) * self.dim],
            target: self.targets[i],
            origin: self.origins[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = FeaturePattern<'_>> {
        (0..self.len()).map(|i| self.get(i))
    }
}

/// Checks that `params` fit a grid with `rows x cols` under `policy`.
pub fn check_feasible(rows: usize, cols: usize, params: &FeatureParams, policy: BoundaryPolicy) -> Result<()> {
    if params.history() + 2 > rows {
        return Err(Error::Range(format!(
            "J*L + 2 = {} exceeds the {rows} available time slices for {params}",
            params.history() + 2
        )));
    }
    if policy == BoundaryPolicy::Skip && 2 * params.reach() >= cols {
        return Err(Error::Range(format!(
            "2*I*K = {} leaves no admissible site among {cols} under the skip policy for {params}",
            2 * params.reach()
        )));
    }
    Ok(())
}

/// Builds every admissible `(x(s[n][m]), s[n+1][m])` pair, ordered by `n` then `m`.
pub fn build_patterns(grid: &SpatioTemporalGrid, params: &FeatureParams, policy: BoundaryPolicy) -> Result<PatternSet> {
    let (rows, cols) = (grid.rows(), grid.cols());
    check_feasible(rows, cols, params, policy)?;
    let dim = params.input_dim();
    let sites: Vec<usize> = (0..cols).filter(|&m| policy.admits(m, cols, params)).collect();
    let count = (rows - 1 - params.history()) * sites.len();
    let mut inputs = vec![0.0; count * dim];
    let mut targets = Vec::with_capacity(count);
    let mut origins = Vec::with_capacity(count);
    let mut idx = 0;
    for n in params.history()..rows - 1 {
        for &m in &sites {
            let ok = fill_stencil(|t| grid.row(t), n, m, cols, params, policy, &mut inputs[idx * dim..(idx + 1) * dim]);
            debug_assert!(ok);
            targets.push(grid.get(n + 1, m));
            origins.push((n, m));
            idx += 1;
        }
    }
    Ok(PatternSet {
        dim,
        inputs,
        targets,
        origins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(i: usize, j: usize, k: usize, l: usize) -> FeatureParams {
        FeatureParams::new(i, j, k, l).unwrap()
    }

    #[test]
    fn input_dimension() {
        assert_eq!(p(2, 6, 9, 70).input_dim(), 35);
        assert_eq!(p(0, 0, 1, 1).input_dim(), 1);
    }

    #[test]
    fn degenerate_stencil() {
        let g = SpatioTemporalGrid::from_fn(6, 4, |n, m| (10 * n + m) as f64).unwrap();
        let ps = build_patterns(&g, &p(0, 0, 1, 1), BoundaryPolicy::Wrap).unwrap();
        assert_eq!(ps.len(), 5 * 4);
        for pat in ps.iter() {
            let (n, m) = pat.origin;
            assert_eq!(pat.input, &[g.get(n, m)]);
            assert_eq!(pat.target, g.get(n + 1, m));
        }
    }

    #[test]
    fn three_by_three_by_hand() {
        // s[n][m] = 10 n + m, 0-based.
        let g = SpatioTemporalGrid::from_fn(3, 3, |n, m| (10 * n + m) as f64).unwrap();
        let ps = build_patterns(&g, &p(1, 1, 1, 1), BoundaryPolicy::Wrap).unwrap();
        assert_eq!(ps.len(), 3);
        let want: [[f64; 6]; 3] = [
            [12.0, 10.0, 11.0, 2.0, 0.0, 1.0],
            [10.0, 11.0, 12.0, 0.0, 1.0, 2.0],
            [11.0, 12.0, 10.0, 1.0, 2.0, 0.0],
        ];
        for (m, pat) in ps.iter().enumerate() {
            assert_eq!(pat.origin, (1, m));
            assert_eq!(pat.input, &want[m]);
            assert_eq!(pat.target, (20 + m) as f64);
        }
    }

    #[test]
    fn skip_and_clamp() {
        let g = SpatioTemporalGrid::from_fn(4, 5, |n, m| (10 * n + m) as f64).unwrap();
        let ps = build_patterns(&g, &p(1, 0, 2, 1), BoundaryPolicy::Skip).unwrap();
        assert!(ps.iter().all(|pat| pat.origin.1 == 2));
        assert_eq!(ps.get(0).input, &[0.0, 2.0, 4.0]);
        let ps = build_patterns(&g, &p(1, 0, 2, 1), BoundaryPolicy::Clamp).unwrap();
        assert_eq!(ps.len(), 3 * 5);
        assert_eq!(ps.get(0).input, &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn infeasible_params() {
        let g = SpatioTemporalGrid::from_fn(10, 5, |n, m| (n + m) as f64).unwrap();
        assert!(matches!(
            build_patterns(&g, &p(0, 3, 1, 3), BoundaryPolicy::Wrap),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            build_patterns(&g, &p(1, 0, 3, 1), BoundaryPolicy::Skip),
            Err(Error::Range(_))
        ));
        assert!(FeatureParams::new(1, 1, 0, 1).is_err());
    }

    proptest! {
        #[test]
        fn wrap_layout_matches_index_formula(
            rows in 3usize..9, cols in 1usize..7,
            i in 0usize..3, j in 0usize..3, k in 1usize..4, l in 1usize..3,
        ) {
            let params = p(i, j, k, l);
            prop_assume!(params.history() + 2 <= rows);
            let g = SpatioTemporalGrid::from_fn(rows, cols, |n, m| (100 * n + m) as f64).unwrap();
            let ps = build_patterns(&g, &params, BoundaryPolicy::Wrap).unwrap();
            prop_assert_eq!(ps.len(), (rows - 1 - params.history()) * cols);
            for pat in ps.iter() {
                let (n, m) = pat.origin;
                for jj in 0..=j {
                    for ii in -(i as isize)..=(i as isize) {
                        let site = (m as isize + ii * k as isize).rem_euclid(cols as isize) as usize;
                        let idx = jj * (2 * i + 1) + (ii + i as isize) as usize;
                        prop_assert_eq!(pat.input[idx], g.get(n - jj * l, site));
                    }
                }
            }
        }
    }
}
