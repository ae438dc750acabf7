//! The spatiotemporal grid type, train/test splitting, normalization and the
//! plain-text grid file format.
//!
//! A grid holds a scalar field `s[n][m]` with `n` indexing time slices and `m`
//! spatial sites. Storage is row-major (time-major), so a time slice is a
//! contiguous slice of the backing vector.
//!
//! The file format is headerless comma-separated text, one time slice per line.
//! Lines starting with `#` are comments. Values are written with Rust's
//! shortest round-trip float formatting, so `read_grid(write_grid(g)) == g`
//! bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// An `N x M` real scalar field sampled on `N` time steps and `M` spatial sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatioTemporalGrid {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    /// Physical time between consecutive rows (1.0 for maps).
    pub time_step: f64,
    pub space_label: Option<String>,
}

impl SpatioTemporalGrid {
    /// Builds a grid from row-major values. Every entry must be finite.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Range(format!(
                "grid must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry [{}][{}] = {}",
                i / cols,
                i % cols,
                values[i]
            )));
        }
        Ok(Self {
            values,
            rows,
            cols,
            time_step: 1.0,
            space_label: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((n, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::Range(format!(
                "row {n} has {} columns, expected {cols}",
                r.len()
            )));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    /// Builds a grid by evaluating `f(n, m)` on every cell.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for n in 0..rows {
            for m in 0..cols {
                values.push(f(n, m));
            }
        }
        Self::from_vec(rows, cols, values)
    }

    pub fn with_time_step(mut self, dt: f64) -> Self {
        self.time_step = dt;
        self
    }

    pub fn with_space_label(mut self, label: impl Into<String>) -> Self {
        self.space_label = Some(label.into());
        self
    }

    /// Number of time slices `N`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of spatial sites `M`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.values[n * self.cols + m]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.cols..(n + 1) * self.cols]
    }

    /// Copies out the time series at spatial site `m`.
    pub fn column(&self, m: usize) -> Vec<f64> {
        (0..self.rows).map(|n| self.get(n, m)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Rows `start..end` as a new grid carrying the same metadata.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.rows {
            return Err(Error::Range(format!(
                "row range {start}..{end} invalid for grid with {} rows",
                self.rows
            )));
        }
        let mut g = Self::from_vec(
            end - start,
            self.cols,
            self.values[start * self.cols..end * self.cols].to_vec(),
        )?;
        g.time_step = self.time_step;
        g.space_label = self.space_label.clone();
        Ok(g)
    }

    /// Returns the last `k` rows.
    pub fn tail(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.rows {
            return Err(Error::Range(format!(
                "tail of {k} rows requested from grid with {} rows",
                self.rows
            )));
        }
        self.slice_rows(self.rows - k, self.rows)
    }

    /// Applies `f` elementwise, failing if any result is not finite.
    pub fn try_map(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let values = self
            .values
            .iter()
            .map(|&v| f(v))
            .collect::<Result<Vec<_>>>()?;
        let mut g = Self::from_vec(self.rows, self.cols, values)?;
        g.time_step = self.time_step;
        g.space_label = self.space_label.clone();
        Ok(g)
    }
}

/// A row-exact partition of a grid into a training head and a test tail.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitGrid {
    pub train: SpatioTemporalGrid,
    pub test: SpatioTemporalGrid,
}

/// Splits `grid` so that the first `n_train` rows form the training set.
pub fn split(grid: &SpatioTemporalGrid, n_train: usize) -> Result<SplitGrid> {
    if n_train < 1 || n_train >= grid.rows() {
        return Err(Error::Range(format!(
            "n_train must satisfy 1 <= n_train < {}, got {n_train}",
            grid.rows()
        )));
    }
    Ok(SplitGrid {
        train: grid.slice_rows(0, n_train)?,
        test: grid.slice_rows(n_train, grid.rows())?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizerKind {
    #[default]
    Linear,
    Logarithmic,
}

/// Fixed affine or logarithmic rescaling applied before training.
///
/// * linear: `x -> alpha + x / beta`
/// * logarithmic: `x -> alpha + ln(1 + x) / beta`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub kind: NormalizerKind,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::linear(0.0, 1.0)
    }
}

impl Normalizer {
    pub fn linear(alpha: f64, beta: f64) -> Self {
        Self {
            kind: NormalizerKind::Linear,
            alpha,
            beta,
        }
    }

    pub fn logarithmic(alpha: f64, beta: f64) -> Self {
        Self {
            kind: NormalizerKind::Logarithmic,
            alpha,
            beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta == 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "normalizer scale beta must be finite and nonzero, got {}",
                self.beta
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "normalizer shift alpha must be finite, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: f64) -> Result<f64> {
        match self.kind {
            NormalizerKind::Linear => Ok(self.alpha + x / self.beta),
            NormalizerKind::Logarithmic => {
                if x <= -1.0 {
                    return Err(Error::Domain(format!(
                        "logarithmic normalizer requires x > -1, got {x}"
                    )));
                }
                Ok(self.alpha + x.ln_1p() / self.beta)
            }
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match self.kind {
            NormalizerKind::Linear => (y - self.alpha) * self.beta,
            NormalizerKind::Logarithmic => ((y - self.alpha) * self.beta).exp_m1(),
        }
    }
}

pub fn normalize(grid: &SpatioTemporalGrid, normalizer: &Normalizer) -> Result<SpatioTemporalGrid> {
    normalizer.validate()?;
    grid.try_map(|x| normalizer.forward(x))
}

pub fn denormalize(grid: &SpatioTemporalGrid, normalizer: &Normalizer) -> Result<SpatioTemporalGrid> {
    normalizer.validate()?;
    grid.try_map(|y| {
        let x = normalizer.inverse(y);
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::NonFinite(format!(
                "denormalizing {y} overflows the normalizer's inverse"
            )))
        }
    })
}

/// Parses grid text. `origin` is only used in error messages.
pub fn parse_grid(text: &str, origin: &Path) -> Result<SpatioTemporalGrid> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    let mut space_label = None;
    let mut time_step = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(label) = comment.strip_prefix("space:") {
                space_label = Some(label.trim().to_string());
            }
            for field in comment.split_whitespace() {
                if let Some(v) = field.strip_prefix("time_step=") {
                    time_step = v.parse().ok().filter(|t: &f64| *t > 0.0 && t.is_finite());
                }
            }
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            let tok = tok.trim();
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(origin, line_no, format!("non-numeric token {tok:?}"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(origin, line_no, format!("non-finite value {tok:?}")));
            }
            values.push(v);
        }
        let width = values.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("row has {width} values, expected {c}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let Some(cols) = cols else {
        return Err(Error::parse(origin, 0, "empty grid file"));
    };
    let mut grid = SpatioTemporalGrid::from_vec(rows, cols, values)?;
    if let Some(dt) = time_step {
        grid = grid.with_time_step(dt);
    }
    grid.space_label = space_label;
    Ok(grid)
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<SpatioTemporalGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_grid(&text, path)
}

/// Renders a grid in the text format, with a leading comment giving its shape.
pub fn format_grid(grid: &SpatioTemporalGrid) -> String {
    let mut out = String::with_capacity(grid.rows() * grid.cols() * 20);
    let _ = writeln!(out, "# rows={} cols={} time_step={:?}", grid.rows(), grid.cols(), grid.time_step);
    if let Some(label) = &grid.space_label {
        let _ = writeln!(out, "# space: {label}");
    }
    for row in grid.iter_rows() {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn write_grid(grid: &SpatioTemporalGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_grid(grid))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(rows: usize, cols: usize) -> SpatioTemporalGrid {
        SpatioTemporalGrid::from_fn(rows, cols, |n, m| (n * cols + m) as f64).unwrap()
    }

    #[test]
    fn split_standard_sizes() {
        let s = split(&ramp(531, 3), 500).unwrap();
        assert_eq!((s.train.rows(), s.test.rows()), (500, 31));
        let s = split(&ramp(1888, 2), 1646).unwrap();
        assert_eq!(s.test.rows(), 242);
    }

    #[test]
    fn split_smallest() {
        let g = ramp(2, 2);
        let s = split(&g, 1).unwrap();
        assert_eq!(s.train.row(0), g.row(0));
        assert_eq!(s.test.row(0), g.row(1));
    }

    #[test]
    fn split_out_of_range() {
        let g = ramp(4, 2);
        assert!(matches!(split(&g, 0), Err(Error::Range(_))));
        assert!(matches!(split(&g, 4), Err(Error::Range(_))));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(SpatioTemporalGrid::from_vec(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(SpatioTemporalGrid::from_vec(0, 2, vec![]).is_err());
    }

    #[test]
    fn normalizer_examples() {
        let g = ramp(3, 4);
        assert_eq!(normalize(&g, &Normalizer::linear(0.0, 1.0)).unwrap(), g);
        assert_eq!(Normalizer::linear(10.0, 0.430).forward(0.0).unwrap(), 10.0);
        assert_eq!(Normalizer::logarithmic(0.0, 1.0).forward(0.0).unwrap(), 0.0);
    }

    #[test]
    fn normalizer_errors() {
        let g = ramp(2, 2);
        assert!(matches!(
            normalize(&g, &Normalizer::linear(0.0, 0.0)),
            Err(Error::InvalidConfig(_))
        ));
        let neg = SpatioTemporalGrid::from_vec(1, 2, vec![0.0, -1.0]).unwrap();
        assert!(matches!(
            normalize(&neg, &Normalizer::logarithmic(10.0, 2.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn read_literal() {
        let g = parse_grid("0,1\n2,3", Path::new("t")).unwrap();
        assert_eq!(g, SpatioTemporalGrid::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let g = parse_grid("# header\n\n1.5, 2\n# mid\n3,4\n", Path::new("t")).unwrap();
        assert_eq!((g.rows(), g.cols()), (2, 2));
        assert_eq!(g.get(0, 0), 1.5);
    }

    #[test]
    fn header_metadata_round_trips() {
        let g = SpatioTemporalGrid::from_fn(2, 3, |n, m| (n * 3 + m) as f64)
            .unwrap()
            .with_time_step(0.25)
            .with_space_label("latitude");
        assert_eq!(parse_grid(&format_grid(&g), Path::new("t")).unwrap(), g);
    }

    #[test]
    fn ragged_rows_name_line() {
        let err = parse_grid("1,2,3\n4,5", Path::new("t")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn bad_token_and_empty() {
        assert!(matches!(
            parse_grid("1,x", Path::new("t")),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_grid("# only\n", Path::new("t")),
            Err(Error::Parse { .. })
        ));
    }

    fn grid_strategy() -> impl Strategy<Value = SpatioTemporalGrid> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-1e6f64..1e6, r * c)
                .prop_map(move |v| SpatioTemporalGrid::from_vec(r, c, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn normalize_round_trip(g in grid_strategy(), alpha in -20.0f64..20.0, beta in 0.05f64..10.0) {
            for norm in [Normalizer::linear(alpha, beta), Normalizer::logarithmic(alpha, beta)] {
                let src = match norm.kind {
                    NormalizerKind::Logarithmic => g.try_map(|x| Ok(x.abs() * 1e-4)).unwrap(),
                    NormalizerKind::Linear => g.clone(),
                };
                let back = denormalize(&normalize(&src, &norm).unwrap(), &norm).unwrap();
                for (a, b) in src.as_slice().iter().zip(back.as_slice()) {
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                }
            }
        }

        #[test]
        fn file_round_trip_exact(rows in proptest::collection::vec(proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 1..5)) {
            let g = SpatioTemporalGrid::from_rows(&rows).unwrap();
            let back = parse_grid(&format_grid(&g), Path::new("t")).unwrap();
            prop_assert_eq!(back.as_slice(), g.as_slice());
        }

        #[test]
        fn split_preserves_order(g in grid_strategy(), frac in 0.0f64..1.0) {
            prop_assume!(g.rows() >= 2);
            let n_train = 1 + ((g.rows() - 2) as f64 * frac) as usize;
            let s = split(&g, n_train).unwrap();
            let joined: Vec<f64> = s.train.as_slice().iter().chain(s.test.as_slice()).copied().collect();
            prop_assert_eq!(joined.as_slice(), g.as_slice());
        }
    }
}
