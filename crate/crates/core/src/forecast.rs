//! Closed-loop multi-step forecasting.

use crate::embedding::{fill_stencil, BoundaryPolicy, FeatureParams};
use crate::error::{Error, Result};
use crate::grid::SpatioTemporalGrid;
use crate::network::Network;

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    /// `horizon x M` predicted slices; `None` when `horizon == 0`.
    pub predicted: Option<SpatioTemporalGrid>,
    pub horizon: usize,
    pub params: FeatureParams,
    pub boundary: BoundaryPolicy,
}

/// Iterates the network `horizon` steps past the end of `train_tail`, feeding
/// each predicted slice back as input.
///
/// Sites without an admissible stencil (skip policy near the edges) keep
/// their previous value.
pub fn forecast(
    net: &Network,
    train_tail: &SpatioTemporalGrid,
    params: &FeatureParams,
    horizon: usize,
    boundary: BoundaryPolicy,
) -> Result<ForecastResult> {
    let dim = params.input_dim();
    if net.input_dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: net.input_dim(),
        });
    }
    let history = params.history();
    if train_tail.rows() < history + 1 {
        return Err(Error::Range(format!(
            "forecast with {params} needs at least {} tail rows, got {}",
            history + 1,
            train_tail.rows()
        )));
    }
    if horizon == 0 {
        return Ok(ForecastResult {
            predicted: None,
            horizon,
            params: *params,
            boundary,
        });
    }
    let cols = train_tail.cols();
    // Only the last `history + 1` slices are ever read.
    let tail = train_tail.tail(history + 1)?;
    let mut buffer: Vec<f64> = tail.as_slice().to_vec();
    buffer.reserve(horizon * cols);
    let mut x = vec![0.0; dim];
    let mut next = vec![0.0; cols];
    for _ in 0..horizon {
        let n = buffer.len() / cols - 1;
        {
            let row = |t: usize| &buffer[t * cols..(t + 1) * cols];
            for (m, out) in next.iter_mut().enumerate() {
                *out = if fill_stencil(row, n, m, cols, params, boundary, &mut x) {
                    net.predict(&x)
                } else {
                    row(n)[m]
                };
            }
        }
        if let Some(bad) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("forecast value at site {bad}")));
        }
        buffer.extend_from_slice(&next);
    }
    let start = (history + 1) * cols;
    let mut predicted = SpatioTemporalGrid::from_vec(horizon, cols, buffer.split_off(start))?
        .with_time_step(train_tail.time_step);
    predicted.space_label = train_tail.space_label.clone();
    Ok(ForecastResult {
        predicted: Some(predicted),
        horizon,
        params: *params,
        boundary,
    })
}
