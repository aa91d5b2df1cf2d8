//! Finite-`n` decay slopes `-(1/n) log P(event)` along a grid of network sizes.

use crate::error::{Error, Result};
use crate::measure::TestFunction;
use crate::model::ModelSpec;

use super::mc::Harness;
use super::tilted::{rare_event_tilted, Event, TiltedEstimate};

/// Estimates with relative standard error above this are flagged unusable.
pub const MAX_RELATIVE_ERROR: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub n: usize,
    /// `None` when no replica hit the event.
    pub estimate: Option<TiltedEstimate>,
    /// `-(1/n) log P-hat`, NaN without an estimate.
    pub slope: f64,
    pub usable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeScan {
    pub rows: Vec<SlopeRow>,
    /// The rate value the slopes are expected to approach.
    pub reference: f64,
}

impl SlopeScan {
    pub fn slopes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.slope).collect()
    }
}

#[allow(clippy::too_many_arguments)]
/// Tilted estimates of `P(event_n)` for each `n` on the grid, all from the same seed.
pub fn ldp_slope_scan<E, T>(base: &ModelSpec, ns: &[usize], event: E, tilt: T, replicas: u64, seed: u64, harness: &Harness, reference: f64) -> Result<SlopeScan>
where
    E: Fn(&ModelSpec) -> Result<Event>,
    T: Fn(&ModelSpec) -> Result<TestFunction>,
{
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let spec = base.with_n(n)?;
        let ev = event(&spec)?;
        let g = tilt(&spec)?;
        let row = match rare_event_tilted(&spec, &ev, &g, replicas, seed, harness) {
            Ok(est) => SlopeRow {
                n,
                slope: -est.log_mean / n as f64,
                usable: est.relative_error <= MAX_RELATIVE_ERROR,
                estimate: Some(est),
            },
            Err(Error::NoEffectiveSamples { .. }) => SlopeRow { n, estimate: None, slope: f64::NAN, usable: false },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(SlopeScan { rows, reference })
}

/// `log P(no edges)` in the single-type ensemble: `C(n, 2) log(1 - c / (n + c))`.
pub fn empty_graph_log_probability(n: usize, c: f64) -> f64 {
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    pairs * (-c / (n as f64 + c)).ln_1p()
}

/// `-(1/n) log P(no edges) = (n - 1)/2 log(1 + c/n)`, increasing to `c / 2`.
pub fn empty_graph_slope(n: usize, c: f64) -> f64 {
    (n as f64 - 1.0) / 2.0 * (c / n as f64).ln_1p()
}
