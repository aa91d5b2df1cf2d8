//! Exact log-likelihood ratio against its decomposition through the empirical measures.
//!
//! For a symmetric model the exact ratio splits into an edge part and a part summed over
//! all pairs:
//!
//! `log dP/dP~ = -n <L2/2, g> - n <L1 (x) L1 / 2, h_n> + <L1_diag / 2, h_n>`
//!
//! with `h_n(a, b) = n log((1 - p~) / (1 - p))` and `L1_diag(a, a) = L1(a)`. This is an
//! identity at every `n`. Replacing `h_n` by its limit `c (1 - e^g)` gives an asymptotic
//! form whose error stays bounded, so the per-site error vanishes.

use crate::empirical::{cooperative_measure, type_measure};
use crate::error::{Error, Result};
use crate::measure::TestFunction;
use crate::model::{edge_probability, log_rn_derivative, sample_tilted_graph, sample_types, tilted_edge_probability, ModelSpec, SeededRng, TypedGraph};
use crate::sum::compensated_sum;

use super::mc::Harness;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnCheck {
    pub n: usize,
    /// Max over replicas of `|exact - decomposition with h_n|`.
    pub exact_form_deviation: f64,
    /// Max over replicas of `|exact - decomposition with the limit of h_n|`.
    pub limit_form_deviation: f64,
}

/// `h_n(a, b) = n log((1 - p~) / (1 - p))`.
pub fn h_tilde_n(spec: &ModelSpec, g: &TestFunction) -> Result<Vec<f64>> {
    let m = spec.num_types();
    let n = spec.n() as f64;
    (0..m * m)
        .map(|i| {
            let (a, b) = (i / m, i % m);
            let p = edge_probability(spec, a, b);
            let pt = tilted_edge_probability(spec, g, a, b)?;
            Ok(n * ((-pt).ln_1p() - (-p).ln_1p()))
        })
        .collect()
}

/// `lim h_n(a, b) = c(a, b) (1 - e^{g(a, b)})`.
pub fn h_tilde_limit(spec: &ModelSpec, g: &TestFunction) -> Vec<f64> {
    let m = spec.num_types();
    (0..m * m).map(|i| -spec.kernel().get(i / m, i % m) * g.get(i / m, i % m).exp_m1()).collect()
}

/// Evaluates the decomposition of `log dP/dP~` for one graph with the given `h`.
pub fn decomposed_log_rn(graph: &TypedGraph, g: &TestFunction, h: &[f64]) -> Result<f64> {
    let m = graph.num_types();
    let n = graph.n() as f64;
    let l1 = type_measure(graph)?;
    let l2 = cooperative_measure(graph)?;
    let mut terms = Vec::with_capacity(2 * m * m + m);
    for a in 0..m {
        for b in 0..m {
            let idx = a * m + b;
            if l2.get(a, b) > 0.0 {
                terms.push(-n * 0.5 * l2.get(a, b) * g.get(a, b));
            }
            terms.push(-n * 0.5 * l1.get(a) * l1.get(b) * h[idx]);
        }
        terms.push(0.5 * l1.get(a) * h[a * m + a]);
    }
    Ok(compensated_sum(terms))
}

/// Samples `replicas` graphs under the tilt and compares both decompositions with the exact ratio.
pub fn asymptotic_rn_check(spec: &ModelSpec, g: &TestFunction, replicas: u64, seed: u64, harness: &Harness) -> Result<RnCheck> {
    if !spec.is_symmetric() || !g.is_symmetric() {
        return Err(Error::Domain("the decomposition requires a symmetric model and test function".into()));
    }
    if replicas == 0 {
        return Err(Error::Domain("replica count must be at least 1".into()));
    }
    let h_n = h_tilde_n(spec, g)?;
    let h_inf = h_tilde_limit(spec, g);
    let parts = harness.map_chunks(replicas, |range| {
        let mut worst = (0.0f64, 0.0f64);
        for r in range {
            let mut rng = SeededRng::new(seed, r).rng();
            let types = sample_types(spec, &mut rng);
            let graph = sample_tilted_graph(spec, &types, g, &mut rng)?;
            let exact = log_rn_derivative(spec, &graph, g)?;
            worst.0 = worst.0.max((exact - decomposed_log_rn(&graph, g, &h_n)?).abs());
            worst.1 = worst.1.max((exact - decomposed_log_rn(&graph, g, &h_inf)?).abs());
        }
        Ok(worst)
    })?;
    let (e, l) = parts.into_iter().fold((0.0f64, 0.0f64), |acc, w| (acc.0.max(w.0), acc.1.max(w.1)));
    Ok(RnCheck { n: spec.n(), exact_form_deviation: e, limit_form_deviation: l })
}
