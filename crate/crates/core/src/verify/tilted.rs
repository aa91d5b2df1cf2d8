//! Importance sampling of rare events under exponentially tilted link probabilities.

use crate::empirical::cooperative_counts;
use crate::error::{Error, Result};
use crate::measure::{kullback_variational_gap, ConnectivityKernel, PairMeasure, ProbabilityMeasure, TestFunction};
use crate::model::{log_rn_derivative, sample_tilted_graph, sample_types, ModelSpec, SeededRng, TypedGraph};
use crate::sum::NeumaierSum;

use super::mc::{Harness, McEstimate};

/// A predicate on sampled networks.
pub trait GraphEvent: Sync {
    fn occurs(&self, graph: &TypedGraph) -> bool;
}

impl<F: Fn(&TypedGraph) -> bool + Sync> GraphEvent for F {
    fn occurs(&self, graph: &TypedGraph) -> bool {
        self(graph)
    }
}

/// Events expressed through the empirical measures.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    NoEdges,
    /// `sum |L2(a, b) - target(a, b)| <= radius`.
    PairBall { target: PairMeasure, radius: f64 },
    /// Fraction of isolated sites at least the threshold.
    IsolatedAtLeast(f64),
    /// Fraction of isolated sites at most the threshold.
    IsolatedAtMost(f64),
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::NoEdges => "no-edges",
            Event::PairBall { .. } => "pair-ball",
            Event::IsolatedAtLeast(_) => "isolated-at-least",
            Event::IsolatedAtMost(_) => "isolated-at-most",
        }
    }
}

pub fn pair_distance(graph: &TypedGraph, target: &PairMeasure) -> f64 {
    let counts = cooperative_counts(graph);
    let n = graph.n() as f64;
    counts.numerators.iter().zip(target.weights()).map(|(&x, &t)| (x as f64 / n - t).abs()).collect::<NeumaierSum>().value()
}

pub fn isolated_fraction(graph: &TypedGraph) -> f64 {
    graph.degrees().iter().filter(|&&d| d == 0).count() as f64 / graph.n() as f64
}

impl GraphEvent for Event {
    fn occurs(&self, graph: &TypedGraph) -> bool {
        match self {
            Event::NoEdges => graph.edge_count() == 0,
            Event::PairBall { target, radius } => pair_distance(graph, target) <= *radius,
            Event::IsolatedAtLeast(z) => isolated_fraction(graph) >= *z,
            Event::IsolatedAtMost(z) => isolated_fraction(graph) <= *z,
        }
    }
}

/// Importance-sampling estimate of a probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// `log(mean)`, finite even when `mean` underflows.
    pub log_mean: f64,
    /// `std_error / mean`.
    pub relative_error: f64,
    pub replicas: u64,
    pub hits: u64,
    /// `(sum w)^2 / sum w^2` over the replicas that hit the event.
    pub effective_sample_size: f64,
    pub seed: u64,
}

impl TiltedEstimate {
    pub fn as_mc(&self) -> McEstimate {
        McEstimate { mean: self.mean, std_error: self.std_error, replicas: self.replicas, seed: self.seed }
    }
}

/// Estimates `P(event)` by sampling under the tilt `g` and reweighting each hit by `dP/dP~`.
///
/// Weights are combined in log space after shifting by their maximum.
pub fn rare_event_tilted<E: GraphEvent + ?Sized>(spec: &ModelSpec, event: &E, g: &TestFunction, replicas: u64, seed: u64, harness: &Harness) -> Result<TiltedEstimate> {
    if replicas == 0 {
        return Err(Error::Domain("replica count must be at least 1".into()));
    }
    let parts = harness.map_chunks(replicas, |range| {
        let mut logs = Vec::new();
        for r in range {
            let mut rng = SeededRng::new(seed, r).rng();
            let types = sample_types(spec, &mut rng);
            let graph = sample_tilted_graph(spec, &types, g, &mut rng)?;
            if event.occurs(&graph) {
                logs.push(log_rn_derivative(spec, &graph, g)?);
            }
        }
        Ok(logs)
    })?;
    let logs: Vec<f64> = parts.into_iter().flatten().collect();
    if logs.is_empty() {
        return Err(Error::NoEffectiveSamples { replicas });
    }
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s1 = NeumaierSum::new();
    let mut s2 = NeumaierSum::new();
    for &l in &logs {
        let w = (l - shift).exp();
        s1.add(w);
        s2.add(w * w);
    }
    let n = replicas as f64;
    let mean_scaled = s1.value() / n;
    let var_scaled = if replicas > 1 { ((s2.value() - n * mean_scaled * mean_scaled) / (n - 1.0)).max(0.0) } else { 0.0 };
    let se_scaled = (var_scaled / n).sqrt();
    let scale = shift.exp();
    Ok(TiltedEstimate {
        mean: mean_scaled * scale,
        std_error: se_scaled * scale,
        log_mean: shift + mean_scaled.ln(),
        relative_error: se_scaled / mean_scaled,
        replicas,
        hits: logs.len() as u64,
        effective_sample_size: s1.value() * s1.value() / s2.value(),
        seed,
    })
}

/// `g* = log(pi / (c omega (x) omega))`, the tilt making `pi` the typical cooperative measure.
pub fn optimal_tilt(target: &PairMeasure, omega: &ProbabilityMeasure, kernel: &ConnectivityKernel) -> Result<TestFunction> {
    kullback_variational_gap(target, omega, kernel)?
        .maximizer
        .ok_or_else(|| Error::Domain("target pair measure has no finite optimal tilt; it must be positive wherever the kernel product is".into()))
}

/// Tilt bringing the expected number of edges to about one: `e^g c = 2 / n` on every charged pair.
pub fn no_edges_tilt(spec: &ModelSpec) -> Result<TestFunction> {
    let m = spec.num_types();
    let n = spec.n() as f64;
    let g = spec.kernel().entries().iter().map(|&c| if c > 0.0 { (2.0 / (n * c)).ln() } else { 0.0 }).collect();
    TestFunction::new(m, g)
}
