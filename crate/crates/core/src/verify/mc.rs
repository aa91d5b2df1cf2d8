//! Replica-parallel Monte Carlo with reproducible per-replica streams.
//!
//! Replica `r` draws from stream `r` of the run seed. Replicas are grouped into fixed
//! chunks and partial results are merged in chunk order, so estimates do not depend on
//! the number of worker threads.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};
use crate::model::{sample_network, ModelSpec, SeededRng, TypedGraph};

use super::enumerate::{observe, EnsembleDistribution, ObservableKind, ObservableValue};

/// Replicas per reduction chunk.
pub const CHUNK: u64 = 256;

/// A fixed-size worker pool.
#[derive(Clone)]
pub struct Harness {
    workers: usize,
    pool: Arc<ThreadPool>,
}

impl std::fmt::Debug for Harness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Harness").field("workers", &self.workers).finish()
    }
}

impl Harness {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Domain("worker count must be at least 1".into()));
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Evaluation(format!("cannot start worker pool: {e}")))?;
        Ok(Self { workers, pool: Arc::new(pool) })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `f` inside the pool, so nested parallel iterators use its workers.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// Applies `chunk` to consecutive replica ranges of length [`CHUNK`], returning results in range order.
    pub fn map_chunks<A, F>(&self, replicas: u64, chunk: F) -> Result<Vec<A>>
    where
        A: Send,
        F: Fn(Range<u64>) -> Result<A> + Sync,
    {
        let chunks = replicas.div_ceil(CHUNK);
        self.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|c| chunk(c * CHUNK..((c + 1) * CHUNK).min(replicas)))
                .collect()
        })
    }
}

/// Running count, mean and sum of squared deviations; merged with the pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / total as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.count as f64 * w;
        self.count = total;
    }

    /// Unbiased sample variance; zero for fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Sample mean of i.i.d. replicas with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_moments(moments: &Moments, seed: u64) -> Self {
        Self { mean: moments.mean, std_error: moments.std_error(), replicas: moments.count, seed }
    }

    /// `|mean - reference| <= k * std_error`.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.std_error
    }
}

fn check_replicas(replicas: u64) -> Result<()> {
    if replicas == 0 {
        return Err(Error::Domain("replica count must be at least 1".into()));
    }
    Ok(())
}

/// Mean and standard error of `f` over `replicas` sampled networks.
pub fn mc_scalar<F>(spec: &ModelSpec, replicas: u64, seed: u64, harness: &Harness, f: F) -> Result<McEstimate>
where
    F: Fn(&TypedGraph) -> f64 + Sync,
{
    check_replicas(replicas)?;
    let parts = harness.map_chunks(replicas, |range| {
        let mut m = Moments::default();
        for r in range {
            m.push(f(&sample_network(spec, SeededRng::new(seed, r))?));
        }
        Ok(m)
    })?;
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(McEstimate::from_moments(&total, seed))
}

/// Per-replica values of `f`, in replica order.
pub fn mc_values<T, F>(spec: &ModelSpec, replicas: u64, seed: u64, harness: &Harness, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&TypedGraph) -> Result<T> + Sync,
{
    check_replicas(replicas)?;
    let parts = harness.map_chunks(replicas, |range| range.map(|r| f(&sample_network(spec, SeededRng::new(seed, r))?)).collect::<Result<Vec<T>>>())?;
    Ok(parts.into_iter().flatten().collect())
}

/// Empirical law of an observable over Monte Carlo replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct McLaw {
    pub kind: ObservableKind,
    pub counts: BTreeMap<ObservableValue, u64>,
    pub replicas: u64,
    pub seed: u64,
}

impl McLaw {
    pub fn probabilities(&self) -> BTreeMap<ObservableValue, f64> {
        let n = self.replicas as f64;
        self.counts.iter().map(|(v, &c)| (v.clone(), c as f64 / n)).collect()
    }

    pub fn tv_distance(&self, exact: &EnsembleDistribution) -> f64 {
        exact.tv_distance(&self.probabilities())
    }
}

/// Empirical laws of several observables, all read off the same replicas.
pub fn mc_laws(spec: &ModelSpec, kinds: &[ObservableKind], replicas: u64, seed: u64, harness: &Harness) -> Result<Vec<McLaw>> {
    check_replicas(replicas)?;
    let parts = harness.map_chunks(replicas, |range| {
        let mut counts = vec![BTreeMap::<ObservableValue, u64>::new(); kinds.len()];
        for r in range {
            let graph = sample_network(spec, SeededRng::new(seed, r))?;
            for (k, &kind) in kinds.iter().enumerate() {
                *counts[k].entry(observe(&graph, kind)).or_insert(0) += 1;
            }
        }
        Ok(counts)
    })?;
    let mut laws: Vec<McLaw> = kinds.iter().map(|&kind| McLaw { kind, counts: BTreeMap::new(), replicas, seed }).collect();
    for part in parts {
        for (law, counts) in laws.iter_mut().zip(part) {
            for (v, c) in counts {
                *law.counts.entry(v).or_insert(0) += c;
            }
        }
    }
    Ok(laws)
}
