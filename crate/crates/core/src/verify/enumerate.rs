//! Brute-force oracle over every type assignment and edge set of a small ensemble.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::empirical::{cooperative_counts, degree_counts, site_profiles, type_counts};
use crate::error::{Error, Result};
use crate::model::{edge_probability, ModelSpec, TypedGraph};
use crate::sum::NeumaierSum;

/// Largest number of configurations the oracle will visit.
pub const ENUMERATION_BUDGET: f64 = 1e7;

/// Observables whose exact laws the oracle can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObservableKind {
    TypeMeasure,
    PairMeasure,
    Degree,
    Neighbourhood,
    IsolatedFraction,
}

impl ObservableKind {
    pub const ALL: [ObservableKind; 5] = [
        ObservableKind::TypeMeasure,
        ObservableKind::PairMeasure,
        ObservableKind::Degree,
        ObservableKind::Neighbourhood,
        ObservableKind::IsolatedFraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::TypeMeasure => "types",
            ObservableKind::PairMeasure => "pairs",
            ObservableKind::Degree => "degree",
            ObservableKind::Neighbourhood => "neighbourhood",
            ObservableKind::IsolatedFraction => "isolated",
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObservableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ObservableKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown observable `{s}`; expected one of types, pairs, degree, neighbourhood, isolated")))
    }
}

/// Integer encoding of an observable, exact so that Monte Carlo and enumeration agree on keys.
///
/// * types: site count of each type
/// * pairs: numerators of `L2` (denominator `n`)
/// * degree: number of sites of each degree, trailing zeros trimmed
/// * neighbourhood: sorted `(type, l_1, .., l_m)` rows of every site, concatenated
/// * isolated: number of isolated sites
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservableValue(pub Vec<u64>);

impl fmt::Display for ObservableValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

pub fn observe(graph: &TypedGraph, kind: ObservableKind) -> ObservableValue {
    let values = match kind {
        ObservableKind::TypeMeasure => type_counts(graph),
        ObservableKind::PairMeasure => cooperative_counts(graph).numerators,
        ObservableKind::Degree => {
            let mut counts = degree_counts(graph);
            while counts.last() == Some(&0) {
                counts.pop();
            }
            counts
        }
        ObservableKind::Neighbourhood => {
            let mut rows: Vec<Vec<u64>> = site_profiles(graph)
                .into_iter()
                .enumerate()
                .map(|(i, p)| std::iter::once(graph.type_of(i) as u64).chain(p.0.into_iter().map(u64::from)).collect())
                .collect();
            rows.sort_unstable();
            rows.concat()
        }
        ObservableKind::IsolatedFraction => vec![graph.degrees().iter().filter(|&&d| d == 0).count() as u64],
    };
    ObservableValue(values)
}

/// Exact law of an observable under the finite-`n` ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDistribution {
    pub kind: ObservableKind,
    /// Sorted by value; only values of positive probability appear.
    pub support: Vec<(ObservableValue, f64)>,
}

impl EnsembleDistribution {
    pub fn total(&self) -> f64 {
        self.support.iter().map(|(_, p)| *p).collect::<NeumaierSum>().value()
    }

    pub fn probability(&self, value: &ObservableValue) -> f64 {
        self.support.binary_search_by(|(v, _)| v.cmp(value)).map_or(0.0, |i| self.support[i].1)
    }

    /// Total variation distance to another law on the same keys.
    pub fn tv_distance(&self, other: &BTreeMap<ObservableValue, f64>) -> f64 {
        let mut acc = NeumaierSum::new();
        for (v, p) in &self.support {
            acc.add((p - other.get(v).copied().unwrap_or(0.0)).abs());
        }
        for (v, q) in other {
            if self.probability(v) == 0.0 {
                acc.add(q.abs());
            }
        }
        0.5 * acc.value()
    }
}

/// `|types|^n * 2^(n (n - 1) / 2)`.
pub fn enumeration_budget(spec: &ModelSpec) -> f64 {
    (spec.num_types() as f64).powf(spec.n() as f64) * 2f64.powf(spec.pair_count() as f64)
}

fn check_budget(spec: &ModelSpec) -> Result<()> {
    let required = enumeration_budget(spec);
    if required > ENUMERATION_BUDGET {
        return Err(Error::Budget { required, limit: ENUMERATION_BUDGET });
    }
    Ok(())
}

/// Visits every configuration with its probability, folding per type assignment in parallel
/// and merging the partial results in assignment order.
fn enumerate_fold<A, I, V, M>(spec: &ModelSpec, init: I, visit: V, mut merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &TypedGraph, f64) + Sync,
    M: FnMut(&mut A, A),
{
    check_budget(spec)?;
    let n = spec.n();
    let m = spec.num_types();
    let assignments = (m as u64).pow(n as u32);
    let pairs: Vec<(u32, u32)> = (0..n as u32).flat_map(|i| (i + 1..n as u32).map(move |j| (i, j))).collect();
    let eta = spec.eta().weights();
    let partials = (0..assignments)
        .into_par_iter()
        .map(|index| -> Result<A> {
            let mut acc = init();
            let mut rest = index;
            let types: Vec<u32> = (0..n)
                .map(|_| {
                    let t = (rest % m as u64) as u32;
                    rest /= m as u64;
                    t
                })
                .collect();
            let type_weight: f64 = types.iter().map(|&t| eta[t as usize]).product();
            if type_weight == 0.0 {
                return Ok(acc);
            }
            let probs: Vec<f64> = pairs.iter().map(|&(i, j)| edge_probability(spec, types[i as usize] as usize, types[j as usize] as usize)).collect();
            for mask in 0u64..1 << pairs.len() {
                let mut weight = type_weight;
                let mut edges = Vec::new();
                for (k, &p) in probs.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        weight *= p;
                        edges.push(pairs[k]);
                    } else {
                        weight *= 1.0 - p;
                    }
                }
                if weight == 0.0 {
                    continue;
                }
                let graph = TypedGraph::new(m, spec.is_symmetric(), types.clone(), edges)?;
                visit(&mut acc, &graph, weight);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<A>>>()?;
    let mut parts = partials.into_iter();
    let mut total = parts.next().unwrap_or_else(&init);
    for part in parts {
        merge(&mut total, part);
    }
    Ok(total)
}

/// Exact pushforward law of an observable.
pub fn enumerate_ensemble(spec: &ModelSpec, kind: ObservableKind) -> Result<EnsembleDistribution> {
    let law = enumerate_fold(
        spec,
        BTreeMap::<ObservableValue, NeumaierSum>::new,
        |acc, graph, w| acc.entry(observe(graph, kind)).or_default().add(w),
        |acc, part| {
            for (v, s) in part {
                acc.entry(v).or_default().merge(&s);
            }
        },
    )?;
    let support = law.into_iter().map(|(v, s)| (v, s.value())).filter(|(_, p)| *p > 0.0).collect();
    Ok(EnsembleDistribution { kind, support })
}

/// Exact expectation of a function of the graph.
pub fn enumerate_expectation<F>(spec: &ModelSpec, f: F) -> Result<f64>
where
    F: Fn(&TypedGraph) -> f64 + Sync,
{
    let sum = enumerate_fold(spec, NeumaierSum::new, |acc, graph, w| acc.add(w * f(graph)), |acc, part| acc.merge(&part))?;
    Ok(sum.value())
}

/// Exact probability of an event.
pub fn enumerate_probability<F>(spec: &ModelSpec, event: F) -> Result<f64>
where
    F: Fn(&TypedGraph) -> bool + Sync,
{
    enumerate_expectation(spec, |g| if event(g) { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{ConnectivityKernel, ProbabilityMeasure, TypeAlphabet};

    fn two_type(n: usize) -> ModelSpec {
        ModelSpec::new(
            TypeAlphabet::numbered(2).unwrap(),
            ProbabilityMeasure::new(vec![0.5, 0.5]).unwrap(),
            ConnectivityKernel::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap(),
            n,
            true,
        )
        .unwrap()
    }

    #[test]
    fn single_site_degree_law() {
        let law = enumerate_ensemble(&ModelSpec::single_type(2.0, 1).unwrap(), ObservableKind::Degree).unwrap();
        assert_eq!(law.support, vec![(ObservableValue(vec![1]), 1.0)]);
    }

    #[test]
    fn two_sites_one_type() {
        let law = enumerate_ensemble(&ModelSpec::single_type(2.0, 2).unwrap(), ObservableKind::Degree).unwrap();
        assert_eq!(law.support, vec![(ObservableValue(vec![0, 2]), 0.5), (ObservableValue(vec![2]), 0.5)]);
    }

    #[test]
    fn four_sites_normalized() {
        let spec = two_type(4);
        assert_eq!(enumeration_budget(&spec), 1024.0);
        for kind in ObservableKind::ALL {
            let law = enumerate_ensemble(&spec, kind).unwrap();
            assert!((law.total() - 1.0).abs() < 1e-12, "{kind}");
            assert!(law.support.iter().all(|(_, p)| *p > 0.0));
        }
    }

    #[test]
    fn budget_refusal_reports_requirement() {
        let spec = ModelSpec::single_type(1.0, 8).unwrap();
        match enumerate_ensemble(&spec, ObservableKind::Degree) {
            Err(Error::Budget { required, limit }) => {
                assert_eq!(required, 2f64.powi(28));
                assert_eq!(limit, ENUMERATION_BUDGET);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn expected_edge_count_matches_pair_probabilities() {
        let spec = ModelSpec::single_type(2.0, 5).unwrap();
        let mean = enumerate_expectation(&spec, |g| g.edge_count() as f64).unwrap();
        assert!((mean - 10.0 * 2.0 / 7.0).abs() < 1e-12);
        let empty = enumerate_probability(&spec, |g| g.edge_count() == 0).unwrap();
        assert!((empty - (5.0f64 / 7.0).powi(10)).abs() < 1e-15);
    }

    #[test]
    fn observable_names_round_trip() {
        for kind in ObservableKind::ALL {
            assert_eq!(kind.name().parse::<ObservableKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<ObservableKind>().is_err());
    }

    #[test]
    fn tv_distance_to_self_is_zero() {
        let law = enumerate_ensemble(&two_type(3), ObservableKind::PairMeasure).unwrap();
        let map: BTreeMap<_, _> = law.support.iter().cloned().collect();
        assert_eq!(law.tv_distance(&map), 0.0);
        assert_eq!(law.tv_distance(&BTreeMap::new()), 0.5 * law.total());
    }
}
