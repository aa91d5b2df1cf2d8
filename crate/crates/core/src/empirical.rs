//! Empirical measures of a typed graph.
//!
//! Counts are accumulated as integers with denominator `n` so that the
//! identities between the measures hold exactly; the `*_measure` functions
//! convert to floating-point masses at the end.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::measure::{same_alphabet, PairMeasure, ProbabilityMeasure, TypeAlphabet};
use crate::model::TypedGraph;
use crate::sum::{compensated_sum, NeumaierSum};

/// Default cap on neighbour counts and degrees.
pub const DEFAULT_CAP: usize = 50;

/// Tolerance for [`consistency_check`].
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Number of neighbours of each type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountProfile(pub Vec<u32>);

impl CountProfile {
    pub fn zero(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&x| x as u64).sum()
    }

    pub fn exceeds(&self, cap: usize) -> bool {
        self.0.iter().any(|&x| x as usize > cap)
    }
}

impl std::fmt::Display for CountProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(";"))
    }
}

/// Probability measure on (type, neighbour-count profile) with profiles above a cap pooled per type.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourhoodMeasure {
    num_types: usize,
    cap: usize,
    masses: BTreeMap<(usize, CountProfile), f64>,
    overflow: Vec<f64>,
}

impl NeighbourhoodMeasure {
    /// Builds from explicit masses; entries whose profile exceeds `cap` are moved to the overflow bucket.
    pub fn new(num_types: usize, cap: usize, entries: impl IntoIterator<Item = ((usize, CountProfile), f64)>, overflow: Vec<f64>) -> Result<Self> {
        if cap < 1 {
            return Err(Error::Domain("profile cap must be at least 1".into()));
        }
        if overflow.len() != num_types {
            return Err(Error::Structural(format!("overflow has {} entries for {num_types} types", overflow.len())));
        }
        let mut out = Self { num_types, cap, masses: BTreeMap::new(), overflow };
        for ((a, profile), mass) in entries {
            if a >= num_types || profile.0.len() != num_types {
                return Err(Error::Structural(format!("profile entry ({a}, {profile}) does not match {num_types} types")));
            }
            if !mass.is_finite() || mass < 0.0 {
                return Err(Error::Domain(format!("mass {mass} at ({a}, {profile})")));
            }
            if profile.exceeds(cap) {
                out.overflow[a] += mass;
            } else {
                *out.masses.entry((a, profile)).or_insert(0.0) += mass;
            }
        }
        if out.overflow.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Domain("overflow masses must be finite and nonnegative".into()));
        }
        let total = out.total();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("neighbourhood masses sum to {total}, expected 1")));
        }
        Ok(out)
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Masses of the profiles within the cap, in `(type, profile)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&(usize, CountProfile), &f64)> {
        self.masses.iter()
    }

    pub fn mass(&self, a: usize, profile: &CountProfile) -> f64 {
        self.masses.get(&(a, profile.clone())).copied().unwrap_or(0.0)
    }

    pub fn overflow(&self) -> &[f64] {
        &self.overflow
    }

    pub fn total_overflow(&self) -> f64 {
        compensated_sum(self.overflow.iter().copied())
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.values().copied().chain(self.overflow.iter().copied()))
    }

    /// The type marginal `omega_1(a) = sum_l omega(a, l)`, overflow included.
    pub fn type_marginal(&self) -> Vec<f64> {
        let mut acc = vec![NeumaierSum::new(); self.num_types];
        for ((a, _), &w) in &self.masses {
            acc[*a].add(w);
        }
        for (a, &w) in self.overflow.iter().enumerate() {
            acc[a].add(w);
        }
        acc.iter().map(NeumaierSum::value).collect()
    }

    /// Pair mass seen from the profiles: `(a, b) -> sum_l l(b) omega(a, l)`, overflow excluded.
    pub fn profile_pair_mass(&self) -> Vec<f64> {
        let m = self.num_types;
        let mut acc = vec![NeumaierSum::new(); m * m];
        for ((a, profile), &w) in &self.masses {
            for (b, &l) in profile.0.iter().enumerate() {
                if l > 0 {
                    acc[a * m + b].add(l as f64 * w);
                }
            }
        }
        acc.iter().map(NeumaierSum::value).collect()
    }
}

/// Pmf on `0..=k_max` plus the mass beyond `k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    pmf: Vec<f64>,
    overflow: f64,
}

impl DegreeDistribution {
    pub fn new(pmf: Vec<f64>, overflow: f64) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::Structural("degree pmf needs at least the k = 0 entry".into()));
        }
        if pmf.iter().chain([&overflow]).any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Domain("degree masses must be finite and nonnegative".into()));
        }
        let total = compensated_sum(pmf.iter().copied().chain([overflow]));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("degree masses sum to {total}, expected 1")));
        }
        Ok(Self { pmf, overflow })
    }

    pub fn point_mass(k: usize, k_max: usize) -> Result<Self> {
        let mut pmf = vec![0.0; k_max + 1];
        if k <= k_max {
            pmf[k] = 1.0;
            Self::new(pmf, 0.0)
        } else {
            Self::new(pmf, 1.0)
        }
    }

    pub fn k_max(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn get(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn overflow(&self) -> f64 {
        self.overflow
    }

    /// `sum k d(k)`; infinite when any mass sits beyond the cap.
    pub fn mean(&self) -> f64 {
        if self.overflow > 0.0 {
            return f64::INFINITY;
        }
        compensated_sum(self.pmf.iter().enumerate().map(|(k, &p)| k as f64 * p))
    }
}

/// Integer numerators of the cooperative measure, denominator `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooperativeCounts {
    pub num_types: usize,
    pub n: usize,
    pub symmetric: bool,
    pub numerators: Vec<u64>,
}

impl CooperativeCounts {
    pub fn total(&self) -> u64 {
        self.numerators.iter().sum()
    }

    pub fn to_measure(&self) -> Result<PairMeasure> {
        let n = self.n as f64;
        PairMeasure::new(self.num_types, self.numerators.iter().map(|&x| x as f64 / n).collect(), self.symmetric)
    }
}

pub fn type_counts(graph: &TypedGraph) -> Vec<u64> {
    let mut counts = vec![0u64; graph.num_types()];
    for &t in graph.types() {
        counts[t as usize] += 1;
    }
    counts
}

/// `L1(a)`: fraction of sites of type `a`.
pub fn type_measure(graph: &TypedGraph) -> Result<ProbabilityMeasure> {
    let n = graph.n() as f64;
    ProbabilityMeasure::new(type_counts(graph).into_iter().map(|c| c as f64 / n).collect())
}

/// Numerators of `L2`. Symmetric graphs count each edge once in each orientation;
/// asymmetric graphs count it twice in the orientation `(type_i, type_j)`, `i < j`.
/// Either way the numerators total `2 |E|`.
pub fn cooperative_counts(graph: &TypedGraph) -> CooperativeCounts {
    let m = graph.num_types();
    let mut numerators = vec![0u64; m * m];
    for &(i, j) in graph.edges() {
        let (a, b) = (graph.type_of(i as usize), graph.type_of(j as usize));
        if graph.is_symmetric() {
            numerators[a * m + b] += 1;
            numerators[b * m + a] += 1;
        } else {
            numerators[a * m + b] += 2;
        }
    }
    CooperativeCounts { num_types: m, n: graph.n(), symmetric: graph.is_symmetric(), numerators }
}

/// `L2`, with total mass `2 |E| / n`.
pub fn cooperative_measure(graph: &TypedGraph) -> Result<PairMeasure> {
    cooperative_counts(graph).to_measure()
}

/// Neighbour-count profile of every site.
pub fn site_profiles(graph: &TypedGraph) -> Vec<CountProfile> {
    let m = graph.num_types();
    let mut profiles = vec![CountProfile::zero(m); graph.n()];
    for &(i, j) in graph.edges() {
        let (i, j) = (i as usize, j as usize);
        profiles[i].0[graph.type_of(j)] += 1;
        profiles[j].0[graph.type_of(i)] += 1;
    }
    profiles
}

/// Number of sites at each (type, profile).
pub fn neighbourhood_counts(graph: &TypedGraph) -> BTreeMap<(usize, CountProfile), u64> {
    let mut counts = BTreeMap::new();
    for (i, profile) in site_profiles(graph).into_iter().enumerate() {
        *counts.entry((graph.type_of(i), profile)).or_insert(0) += 1;
    }
    counts
}

/// `M1(a, l)`: fraction of sites of type `a` whose neighbour counts are `l`.
pub fn neighbourhood_measure(graph: &TypedGraph, cap: usize) -> Result<NeighbourhoodMeasure> {
    let n = graph.n() as f64;
    let m = graph.num_types();
    NeighbourhoodMeasure::new(
        m,
        cap,
        neighbourhood_counts(graph).into_iter().map(|(k, c)| (k, c as f64 / n)),
        vec![0.0; m],
    )
}

/// Number of sites of each degree `0..n`.
pub fn degree_counts(graph: &TypedGraph) -> Vec<u64> {
    let mut counts = vec![0u64; graph.n()];
    for d in graph.degrees() {
        counts[d as usize] += 1;
    }
    counts
}

/// Empirical degree pmf truncated at `k_max`.
pub fn degree_measure(graph: &TypedGraph, k_max: usize) -> Result<DegreeDistribution> {
    let n = graph.n() as f64;
    let mut pmf = vec![0.0; k_max + 1];
    let mut overflow = 0u64;
    for (k, c) in degree_counts(graph).into_iter().enumerate() {
        if k <= k_max {
            pmf[k] = c as f64 / n;
        } else {
            overflow += c;
        }
    }
    DegreeDistribution::new(pmf, overflow as f64 / n)
}

/// Outcome of [`consistency_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consistency {
    pub consistent: bool,
    /// Largest violation over the checked identities.
    pub residual: f64,
}

/// Checks that a pair measure and a neighbourhood measure could come from the same graph.
///
/// Profiles see every edge from both ends, so they are compared with the symmetrization
/// `s(a, b) = (pi(a, b) + pi(b, a)) / 2`, which is `pi` itself when `pi` is symmetric.
/// Two identities are required within [`CONSISTENCY_TOL`]:
/// the profiles reproduce it, `sum_l l(b) omega(a, l) = s(a, b)`; and the second marginal of
/// `s` equals the degree-weighted type marginal `b -> sum_l |l| omega(b, l)`.
/// Mass in the overflow bucket cannot be accounted for and counts as a violation.
pub fn consistency_check(pi: &PairMeasure, omega: &NeighbourhoodMeasure) -> Result<Consistency> {
    let m = pi.alphabet_len();
    same_alphabet(m, omega.num_types(), "pair measure", "neighbourhood measure")?;
    let sym: Vec<f64> = (0..m * m).map(|i| 0.5 * (pi.get(i / m, i % m) + pi.get(i % m, i / m))).collect();
    let seen = omega.profile_pair_mass();
    let mut residual = omega.total_overflow();
    for (s, p) in seen.iter().zip(&sym) {
        residual = residual.max((s - p).abs());
    }
    for b in 0..m {
        let second = compensated_sum((0..m).map(|a| sym[a * m + b]));
        let weighted = compensated_sum((0..m).map(|a| seen[b * m + a]));
        residual = residual.max((second - weighted).abs());
    }
    Ok(Consistency { consistent: residual <= CONSISTENCY_TOL, residual })
}

/// CSV `label,mass`.
pub fn write_type_csv<W: Write>(alphabet: &TypeAlphabet, measure: &ProbabilityMeasure, out: W) -> Result<()> {
    same_alphabet(alphabet.len(), measure.len(), "alphabet", "measure")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "mass"])?;
    for (a, &x) in measure.weights().iter().enumerate() {
        w.write_record([alphabet.label(a), &x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV `label,label2,mass`.
pub fn write_pair_csv<W: Write>(alphabet: &TypeAlphabet, measure: &PairMeasure, out: W) -> Result<()> {
    let m = alphabet.len();
    same_alphabet(m, measure.alphabet_len(), "alphabet", "measure")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "label2", "mass"])?;
    for a in 0..m {
        for b in 0..m {
            w.write_record([alphabet.label(a), alphabet.label(b), &measure.get(a, b).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `label,profile,mass`; profiles are `;`-joined counts in alphabet order, and the
/// pooled mass above the cap is reported with profile `overflow`.
pub fn write_neighbourhood_csv<W: Write>(alphabet: &TypeAlphabet, measure: &NeighbourhoodMeasure, out: W) -> Result<()> {
    same_alphabet(alphabet.len(), measure.num_types(), "alphabet", "measure")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "profile", "mass"])?;
    for ((a, profile), &x) in measure.iter() {
        w.write_record([alphabet.label(*a), &profile.to_string(), &x.to_string()])?;
    }
    for (a, &x) in measure.overflow().iter().enumerate() {
        if x > 0.0 {
            w.write_record([alphabet.label(a), "overflow", &x.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `k,mass`, with the mass above the cap on a final `overflow` row.
pub fn write_degree_csv<W: Write>(measure: &DegreeDistribution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "mass"])?;
    for (k, &x) in measure.pmf().iter().enumerate() {
        w.write_record([k.to_string(), x.to_string()])?;
    }
    w.write_record(["overflow".to_string(), measure.overflow().to_string()])?;
    w.flush()?;
    Ok(())
}
