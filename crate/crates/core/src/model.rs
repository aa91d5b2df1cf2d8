//! Multitype random network ensemble and its samplers.
//!
//! Sites `0..n` receive i.i.d. types from the type law; each unordered pair of
//! distinct sites is linked independently with probability
//! `p_n(a, b) = c(a, b) / (n + c(a, b))`, the stationary law of the two-state
//! formation/destruction chain under the scaling `kappa_n / ell_n = c / n`.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::measure::{same_alphabet, ConnectivityKernel, ProbabilityMeasure, TestFunction, TypeAlphabet};
use crate::sum::compensated_sum;

/// Parameters of the ensemble at a fixed number of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    alphabet: TypeAlphabet,
    eta: ProbabilityMeasure,
    kernel: ConnectivityKernel,
    n: usize,
    symmetric: bool,
}

impl ModelSpec {
    pub fn new(alphabet: TypeAlphabet, eta: ProbabilityMeasure, kernel: ConnectivityKernel, n: usize, symmetric: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("site count n must be at least 1".into()));
        }
        same_alphabet(alphabet.len(), eta.len(), "alphabet", "type law")?;
        same_alphabet(alphabet.len(), kernel.alphabet_len(), "alphabet", "kernel")?;
        if symmetric && !kernel.is_symmetric() {
            return Err(Error::InvalidModel("symmetric model requires a symmetric kernel".into()));
        }
        Ok(Self { alphabet, eta, kernel, n, symmetric })
    }

    /// Single-type ensemble with kernel value `c` (an Erdős–Rényi graph with `p = c / (n + c)`).
    pub fn single_type(c: f64, n: usize) -> Result<Self> {
        Self::new(
            TypeAlphabet::numbered(1)?,
            ProbabilityMeasure::new(vec![1.0])?,
            ConnectivityKernel::constant(1, c)?,
            n,
            true,
        )
    }

    /// The same ensemble at a different site count.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.alphabet.clone(), self.eta.clone(), self.kernel.clone(), n, self.symmetric)
    }

    pub fn alphabet(&self) -> &TypeAlphabet {
        &self.alphabet
    }

    pub fn eta(&self) -> &ProbabilityMeasure {
        &self.eta
    }

    pub fn kernel(&self) -> &ConnectivityKernel {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_types(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Kernel value governing the pair `(i, j)`, `i < j`, with types `(type_i, type_j)`.
    ///
    /// Edges are unordered; for an asymmetric kernel the lower-indexed site supplies the row.
    pub fn pair_kernel(&self, type_i: usize, type_j: usize) -> f64 {
        self.kernel.get(type_i, type_j)
    }

    /// Number of unordered site pairs, `n (n - 1) / 2`.
    pub fn pair_count(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1) / 2
    }
}

/// Link probability `c(a, b) / (n + c(a, b))` between a site of type `a` and a later site of type `b`.
pub fn edge_probability(spec: &ModelSpec, a: usize, b: usize) -> f64 {
    let c = spec.pair_kernel(a, b);
    c / (spec.n as f64 + c)
}

/// Tilted link probability: the odds of `p_n(a, b)` multiplied by `e^{g(a, b)}`.
///
/// Written as `e^g c / (e^g c + n)`, which reduces bitwise to [`edge_probability`] at `g = 0`.
pub fn tilted_edge_probability(spec: &ModelSpec, g: &TestFunction, a: usize, b: usize) -> Result<f64> {
    let c = spec.pair_kernel(a, b);
    let scaled = g.get(a, b).exp() * c;
    if !scaled.is_finite() {
        return Err(Error::Evaluation(format!("exp(g) * c overflows for pair ({a},{b})")));
    }
    Ok(scaled / (scaled + spec.n as f64))
}

/// Reproducible random stream: a ChaCha8 generator keyed by `seed` on stream `stream`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub seed: u64,
    pub stream: u64,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Typed simple graph on sites `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedGraph {
    num_types: usize,
    symmetric: bool,
    types: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

impl TypedGraph {
    /// Validates and canonicalizes: edges are stored as sorted `(i, j)` with `i < j`.
    pub fn new(num_types: usize, symmetric: bool, types: Vec<u32>, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        let n = types.len();
        if n == 0 {
            return Err(Error::InvalidModel("graph must have at least one site".into()));
        }
        if let Some(t) = types.iter().find(|&&t| t as usize >= num_types) {
            return Err(Error::InvalidModel(format!("site type {t} outside alphabet of size {num_types}")));
        }
        for e in edges.iter_mut() {
            if e.0 == e.1 {
                return Err(Error::InvalidModel(format!("self-loop at site {}", e.0)));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            if e.1 as usize >= n {
                return Err(Error::InvalidModel(format!("edge endpoint {} outside [0, {n})", e.1)));
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel("duplicate edge".into()));
        }
        Ok(Self { num_types, symmetric, types, edges })
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn types(&self) -> &[u32] {
        &self.types
    }

    pub fn type_of(&self, site: usize) -> usize {
        self.types[site] as usize
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n()];
        for &(i, j) in &self.edges {
            d[i as usize] += 1;
            d[j as usize] += 1;
        }
        d
    }

    /// Edge-list text: header `n m symmetric` (`m` = alphabet size, flag `true`/`false`),
    /// then one `i label` line per site and one `i j` line per edge, sites numbered from 0.
    pub fn to_edge_list(&self, alphabet: &TypeAlphabet) -> Result<String> {
        same_alphabet(self.num_types, alphabet.len(), "graph", "alphabet")?;
        let mut out = String::with_capacity(16 * (self.n() + self.edges.len()));
        let _ = writeln!(out, "{} {} {}", self.n(), self.num_types, self.symmetric);
        for (i, &t) in self.types.iter().enumerate() {
            let _ = writeln!(out, "{i} {}", alphabet.label(t as usize));
        }
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        Ok(out)
    }

    /// Parses the format written by [`TypedGraph::to_edge_list`].
    pub fn from_edge_list(text: &str, alphabet: &TypeAlphabet) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (ln, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        let [n, m, sym] = fields[..] else {
            return Err(perr(ln, format!("expected `n m symmetric`, got {header:?}")));
        };
        let n: usize = n.parse().map_err(|e| perr(ln, format!("site count: {e}")))?;
        let m: usize = m.parse().map_err(|e| perr(ln, format!("alphabet size: {e}")))?;
        let symmetric = match sym {
            "true" => true,
            "false" => false,
            other => return Err(perr(ln, format!("symmetric flag must be true or false, got {other:?}"))),
        };
        if m != alphabet.len() {
            return Err(perr(ln, format!("header declares {m} labels, alphabet has {}", alphabet.len())));
        }
        let mut types = Vec::with_capacity(n);
        for expected in 0..n {
            let (ln, line) = lines.next().ok_or_else(|| perr(expected + 2, "missing site line".into()))?;
            let (i, label) = line.split_once(' ').ok_or_else(|| perr(ln, format!("expected `i label`, got {line:?}")))?;
            if i.parse::<usize>().ok() != Some(expected) {
                return Err(perr(ln, format!("expected site {expected}, got {i:?}")));
            }
            let t = alphabet.index_of(label).ok_or_else(|| perr(ln, format!("unknown label {label:?}")))?;
            types.push(t as u32);
        }
        let mut edges = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for (ln, line) in lines {
            let (i, j) = line.split_once(' ').ok_or_else(|| perr(ln, format!("expected `i j`, got {line:?}")))?;
            let i: u32 = i.parse().map_err(|e| perr(ln, format!("edge endpoint: {e}")))?;
            let j: u32 = j.parse().map_err(|e| perr(ln, format!("edge endpoint: {e}")))?;
            if i >= j || last.is_some_and(|l| l >= (i, j)) {
                return Err(perr(ln, format!("edges must be listed as increasing pairs i < j, got {i} {j}")));
            }
            last = Some((i, j));
            edges.push((i, j));
        }
        Self::new(m, symmetric, types, edges)
    }
}

/// Draws `n` i.i.d. site types from the type law.
pub fn sample_types<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Vec<u32> {
    let w = spec.eta.weights();
    let mut cdf = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    for &x in w {
        acc += x;
        cdf.push(acc);
    }
    // Rounding can leave the last cumulative weight below 1; absorb it into the last charged type.
    let last = w.iter().rposition(|&x| x > 0.0).unwrap_or(0);
    (0..spec.n)
        .map(|_| {
            let u: f64 = rng.gen();
            cdf.iter().position(|&c| u < c).map_or(last, |t| t) as u32
        })
        .collect()
}

/// Samples the graph given site types.
pub fn sample_graph<R: Rng + ?Sized>(spec: &ModelSpec, types: &[u32], rng: &mut R) -> Result<TypedGraph> {
    let m = spec.num_types();
    let probs: Vec<f64> = (0..m * m).map(|i| edge_probability(spec, i / m, i % m)).collect();
    sample_with_probabilities(spec, types, &probs, rng)
}

/// Samples the graph under the exponentially tilted law with odds multiplied by `e^g`.
pub fn sample_tilted_graph<R: Rng + ?Sized>(spec: &ModelSpec, types: &[u32], g: &TestFunction, rng: &mut R) -> Result<TypedGraph> {
    let m = spec.num_types();
    same_alphabet(m, g.alphabet_len(), "model", "test function")?;
    let probs = (0..m * m)
        .map(|i| tilted_edge_probability(spec, g, i / m, i % m))
        .collect::<Result<Vec<f64>>>()?;
    sample_with_probabilities(spec, types, &probs, rng)
}

/// Types then graph from one stream.
pub fn sample_network(spec: &ModelSpec, stream: SeededRng) -> Result<TypedGraph> {
    let mut rng = stream.rng();
    let types = sample_types(spec, &mut rng);
    sample_graph(spec, &types, &mut rng)
}

/// For each site `i` and each type `b`, the later sites of type `b` all link to `i` with one
/// probability, so they are visited by geometric skipping in `O(n m + |E|)` time.
fn sample_with_probabilities<R: Rng + ?Sized>(spec: &ModelSpec, types: &[u32], probs: &[f64], rng: &mut R) -> Result<TypedGraph> {
    let n = spec.n;
    let m = spec.num_types();
    if types.len() != n {
        return Err(Error::Structural(format!("{} site types supplied for n = {n}", types.len())));
    }
    let mut by_type: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (i, &t) in types.iter().enumerate() {
        let t = t as usize;
        if t >= m {
            return Err(Error::InvalidModel(format!("site type {t} outside alphabet of size {m}")));
        }
        by_type[t].push(i as u32);
    }
    let log_miss: Vec<f64> = probs.iter().map(|&p| (-p).ln_1p()).collect();
    let mut cursor = vec![0usize; m];
    let mut edges = Vec::new();
    let mut row = Vec::new();
    for (i, &ti) in types.iter().enumerate() {
        let ti = ti as usize;
        cursor[ti] += 1;
        row.clear();
        for b in 0..m {
            let p = probs[ti * m + b];
            if p <= 0.0 {
                continue;
            }
            let later = &by_type[b][cursor[b]..];
            if later.is_empty() {
                continue;
            }
            if p >= 1.0 {
                row.extend(later.iter().map(|&j| (i as u32, j)));
                continue;
            }
            let lq = log_miss[ti * m + b];
            let mut pos: usize = 0;
            loop {
                let u: f64 = rng.gen();
                let skip = ((1.0 - u).ln() / lq).floor();
                if skip >= (later.len() - pos) as f64 {
                    break;
                }
                pos += skip as usize;
                row.push((i as u32, later[pos]));
                pos += 1;
                if pos >= later.len() {
                    break;
                }
            }
        }
        row.sort_unstable();
        edges.extend_from_slice(&row);
    }
    Ok(TypedGraph { num_types: m, symmetric: spec.symmetric, types: types.to_vec(), edges })
}

/// Number of site pairs `i < j` with `(type_i, type_j) = (a, b)`, row-major over `(a, b)`.
pub(crate) fn oriented_pair_counts(types: &[u32], m: usize) -> Vec<u64> {
    let mut seen = vec![0u64; m];
    let mut counts = vec![0u64; m * m];
    for &t in types {
        let t = t as usize;
        for a in 0..m {
            counts[a * m + t] += seen[a];
        }
        seen[t] += 1;
    }
    counts
}

/// Number of edges `(i, j)`, `i < j`, with `(type_i, type_j) = (a, b)`.
pub(crate) fn oriented_edge_counts(graph: &TypedGraph) -> Vec<u64> {
    let m = graph.num_types;
    let mut counts = vec![0u64; m * m];
    for &(i, j) in &graph.edges {
        counts[graph.type_of(i as usize) * m + graph.type_of(j as usize)] += 1;
    }
    counts
}

/// Exact `log dP/dP~` of a graph, where `P~` uses the tilted link probabilities.
///
/// Per pair of types the edge term is `log p - log p~ = log(e^g c + n) - log(n + c) - g`
/// and the non-edge term `log(1 - p) - log(1 - p~) = log(e^g c + n) - log(n + c)`.
pub fn log_rn_derivative(spec: &ModelSpec, graph: &TypedGraph, g: &TestFunction) -> Result<f64> {
    let m = spec.num_types();
    same_alphabet(m, graph.num_types, "model", "graph")?;
    same_alphabet(m, g.alphabet_len(), "model", "test function")?;
    if graph.n() != spec.n {
        return Err(Error::Structural(format!("graph has {} sites, model has n = {}", graph.n(), spec.n)));
    }
    let n = spec.n as f64;
    let pairs = oriented_pair_counts(&graph.types, m);
    let edges = oriented_edge_counts(graph);
    let mut terms = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let idx = a * m + b;
            let c = spec.pair_kernel(a, b);
            let gv = g.get(a, b);
            if c == 0.0 {
                if edges[idx] > 0 {
                    return Err(Error::Domain(format!("graph links types ({a},{b}) whose kernel entry is zero")));
                }
                continue;
            }
            let tilt = gv.exp_m1() * c;
            if !tilt.is_finite() {
                return Err(Error::Evaluation(format!("exp(g) overflows for pair ({a},{b})")));
            }
            let non_edge = (tilt / (n + c)).ln_1p();
            terms.push(pairs[idx] as f64 * non_edge - edges[idx] as f64 * gv);
        }
    }
    Ok(compensated_sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_type(c: [[f64; 2]; 2], n: usize, symmetric: bool) -> ModelSpec {
        ModelSpec::new(
            TypeAlphabet::numbered(2).unwrap(),
            ProbabilityMeasure::new(vec![0.5, 0.5]).unwrap(),
            ConnectivityKernel::from_rows(&[c[0].to_vec(), c[1].to_vec()]).unwrap(),
            n,
            symmetric,
        )
        .unwrap()
    }

    #[test]
    fn edge_probability_examples() {
        let s = ModelSpec::single_type(2.0, 2).unwrap();
        assert_eq!(edge_probability(&s, 0, 0), 0.5);
        let s = ModelSpec::single_type(0.0, 17).unwrap();
        assert_eq!(edge_probability(&s, 0, 0), 0.0);
        let s = ModelSpec::single_type(2.0, 1_000_000).unwrap();
        let p = edge_probability(&s, 0, 0);
        assert!((p - 2e-6).abs() < 1e-11);
        assert!((1e6 * p - 2.0).abs() < 1e-5);
    }

    #[test]
    fn symmetric_model_rejects_asymmetric_kernel() {
        let r = ModelSpec::new(
            TypeAlphabet::numbered(2).unwrap(),
            ProbabilityMeasure::uniform(2).unwrap(),
            ConnectivityKernel::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap(),
            10,
            true,
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
        assert!(ModelSpec::single_type(1.0, 0).is_err());
    }

    #[test]
    fn types_point_mass_and_determinism() {
        let spec = ModelSpec::new(
            TypeAlphabet::numbered(3).unwrap(),
            ProbabilityMeasure::point_mass(3, 1).unwrap(),
            ConnectivityKernel::constant(3, 1.0).unwrap(),
            500,
            true,
        )
        .unwrap();
        let t = sample_types(&spec, &mut SeededRng::new(1, 0).rng());
        assert!(t.iter().all(|&x| x == 1));

        let spec = two_type([[1.0, 1.0], [1.0, 1.0]], 1000, true);
        let a = sample_types(&spec, &mut SeededRng::new(9, 3).rng());
        let b = sample_types(&spec, &mut SeededRng::new(9, 3).rng());
        let c = sample_types(&spec, &mut SeededRng::new(9, 4).rng());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn type_frequencies_match_law() {
        let n = 100_000;
        let spec = two_type([[1.0, 1.0], [1.0, 1.0]], n, true);
        let t = sample_types(&spec, &mut SeededRng::new(42, 0).rng());
        let freq = t.iter().filter(|&&x| x == 0).count() as f64 / n as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn zero_kernel_gives_empty_graph() {
        let spec = ModelSpec::single_type(0.0, 300).unwrap();
        let g = sample_network(&spec, SeededRng::new(5, 0)).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn complete_graph_when_probability_one() {
        let spec = ModelSpec::single_type(2.0, 5).unwrap();
        let types = vec![0; 5];
        let probs = vec![1.0];
        let g = sample_with_probabilities(&spec, &types, &probs, &mut SeededRng::new(0, 0).rng()).unwrap();
        assert_eq!(g.edge_count(), 10);
    }

    #[test]
    fn edge_density_single_type() {
        let n = 10_000;
        let spec = ModelSpec::single_type(2.0, n).unwrap();
        let reps = 20;
        let per_site: Vec<f64> = (0..reps)
            .map(|r| sample_network(&spec, SeededRng::new(11, r)).unwrap().edge_count() as f64 / n as f64)
            .collect();
        let mean = per_site.iter().sum::<f64>() / reps as f64;
        let var = per_site.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let expected = (n as f64 - 1.0) / (n as f64 + 2.0);
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} expected {expected} se {se}");
    }

    #[test]
    fn graph_sampling_is_deterministic() {
        let spec = two_type([[2.0, 0.5], [0.5, 3.0]], 2000, true);
        let a = sample_network(&spec, SeededRng::new(3, 7)).unwrap();
        let b = sample_network(&spec, SeededRng::new(3, 7)).unwrap();
        assert_eq!(a, b);
        let c = sample_network(&spec, SeededRng::new(3, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_tilt_is_bitwise_identical() {
        let spec = two_type([[2.0, 0.5], [0.5, 3.0]], 1500, true);
        let types = sample_types(&spec, &mut SeededRng::new(1, 1).rng());
        let plain = sample_graph(&spec, &types, &mut SeededRng::new(2, 2).rng()).unwrap();
        let tilted = sample_tilted_graph(&spec, &types, &TestFunction::zero(2), &mut SeededRng::new(2, 2).rng()).unwrap();
        assert_eq!(plain, tilted);
    }

    #[test]
    fn tilted_mean_degree_doubles() {
        let n = 10_000;
        let spec = ModelSpec::single_type(2.0, n).unwrap();
        let g = TestFunction::constant(1, 2f64.ln()).unwrap();
        let types = vec![0; n];
        let reps = 10;
        let mean: f64 = (0..reps)
            .map(|r| {
                let graph = sample_tilted_graph(&spec, &types, &g, &mut SeededRng::new(8, r).rng()).unwrap();
                2.0 * graph.edge_count() as f64 / n as f64
            })
            .sum::<f64>()
            / reps as f64;
        // Exact mean degree (n - 1) * 4 / (4 + n).
        let exact = (n as f64 - 1.0) * 4.0 / (4.0 + n as f64);
        assert!((mean - exact).abs() < 0.03, "mean degree {mean}");
        assert!((mean - 4.0).abs() < 0.04);
    }

    #[test]
    fn strongly_negative_tilt_empties_graph() {
        let spec = ModelSpec::single_type(2.0, 1000).unwrap();
        let g = TestFunction::constant(1, -1000.0).unwrap();
        let graph = sample_tilted_graph(&spec, &vec![0; 1000], &g, &mut SeededRng::new(1, 0).rng()).unwrap();
        assert_eq!(graph.edge_count(), 0);
        let g = TestFunction::constant(1, 1000.0).unwrap();
        assert!(matches!(tilted_edge_probability(&spec, &g, 0, 0), Err(Error::Evaluation(_))));
    }

    #[test]
    fn log_rn_zero_tilt_and_hand_example() {
        let spec = two_type([[2.0, 0.5], [0.5, 3.0]], 200, true);
        let graph = sample_network(&spec, SeededRng::new(4, 0)).unwrap();
        assert_eq!(log_rn_derivative(&spec, &graph, &TestFunction::zero(2)).unwrap(), 0.0);

        let spec = ModelSpec::single_type(2.0, 2).unwrap();
        let graph = TypedGraph::new(1, true, vec![0, 0], vec![(0, 1)]).unwrap();
        let g = TestFunction::constant(1, 2f64.ln()).unwrap();
        let p = edge_probability(&spec, 0, 0);
        let pt = tilted_edge_probability(&spec, &g, 0, 0).unwrap();
        let direct = (p / pt).ln();
        let lr = log_rn_derivative(&spec, &graph, &g).unwrap();
        assert!((lr - 0.75f64.ln()).abs() < 1e-15);
        assert!((lr - direct).abs() < 1e-15);
    }

    #[test]
    fn log_rn_matches_pairwise_product() {
        // Brute-force pairwise sum over all C(n, 2) pairs.
        let spec = two_type([[2.0, 0.5], [1.5, 3.0]], 40, false);
        let g = TestFunction::from_rows(&[vec![0.3, -0.7], vec![1.1, 0.2]]).unwrap();
        let graph = sample_network(&spec, SeededRng::new(12, 0)).unwrap();
        let edges: std::collections::HashSet<(u32, u32)> = graph.edges().iter().copied().collect();
        let mut brute = 0.0;
        for i in 0..40u32 {
            for j in (i + 1)..40 {
                let (a, b) = (graph.type_of(i as usize), graph.type_of(j as usize));
                let p = edge_probability(&spec, a, b);
                let pt = tilted_edge_probability(&spec, &g, a, b).unwrap();
                brute += if edges.contains(&(i, j)) { p.ln() - pt.ln() } else { (1.0 - p).ln() - (1.0 - pt).ln() };
            }
        }
        let lr = log_rn_derivative(&spec, &graph, &g).unwrap();
        assert!((lr - brute).abs() < 1e-10, "{lr} vs {brute}");
    }

    #[test]
    fn asymmetric_orientation_uses_lower_index_row() {
        let spec = two_type([[0.0, 1e9], [0.0, 0.0]], 2, false);
        // Site 0 of type a1, site 1 of type a2: kernel (a1, a2) is huge, so the edge appears.
        let g = sample_graph(&spec, &[0, 1], &mut SeededRng::new(0, 0).rng()).unwrap();
        assert_eq!(g.edge_count(), 1);
        // Reversed types use kernel (a2, a1) = 0.
        let g = sample_graph(&spec, &[1, 0], &mut SeededRng::new(0, 0).rng()).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn graph_validation() {
        assert!(TypedGraph::new(1, true, vec![0, 0], vec![(0, 0)]).is_err());
        assert!(TypedGraph::new(1, true, vec![0, 0], vec![(0, 2)]).is_err());
        assert!(TypedGraph::new(1, true, vec![0, 0], vec![(0, 1), (1, 0)]).is_err());
        assert!(TypedGraph::new(1, true, vec![0, 1], vec![]).is_err());
        let g = TypedGraph::new(1, true, vec![0, 0, 0], vec![(2, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2)]);
    }

    #[test]
    fn edge_list_round_trip() {
        let alphabet = TypeAlphabet::new(["red", "blue"]).unwrap();
        let spec = ModelSpec::new(
            alphabet.clone(),
            ProbabilityMeasure::new(vec![0.3, 0.7]).unwrap(),
            ConnectivityKernel::from_rows(&[vec![2.0, 1.0], vec![1.0, 4.0]]).unwrap(),
            60,
            true,
        )
        .unwrap();
        let g = sample_network(&spec, SeededRng::new(2, 0)).unwrap();
        let text = g.to_edge_list(&alphabet).unwrap();
        assert!(text.starts_with("60 2 true\n0 "));
        let back = TypedGraph::from_edge_list(&text, &alphabet).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_edge_list(&alphabet).unwrap(), text);
    }

    #[test]
    fn edge_list_rejects_bad_input() {
        let alphabet = TypeAlphabet::new(["x"]).unwrap();
        assert!(TypedGraph::from_edge_list("2 1 true\n0 x\n1 y\n", &alphabet).is_err());
        assert!(TypedGraph::from_edge_list("2 1 maybe\n0 x\n1 x\n", &alphabet).is_err());
        assert!(TypedGraph::from_edge_list("2 1 true\n0 x\n1 x\n1 0\n", &alphabet).is_err());
        assert!(TypedGraph::from_edge_list("2 2 true\n0 x\n1 x\n", &alphabet).is_err());
        let e = TypedGraph::from_edge_list("2 1 true\n0 x\n", &alphabet).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
    }
}
