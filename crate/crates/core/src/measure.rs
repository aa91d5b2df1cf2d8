//! Finite-alphabet measures and the entropy functionals built on them.
//!
//! Every object here lives on a fixed alphabet of `m` group labels. Pair
//! objects (pair measures, kernels, test functions) are stored row-major as
//! `m * m` vectors indexed by `(a, b) -> a * m + b`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Absolute per-entry tolerance used when comparing measures.
pub const MEASURE_TOL: f64 = 1e-12;

/// Ordered set of group labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeAlphabet {
    labels: Vec<String>,
}

impl TypeAlphabet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidModel("alphabet must contain at least one label".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(Error::InvalidModel(format!("label {l:?} must be non-empty without whitespace")));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// Alphabet `a1, ..., am`.
    pub fn numbered(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| format!("a{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn check_entries(what: &str, xs: &[f64]) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Domain(format!("{what}: entry {i} is {x}, expected a finite nonnegative value")));
        }
    }
    Ok(())
}

fn square_len(what: &str, m: usize, len: usize) -> Result<()> {
    if len != m * m {
        return Err(Error::Structural(format!("{what}: expected {} entries for m = {m}, got {len}", m * m)));
    }
    Ok(())
}

/// Probability vector over the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMeasure {
    weights: Vec<f64>,
}

impl ProbabilityMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Structural("probability measure over an empty alphabet".into()));
        }
        check_entries("probability measure", &weights)?;
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(Error::Domain(format!("probability weights sum to {total}, expected 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m])
    }

    pub fn point_mass(m: usize, at: usize) -> Result<Self> {
        if at >= m {
            return Err(Error::Structural(format!("point mass at {at} outside alphabet of size {m}")));
        }
        let mut w = vec![0.0; m];
        w[at] = 1.0;
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, a: usize) -> f64 {
        self.weights[a]
    }
}

/// Nonnegative finite measure on ordered label pairs, not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMeasure {
    m: usize,
    weights: Vec<f64>,
    symmetric: bool,
}

impl PairMeasure {
    pub fn new(m: usize, weights: Vec<f64>, symmetric: bool) -> Result<Self> {
        square_len("pair measure", m, weights.len())?;
        check_entries("pair measure", &weights)?;
        if symmetric {
            for a in 0..m {
                for b in (a + 1)..m {
                    if weights[a * m + b] != weights[b * m + a] {
                        return Err(Error::Domain(format!("pair measure flagged symmetric but ({a},{b}) != ({b},{a})")));
                    }
                }
            }
        }
        Ok(Self { m, weights, symmetric })
    }

    pub fn zero(m: usize, symmetric: bool) -> Self {
        Self { m, weights: vec![0.0; m * m], symmetric }
    }

    /// Builds a pair measure from rows, setting the symmetric flag when the entries are symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let weights: Vec<f64> = rows.iter().flatten().copied().collect();
        square_len("pair measure", m, weights.len())?;
        let symmetric = (0..m).all(|a| (0..m).all(|b| weights[a * m + b] == weights[b * m + a]));
        Self::new(m, weights, symmetric)
    }

    pub fn alphabet_len(&self) -> usize {
        self.m
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.m + b]
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Total mass.
    pub fn mass(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.m, self.weights.iter().map(|w| w * factor).collect(), self.symmetric)
    }

    /// `a -> sum_b pi(a, b)`.
    pub fn first_marginal(&self) -> Vec<f64> {
        (0..self.m).map(|a| compensated_sum((0..self.m).map(|b| self.get(a, b)))).collect()
    }

    /// `b -> sum_a pi(a, b)`.
    pub fn second_marginal(&self) -> Vec<f64> {
        (0..self.m).map(|b| compensated_sum((0..self.m).map(|a| self.get(a, b)))).collect()
    }
}

/// The limiting ratio `c(a, b)` of link-formation to link-destruction intensity,
/// scaled so that `n * p_n(a, b) -> c(a, b)`. A zero entry means the pair never links.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityKernel {
    m: usize,
    c: Vec<f64>,
}

impl ConnectivityKernel {
    pub fn new(m: usize, c: Vec<f64>) -> Result<Self> {
        square_len("connectivity kernel", m, c.len())?;
        check_entries("connectivity kernel", &c)?;
        Ok(Self { m, c })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        Self::new(m, rows.iter().flatten().copied().collect())
    }

    pub fn constant(m: usize, c: f64) -> Result<Self> {
        Self::new(m, vec![c; m * m])
    }

    pub fn alphabet_len(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &[f64] {
        &self.c
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.c[a * self.m + b]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|a| ((a + 1)..self.m).all(|b| self.get(a, b) == self.get(b, a)))
    }
}

/// Real-valued function on ordered label pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    m: usize,
    g: Vec<f64>,
}

impl TestFunction {
    pub fn new(m: usize, g: Vec<f64>) -> Result<Self> {
        square_len("test function", m, g.len())?;
        if let Some((i, x)) = g.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::Domain(format!("test function entry {i} is {x}")));
        }
        Ok(Self { m, g })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        Self::new(m, rows.iter().flatten().copied().collect())
    }

    pub fn constant(m: usize, value: f64) -> Result<Self> {
        Self::new(m, vec![value; m * m])
    }

    pub fn zero(m: usize) -> Self {
        Self { m, g: vec![0.0; m * m] }
    }

    pub fn alphabet_len(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &[f64] {
        &self.g
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.g[a * self.m + b]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|a| ((a + 1)..self.m).all(|b| self.get(a, b) == self.get(b, a)))
    }

    /// `<g, pi> = sum g(a,b) pi(a,b)`.
    pub fn pair_with(&self, pi: &PairMeasure) -> Result<f64> {
        same_alphabet(self.m, pi.alphabet_len(), "test function", "pair measure")?;
        Ok(compensated_sum(self.g.iter().zip(pi.weights()).map(|(g, p)| g * p)))
    }
}

pub(crate) fn same_alphabet(left: usize, right: usize, lname: &str, rname: &str) -> Result<()> {
    if left != right {
        return Err(Error::Structural(format!("{lname} has alphabet size {left}, {rname} has {right}")));
    }
    Ok(())
}

/// `H(mu || nu) = sum_x mu(x) log(mu(x) / nu(x))` for nonnegative vectors on a common index set.
///
/// Uses `0 log(0/q) = 0`, and returns `+inf` when `mu` charges a point `nu` does not.
/// The masses need not be one; for equal total masses the result is nonnegative.
pub fn relative_entropy(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::Structural(format!("relative entropy over index sets of size {} and {}", mu.len(), nu.len())));
    }
    check_entries("relative entropy (first argument)", mu)?;
    check_entries("relative entropy (second argument)", nu)?;
    let mut terms = Vec::with_capacity(mu.len());
    for (&p, &q) in mu.iter().zip(nu) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push(p * (p / q).ln());
    }
    Ok(compensated_sum(terms))
}

/// The pair measure `(a, b) -> c(a, b) rho(a) rho(b)`.
pub fn kernel_product(kernel: &ConnectivityKernel, rho: &ProbabilityMeasure) -> Result<PairMeasure> {
    let m = kernel.alphabet_len();
    same_alphabet(m, rho.len(), "kernel", "type measure")?;
    let mut w = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            w.push(kernel.get(a, b) * (rho.get(a) * rho.get(b)));
        }
    }
    Ok(PairMeasure { m, weights: w, symmetric: kernel.is_symmetric() })
}

/// `x log x - x + 1` for `x >= 0`, accurate near `x = 1`.
fn poisson_deviance(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if (x - 1.0).abs() < 0.5 {
        let u = x - 1.0;
        x * u.ln_1p() - u
    } else {
        x * x.ln() - x + 1.0
    }
}

/// Kullback action `H(pi || K) + ||K|| - ||pi||` with `K = kernel_product(kernel, rho)`.
///
/// Evaluated entrywise as `sum K(a,b) phi(pi(a,b) / K(a,b))` with `phi(x) = x log x - x + 1`,
/// which makes every summand nonnegative. Returns `+inf` when `pi` charges a pair with `K = 0`.
pub fn kullback_action(pi: &PairMeasure, rho: &ProbabilityMeasure, kernel: &ConnectivityKernel) -> Result<f64> {
    same_alphabet(pi.alphabet_len(), kernel.alphabet_len(), "pair measure", "kernel")?;
    let k = kernel_product(kernel, rho)?;
    let mut terms = Vec::with_capacity(k.weights.len());
    for (&p, &q) in pi.weights().iter().zip(&k.weights) {
        if q == 0.0 {
            if p > 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        terms.push(q * poisson_deviance(p / q));
    }
    Ok(compensated_sum(terms))
}

/// Spectral potential `-<1 - e^g, K>` with `K = kernel_product(kernel, omega)`.
pub fn spectral_potential(g: &TestFunction, omega: &ProbabilityMeasure, kernel: &ConnectivityKernel) -> Result<f64> {
    same_alphabet(g.alphabet_len(), kernel.alphabet_len(), "test function", "kernel")?;
    let k = kernel_product(kernel, omega)?;
    let mut terms = Vec::with_capacity(k.weights.len());
    for (&gv, &q) in g.entries().iter().zip(&k.weights) {
        if q == 0.0 {
            continue;
        }
        let t = gv.exp_m1() * q;
        if !t.is_finite() {
            return Err(Error::Evaluation(format!("exp(g) overflows at g = {gv}")));
        }
        terms.push(t);
    }
    let v = compensated_sum(terms);
    if !v.is_finite() {
        return Err(Error::Evaluation("spectral potential overflows".into()));
    }
    Ok(v)
}

/// Result of maximizing `<g, pi> - spectral_potential(g, omega)` over test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalGap {
    /// The supremum; `+inf` when `pi` is not absolutely continuous w.r.t. the kernel product.
    pub value: f64,
    /// `log(pi / K)`, present when the supremum is attained by a finite test function.
    pub maximizer: Option<TestFunction>,
}

/// Solves the dual problem for the Kullback action at the analytic maximizer `g* = log(pi / K)`.
///
/// The supremum equals `kullback_action(pi, omega, kernel)`; it is not attained when `pi`
/// vanishes on a pair where `K > 0` (the optimum sends `g` to `-inf` there).
pub fn kullback_variational_gap(pi: &PairMeasure, omega: &ProbabilityMeasure, kernel: &ConnectivityKernel) -> Result<VariationalGap> {
    same_alphabet(pi.alphabet_len(), kernel.alphabet_len(), "pair measure", "kernel")?;
    let m = pi.alphabet_len();
    let k = kernel_product(kernel, omega)?;
    let mut g = vec![0.0; m * m];
    let mut attained = true;
    let mut limit_terms = Vec::new();
    for (i, (&p, &q)) in pi.weights().iter().zip(&k.weights).enumerate() {
        match (p > 0.0, q > 0.0) {
            (true, false) => return Ok(VariationalGap { value: f64::INFINITY, maximizer: None }),
            (false, true) => {
                attained = false;
                limit_terms.push(q);
            }
            (true, true) => g[i] = (p / q).ln(),
            (false, false) => {}
        }
    }
    let g = TestFunction::new(m, g)?;
    if !attained {
        // Entries pushed to -inf contribute exactly K(a,b) in the limit.
        let finite_part: Vec<f64> = pi
            .weights()
            .iter()
            .zip(&k.weights)
            .zip(g.entries())
            .filter(|((p, q), _)| **p > 0.0 && **q > 0.0)
            .map(|((p, q), gv)| p * gv - gv.exp_m1() * q)
            .collect();
        let value = compensated_sum(finite_part.into_iter().chain(limit_terms));
        return Ok(VariationalGap { value, maximizer: None });
    }
    let value = g.pair_with(pi)? - spectral_potential(&g, omega, kernel)?;
    debug_assert!({
        let direct = kullback_action(pi, omega, kernel)?;
        (value - direct).abs() <= 1e-9 * (1.0 + direct.abs())
    });
    Ok(VariationalGap { value, maximizer: Some(g) })
}

/// Total variation distance `1/2 sum |p - q|` between pmfs on a common enumeration.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Structural(format!("total variation over supports of size {} and {}", p.len(), q.len())));
    }
    Ok(0.5 * compensated_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs())))
}
