//! Large-deviation rate functions of the ensemble.

use std::fmt;

use crate::empirical::{consistency_check, CountProfile, DegreeDistribution, NeighbourhoodMeasure};
use crate::error::{Error, Result};
use crate::measure::{kullback_action, relative_entropy, same_alphabet, ConnectivityKernel, PairMeasure, ProbabilityMeasure};
use crate::sum::{compensated_sum, NeumaierSum};

/// Overflow mass at or below this level is treated as numerically absent when deciding
/// whether a degree distribution has infinite mean.
pub const NEGLIGIBLE_OVERFLOW: f64 = 1e-15;

/// Largest product grid [`q1_kernel`] will materialize, per type.
pub const MAX_PROFILE_GRID: usize = 10_000_000;

/// Which constraint forced a rate to `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfiniteWitness {
    /// A relative entropy term charges a point its reference measure does not.
    AbsoluteContinuity,
    /// The pair and neighbourhood measures are not consistent.
    Consistency,
    /// The degree distribution carries mass beyond its truncation cap.
    InfiniteMean,
}

impl fmt::Display for InfiniteWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfiniteWitness::AbsoluteContinuity => "absolute-continuity",
            InfiniteWitness::Consistency => "consistency",
            InfiniteWitness::InfiniteMean => "infinite-mean",
        })
    }
}

/// Value of a rate function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub witness: Option<InfiniteWitness>,
}

impl Rate {
    pub fn finite(value: f64) -> Self {
        Self { value, witness: None }
    }

    pub fn infinite(witness: InfiniteWitness) -> Self {
        Self { value: f64::INFINITY, witness: Some(witness) }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    fn from_terms(terms: &[f64]) -> Self {
        if terms.iter().any(|t| t.is_infinite()) {
            Self::infinite(InfiniteWitness::AbsoluteContinuity)
        } else {
            Self::finite(compensated_sum(terms.iter().copied()))
        }
    }
}

/// `I(rho, pi) = H(rho || eta) + 1/2 h(pi || rho)`, the joint rate of the type and cooperative measures.
pub fn rate_i(rho: &ProbabilityMeasure, pi: &PairMeasure, eta: &ProbabilityMeasure, kernel: &ConnectivityKernel) -> Result<Rate> {
    same_alphabet(rho.len(), eta.len(), "type measure", "type law")?;
    let types = relative_entropy(rho.weights(), eta.weights())?;
    let links = kullback_action(pi, rho, kernel)?;
    Ok(Rate::from_terms(&[types, 0.5 * links]))
}

/// `I1(omega, pi) = 1/2 h(pi || omega)`, the rate of the cooperative measure given the type measure.
pub fn rate_i1(omega: &ProbabilityMeasure, pi: &PairMeasure, kernel: &ConnectivityKernel) -> Result<Rate> {
    let links = kullback_action(pi, omega, kernel)?;
    Ok(Rate::from_terms(&[0.5 * links]))
}

fn ln_factorials(k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=k_max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

fn poisson_ln_pmf(c: f64, k: usize, ln_fact: f64) -> f64 {
    if k == 0 {
        -c
    } else {
        -c + k as f64 * c.ln() - ln_fact
    }
}

/// Mass of Poisson(`c`) strictly above `k_max`, summed term by term.
fn poisson_tail(c: f64, k_max: usize, ln_fact_kmax: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let mut term = poisson_ln_pmf(c, k_max, ln_fact_kmax).exp();
    let mut tail = NeumaierSum::new();
    let mut k = k_max;
    loop {
        k += 1;
        term *= c / k as f64;
        tail.add(term);
        if term == 0.0 || (k as f64 > c && term < tail.value() * 1e-17) {
            break;
        }
    }
    tail.value()
}

/// Poisson(`c`) pmf on `0..=k_max`, with the remaining tail mass as overflow.
pub fn poisson_pmf(c: f64, k_max: usize) -> Result<DegreeDistribution> {
    if !c.is_finite() || c < 0.0 {
        return Err(Error::Domain(format!("Poisson mean must be finite and nonnegative, got {c}")));
    }
    if c == 0.0 {
        return DegreeDistribution::point_mass(0, k_max);
    }
    let lf = ln_factorials(k_max);
    let pmf: Vec<f64> = (0..=k_max).map(|k| poisson_ln_pmf(c, k, lf[k]).exp()).collect();
    let tail = poisson_tail(c, k_max, lf[k_max]);
    DegreeDistribution::new(pmf, tail)
}

/// Poisson neighbour means `s(a, b) / omega1(a)`, row-major, with `s` the symmetrization of `pi`
/// (a site sees its edges from both orientations). Rows with `omega1(a) = 0` are zero.
fn profile_means(pi: &PairMeasure, omega1: &[f64]) -> Result<Vec<f64>> {
    let m = pi.alphabet_len();
    same_alphabet(m, omega1.len(), "pair measure", "type marginal")?;
    let mut means = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            let p = 0.5 * (pi.get(a, b) + pi.get(b, a));
            if p == 0.0 {
                continue;
            }
            if omega1[a] == 0.0 {
                return Err(Error::Domain(format!("pair measure charges type {a} which has zero type mass")));
            }
            means[a * m + b] = p / omega1[a];
        }
    }
    Ok(means)
}

/// `q1(a, l) = omega1(a) prod_b Poisson(pi(a, b) / omega1(a))(l(b))` evaluated pointwise.
fn q1_point(means: &[f64], omega1: &[f64], a: usize, profile: &CountProfile, lf: &[f64]) -> f64 {
    let m = omega1.len();
    if omega1[a] == 0.0 {
        return 0.0;
    }
    let mut log = omega1[a].ln();
    for (b, &l) in profile.counts().iter().enumerate() {
        let mu = means[a * m + b];
        let l = l as usize;
        if mu == 0.0 {
            if l > 0 {
                return 0.0;
            }
            continue;
        }
        log += poisson_ln_pmf(mu, l, lf[l]);
    }
    log.exp()
}

/// Overflow mass of `q1` for type `a`: `omega1(a) (1 - prod_b P(Poisson_b <= cap))`.
fn q1_overflow(means: &[f64], omega1: &[f64], a: usize, cap: usize, lf: &[f64]) -> f64 {
    let m = omega1.len();
    let log_inside: f64 = (0..m)
        .map(|b| {
            let mu = means[a * m + b];
            if mu == 0.0 {
                0.0
            } else {
                (-poisson_tail(mu, cap, lf[cap])).ln_1p()
            }
        })
        .sum();
    omega1[a] * -log_inside.exp_m1()
}

/// The reference neighbourhood law `q1` built from a pair measure and a type marginal.
///
/// For each type `a`, neighbour counts are independent Poisson with means `s(a, b) / omega1(a)`,
/// `s(a, b) = (pi(a, b) + pi(b, a)) / 2`,
/// weighted by `omega1(a)`. Profiles with a coordinate above `cap` are pooled into the overflow bucket.
pub fn q1_kernel(pi: &PairMeasure, omega1: &ProbabilityMeasure, cap: usize) -> Result<NeighbourhoodMeasure> {
    let m = pi.alphabet_len();
    let means = profile_means(pi, omega1.weights())?;
    let lf = ln_factorials(cap);
    let w = omega1.weights();
    let mut entries = Vec::new();
    let mut overflow = vec![0.0; m];
    for a in 0..m {
        if w[a] == 0.0 {
            continue;
        }
        // Coordinates with zero mean only take the value 0.
        let ranges: Vec<usize> = (0..m).map(|b| if means[a * m + b] == 0.0 { 0 } else { cap }).collect();
        let grid: f64 = ranges.iter().map(|&r| (r + 1) as f64).product();
        if grid > MAX_PROFILE_GRID as f64 {
            return Err(Error::Domain(format!("q1 profile grid of {grid:.3e} points exceeds {MAX_PROFILE_GRID}; lower the cap")));
        }
        let mut profile = vec![0u32; m];
        loop {
            let p = CountProfile(profile.clone());
            let mass = q1_point(&means, w, a, &p, &lf);
            if mass > 0.0 {
                entries.push(((a, p), mass));
            }
            // Odometer increment over the grid.
            let mut b = 0;
            while b < m {
                if (profile[b] as usize) < ranges[b] {
                    profile[b] += 1;
                    break;
                }
                profile[b] = 0;
                b += 1;
            }
            if b == m {
                break;
            }
        }
        overflow[a] = q1_overflow(&means, w, a, cap, &lf);
    }
    NeighbourhoodMeasure::new(m, cap, entries, overflow)
}

/// `H(omega || q1)` with `q1` evaluated pointwise on the support of `omega`, overflow buckets compared as atoms.
pub fn neighbourhood_relative_entropy(omega: &NeighbourhoodMeasure, pi: &PairMeasure) -> Result<f64> {
    let m = omega.num_types();
    same_alphabet(m, pi.alphabet_len(), "neighbourhood measure", "pair measure")?;
    let omega1 = omega.type_marginal();
    let means = profile_means(pi, &omega1)?;
    let max_count = omega.iter().flat_map(|((_, l), _)| l.counts().iter().copied()).max().unwrap_or(0) as usize;
    let lf = ln_factorials(max_count.max(omega.cap()));
    let mut mu = Vec::new();
    let mut nu = Vec::new();
    for ((a, l), &w) in omega.iter() {
        mu.push(w);
        nu.push(q1_point(&means, &omega1, *a, l, &lf));
    }
    for a in 0..m {
        mu.push(omega.overflow()[a]);
        nu.push(q1_overflow(&means, &omega1, a, omega.cap(), &lf));
    }
    relative_entropy(&mu, &nu)
}

/// `J1(pi, omega) = H(omega || q1) + H(omega1 || eta) + 1/2 h(pi || omega1)` for consistent pairs, `+inf` otherwise.
pub fn rate_j1(pi: &PairMeasure, omega: &NeighbourhoodMeasure, eta: &ProbabilityMeasure, kernel: &ConnectivityKernel, cap: usize) -> Result<Rate> {
    if cap != omega.cap() {
        return Err(Error::Domain(format!("cap {cap} differs from the neighbourhood measure's cap {}", omega.cap())));
    }
    same_alphabet(pi.alphabet_len(), eta.len(), "pair measure", "type law")?;
    if !consistency_check(pi, omega)?.consistent {
        return Ok(Rate::infinite(InfiniteWitness::Consistency));
    }
    let omega1 = ProbabilityMeasure::new(omega.type_marginal())?;
    let profiles = neighbourhood_relative_entropy(omega, pi)?;
    let types = relative_entropy(omega1.weights(), eta.weights())?;
    let links = kullback_action(pi, &omega1, kernel)?;
    Ok(Rate::from_terms(&[profiles, types, 0.5 * links]))
}

/// Degree-distribution rate for the single-type ensemble with kernel value `c`:
/// `H(d || q_<d>) + 1/2 <d> log(<d> / c) - 1/2 <d> + c / 2`.
pub fn degree_rate_lambda(d: &DegreeDistribution, c: f64) -> Result<Rate> {
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::Domain(format!("kernel value must be positive, got {c}")));
    }
    if d.overflow() > NEGLIGIBLE_OVERFLOW {
        return Ok(Rate::infinite(InfiniteWitness::InfiniteMean));
    }
    let mean = compensated_sum(d.pmf().iter().enumerate().map(|(k, &p)| k as f64 * p));
    let reference = poisson_pmf(mean, d.k_max())?;
    let entropy = relative_entropy(d.pmf(), reference.pmf())?;
    let mean_term = if mean == 0.0 { 0.0 } else { 0.5 * mean * (mean / c).ln() };
    Ok(Rate::from_terms(&[entropy, mean_term, -0.5 * mean, 0.5 * c]))
}

/// Residual `1 - e^{-t} - c (1 - z) / t` of the equation defining `t(z)`.
pub fn solve_t_residual(t: f64, z: f64, c: f64) -> f64 {
    -(-t).exp_m1() - c * (1.0 - z) / t
}

/// Unique positive root of `1 - e^{-t} = c (1 - z) / t`, by bisection on the increasing residual.
///
/// Defined for `0 <= z < 1`; at `z = 1` the root degenerates to 0.
pub fn solve_t(z: f64, c: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::Domain(format!("z must lie in [0, 1), got {z}")));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::Domain(format!("kernel value must be positive, got {c}")));
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while solve_t_residual(hi, z, c) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if solve_t_residual(mid, z, c) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if lo > 0.0 && solve_t_residual(lo, z, c).abs() < solve_t_residual(hi, z, c).abs() { lo } else { hi };
    let r = solve_t_residual(t, z, c);
    if r.abs() >= 1e-12 {
        return Err(Error::Evaluation(format!("bisection stalled with residual {r:e} at t = {t}")));
    }
    Ok(t)
}

/// Rate of the fraction of isolated sites in the single-type ensemble with kernel value `c`:
/// `z log z + c z (1 - z/2) - (1 - z) [log(c / t) - (t - c (1 - z))^2 / (2 c (1 - z))]` with `t = t(z)`.
pub fn isolated_rate_h(z: f64, c: f64) -> Result<Rate> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("z must lie in [0, 1], got {z}")));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::Domain(format!("kernel value must be positive, got {c}")));
    }
    if z == 1.0 {
        return Ok(Rate::finite(0.5 * c));
    }
    let t = solve_t(z, c)?;
    let zlogz = if z == 0.0 { 0.0 } else { z * z.ln() };
    let free = c * (1.0 - z);
    let bracket = (c / t).ln() - (t - free).powi(2) / (2.0 * free);
    Ok(Rate::finite(compensated_sum([zlogz, c * z * (1.0 - z / 2.0), -(1.0 - z) * bracket])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::kernel_product;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn pm(w: &[f64]) -> ProbabilityMeasure {
        ProbabilityMeasure::new(w.to_vec()).unwrap()
    }

    #[test]
    fn rate_i_examples() {
        let eta = pm(&[0.5, 0.5]);
        let c = ConnectivityKernel::constant(2, 2.0).unwrap();
        let k = kernel_product(&c, &eta).unwrap();
        assert_eq!(rate_i(&eta, &k, &eta, &c).unwrap().value, 0.0);

        let r = rate_i(&eta, &k.scaled(2.0).unwrap(), &eta, &c).unwrap();
        assert!((r.value - (2.0 * LN2 - 1.0)).abs() < 1e-12);
        assert!((r.value - 0.386294).abs() < 1e-6);

        let eta = pm(&[1.0, 0.0]);
        let rho = pm(&[0.5, 0.5]);
        let r = rate_i(&rho, &kernel_product(&c, &rho).unwrap(), &eta, &c).unwrap();
        assert!(!r.is_finite());
        assert_eq!(r.witness, Some(InfiniteWitness::AbsoluteContinuity));
    }

    #[test]
    fn rate_i1_examples() {
        let omega = pm(&[0.2, 0.8]);
        let c = ConnectivityKernel::from_rows(&[vec![1.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let k = kernel_product(&c, &omega).unwrap();
        assert_eq!(rate_i1(&omega, &k, &c).unwrap().value, 0.0);
        let r = rate_i1(&omega, &k.scaled(2.0).unwrap(), &c).unwrap();
        assert!((r.value - 0.5 * k.mass() * (2.0 * LN2 - 1.0)).abs() < 1e-12);
        let bad = PairMeasure::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.3]]).unwrap();
        assert!(!rate_i1(&omega, &bad, &c).unwrap().is_finite());
    }

    #[test]
    fn poisson_examples() {
        let q = poisson_pmf(2.0, 50).unwrap();
        assert!((q.get(0) - (-2f64).exp()).abs() < 1e-16);
        assert!((q.get(0) - 0.135335).abs() < 1e-6);
        assert_eq!(poisson_pmf(0.0, 10).unwrap().get(0), 1.0);
        assert!(poisson_pmf(-1.0, 10).is_err());
    }

    #[test]
    fn poisson_truncated_mean() {
        for c in [0.1, 0.5, 1.0, 2.0, 3.5, 5.0] {
            let q = poisson_pmf(c, 50).unwrap();
            // Summation oracle with factorials built by repeated multiplication.
            let mut term = (-c).exp();
            let mut mean = 0.0;
            for k in 1..=50 {
                term *= c / k as f64;
                mean += k as f64 * term;
            }
            let got: f64 = q.pmf().iter().enumerate().map(|(k, p)| k as f64 * p).sum();
            assert!((got - c).abs() < 1e-12, "c = {c}");
            assert!((got - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn q1_examples() {
        let omega1 = pm(&[0.3, 0.7]);
        let q = q1_kernel(&PairMeasure::zero(2, true), &omega1, 10).unwrap();
        assert_eq!(q.mass(0, &CountProfile::zero(2)), 0.3);
        assert_eq!(q.mass(1, &CountProfile::zero(2)), 0.7);

        let single = PairMeasure::new(1, vec![2.0], true).unwrap();
        let q = q1_kernel(&single, &pm(&[1.0]), 50).unwrap();
        let oracle = poisson_pmf(2.0, 50).unwrap();
        for k in 0..=50u32 {
            assert_eq!(q.mass(0, &CountProfile(vec![k])), oracle.get(k as usize));
        }

        let pi = PairMeasure::from_rows(&[vec![0.6, 0.9], vec![0.9, 2.1]]).unwrap();
        let q = q1_kernel(&pi, &omega1, 30).unwrap();
        let marg = q.type_marginal();
        assert!((marg[0] - 0.3).abs() < 1e-13 && (marg[1] - 0.7).abs() < 1e-13);
        let pair = q.profile_pair_mass();
        for (x, y) in pair.iter().zip(pi.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn q1_rejects_uncharged_type() {
        let pi = PairMeasure::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(q1_kernel(&pi, &pm(&[0.0, 1.0]), 5), Err(Error::Domain(_))));
    }

    #[test]
    fn j1_zero_at_typical_point() {
        let eta = pm(&[0.4, 0.6]);
        let c = ConnectivityKernel::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let pi = kernel_product(&c, &eta).unwrap();
        let omega = q1_kernel(&pi, &eta, 50).unwrap();
        let r = rate_j1(&pi, &omega, &eta, &c, 50).unwrap();
        assert!(r.value.abs() < 1e-10, "{}", r.value);

        let c = ConnectivityKernel::from_rows(&[vec![2.0, 0.5], vec![1.5, 3.0]]).unwrap();
        let pi = kernel_product(&c, &eta).unwrap();
        assert!(!pi.is_symmetric());
        let omega = q1_kernel(&pi, &eta, 50).unwrap();
        let r = rate_j1(&pi, &omega, &eta, &c, 50).unwrap();
        assert!(r.value.abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn j1_poisson_profile_entropy_closed_form() {
        // Single type, pi of mass 2, omega the Poisson(3) profile law.
        let pi = PairMeasure::new(1, vec![2.0], true).unwrap();
        let q3 = poisson_pmf(3.0, 50).unwrap();
        let omega = NeighbourhoodMeasure::new(
            1,
            50,
            q3.pmf().iter().enumerate().map(|(k, &p)| ((0, CountProfile(vec![k as u32])), p)),
            vec![q3.overflow()],
        )
        .unwrap();
        let h = neighbourhood_relative_entropy(&omega, &pi).unwrap();
        let closed = 3.0 * 1.5f64.ln() - 1.0;
        assert!((h - closed).abs() < 1e-10, "{h} vs {closed}");

        // Mean 3 profiles cannot reproduce a pair mass of 2.
        let eta = pm(&[1.0]);
        let c = ConnectivityKernel::constant(1, 2.0).unwrap();
        let r = rate_j1(&pi, &omega, &eta, &c, 50).unwrap();
        assert_eq!(r.witness, Some(InfiniteWitness::Consistency));
    }

    #[test]
    fn lambda_examples() {
        let c = 2.0;
        let q = poisson_pmf(c, 50).unwrap();
        assert!(degree_rate_lambda(&q, c).unwrap().value.abs() < 1e-12);

        let delta0 = DegreeDistribution::point_mass(0, 50).unwrap();
        assert!((degree_rate_lambda(&delta0, c).unwrap().value - 1.0).abs() < 1e-15);

        let q4 = poisson_pmf(2.0 * c, 50).unwrap();
        let v = degree_rate_lambda(&q4, c).unwrap().value;
        assert!((v - (2.0 * LN2 - 1.0)).abs() < 1e-12, "{v}");

        let heavy = DegreeDistribution::new(vec![0.5, 0.4], 0.1).unwrap();
        assert_eq!(degree_rate_lambda(&heavy, c).unwrap().witness, Some(InfiniteWitness::InfiniteMean));
        assert!(degree_rate_lambda(&q, 0.0).is_err());
    }

    #[test]
    fn solve_t_examples() {
        for c in [0.5f64, 1.0, 2.0, 4.0] {
            let t = solve_t((-c).exp(), c).unwrap();
            assert!((t - c).abs() < 1e-12 * c.max(1.0), "c = {c}: {t}");
        }
        // Newton oracle on t (1 - e^{-t}) = c (1 - z), independent of the bisection.
        let (z, c) = (0.5, 2.0);
        let mut t = 1.0f64;
        for _ in 0..60 {
            let f = t * (1.0 - (-t).exp()) - c * (1.0 - z);
            let df = 1.0 - (-t).exp() + t * (-t).exp();
            t -= f / df;
        }
        let got = solve_t(z, c).unwrap();
        assert!((got - t).abs() < 1e-12);
        assert!((got - 1.3499764854011276).abs() < 1e-12);

        assert!(solve_t(1.0, 2.0).is_err());
        assert!(solve_t(-0.1, 2.0).is_err());
        assert!(solve_t(0.5, 0.0).is_err());
    }

    #[test]
    fn h_examples() {
        for c in [0.5f64, 1.0, 2.0, 4.0] {
            assert!(isolated_rate_h((-c).exp(), c).unwrap().value.abs() < 1e-12);
            let h1 = isolated_rate_h(1.0, c).unwrap().value;
            assert_eq!(h1, c / 2.0);
            let lambda0 = degree_rate_lambda(&DegreeDistribution::point_mass(0, 30).unwrap(), c).unwrap().value;
            assert!((h1 - lambda0).abs() < 1e-15);
            // Left limit toward z = 1 is continuous.
            let near = isolated_rate_h(1.0 - 1e-9, c).unwrap().value;
            assert!((near - h1).abs() < 1e-6);
        }
    }

    #[test]
    fn h_nonnegative_on_grid() {
        for c in [0.5f64, 1.0, 2.0, 4.0] {
            for i in 0..1000 {
                let z = i as f64 / 999.0;
                let h = isolated_rate_h(z, c).unwrap().value;
                assert!(h >= -1e-12, "h({z}) = {h} for c = {c}");
            }
        }
    }

    proptest! {
        #[test]
        fn solve_t_residual_small(z in 0.0f64..0.999, c in 0.05f64..20.0) {
            let t = solve_t(z, c).unwrap();
            prop_assert!(t > 0.0);
            prop_assert!(solve_t_residual(t, z, c).abs() < 1e-12);
        }

        #[test]
        fn rate_i_midpoint_convex(
            r in prop::collection::vec(0.05f64..1.0, 2),
            p0 in prop::collection::vec(0.0f64..3.0, 4),
            p1 in prop::collection::vec(0.0f64..3.0, 4),
            cv in prop::collection::vec(0.1f64..4.0, 4),
        ) {
            let s = r[0] + r[1];
            let rho = pm(&[r[0] / s, 1.0 - r[0] / s]);
            let eta = pm(&[0.3, 0.7]);
            let c = ConnectivityKernel::new(2, cv).unwrap();
            let a = PairMeasure::new(2, p0.clone(), false).unwrap();
            let b = PairMeasure::new(2, p1.clone(), false).unwrap();
            let mid = PairMeasure::new(2, p0.iter().zip(&p1).map(|(x, y)| 0.5 * (x + y)).collect(), false).unwrap();
            let fa = rate_i(&rho, &a, &eta, &c).unwrap().value;
            let fb = rate_i(&rho, &b, &eta, &c).unwrap().value;
            let fm = rate_i(&rho, &mid, &eta, &c).unwrap().value;
            prop_assert!(fm <= 0.5 * (fa + fb) + 1e-12);
        }
    }
}
