use mrn_core::measure::{kernel_product, ConnectivityKernel, PairMeasure, ProbabilityMeasure, TestFunction, TypeAlphabet};
use mrn_core::model::{edge_probability, log_rn_derivative, tilted_edge_probability, ModelSpec, TypedGraph};
use mrn_core::rates::rate_i1;
use mrn_core::verify::{
    asymptotic_rn_check, enumerate_ensemble, enumerate_expectation, ldp_slope_scan, mc_scalar, optimal_tilt, rare_event_tilted, Event, GraphEvent, Harness, ObservableKind,
};
use proptest::prelude::*;

/// `log P(Binomial(trials, p) = k)` for every `k`, from cumulative log-factorials.
fn binomial_log_pmf(trials: usize, p: f64) -> Vec<f64> {
    let mut lf = vec![0.0f64; trials + 1];
    for k in 1..=trials {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    (0..=trials).map(|k| lf[trials] - lf[k] - lf[trials - k] + k as f64 * p.ln() + (trials - k) as f64 * (1.0 - p).ln()).collect()
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Exact `log P(|2|E|/n - target| <= radius)` for the single-type ensemble, using the same
/// floating-point comparison as the event.
fn exact_ball_log_probability(n: usize, c: f64, target: f64, radius: f64) -> f64 {
    let trials = n * (n - 1) / 2;
    let logs = binomial_log_pmf(trials, c / (n as f64 + c));
    log_sum_exp((0..=trials).filter(|&k| ((2 * k) as f64 / n as f64 - target).abs() <= radius).map(|k| logs[k]))
}

#[test]
fn pair_ball_slopes_against_binomial_oracle() {
    let c = 2.0;
    let base = ModelSpec::single_type(c, 10).unwrap();
    let eta = ProbabilityMeasure::new(vec![1.0]).unwrap();
    let kernel = ConnectivityKernel::constant(1, c).unwrap();
    let target = kernel_product(&kernel, &eta).unwrap().scaled(2.0).unwrap();
    let h = Harness::new(4).unwrap();
    let ns = [50, 100, 200, 400];
    let scan = ldp_slope_scan(
        &base,
        &ns,
        |_| Ok(Event::PairBall { target: target.clone(), radius: 0.1 }),
        |s| optimal_tilt(&target, s.eta(), s.kernel()),
        20_000,
        6,
        &h,
        rate_i1(&eta, &target, &kernel).unwrap().value,
    )
    .unwrap();

    let mut exact_slopes = Vec::new();
    for row in &scan.rows {
        let exact_log = exact_ball_log_probability(row.n, c, 4.0, 0.1);
        let est = row.estimate.expect("hits");
        assert!(row.usable);
        assert!((est.mean - exact_log.exp()).abs() <= 3.0 * est.std_error, "n = {}: {} vs {}", row.n, est.mean, exact_log.exp());
        exact_slopes.push(-exact_log / row.n as f64);
    }
    assert!(exact_slopes.windows(2).all(|w| w[1] < w[0]), "{exact_slopes:?}");

    // The ball's infimum of the rate sits on its boundary nearest the typical value 2.
    let edge = PairMeasure::new(1, vec![3.9], true).unwrap();
    let infimum = rate_i1(&eta, &edge, &kernel).unwrap().value;
    let last = *exact_slopes.last().unwrap();
    assert!((last - infimum).abs() / infimum < 0.15, "{last} vs {infimum}");
    assert!((scan.reference - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12);
}

#[test]
fn lln_slopes_vanish() {
    let c = 2.0;
    let mut slopes = Vec::new();
    for n in [50, 100, 200, 400] {
        slopes.push(-exact_ball_log_probability(n, c, 2.0, 0.3) / n as f64);
    }
    assert!(slopes.windows(2).all(|w| w[1] < w[0]), "{slopes:?}");
    assert!(*slopes.last().unwrap() < 1e-3);
}

#[test]
fn deviation_probability_nonincreasing_at_lln_target() {
    let c = 2.0;
    let mut last = 1.0;
    for n in [50, 100, 200, 400, 800] {
        let inside = exact_ball_log_probability(n, c, 2.0, 0.3).exp();
        let outside = 1.0 - inside;
        assert!(outside <= last, "n = {n}: {outside} > {last}");
        last = outside;
    }
}

#[test]
fn optimal_tilt_beats_naive_monte_carlo() {
    let c = 2.0;
    let spec = ModelSpec::single_type(c, 100).unwrap();
    let target = PairMeasure::new(1, vec![4.0], true).unwrap();
    let event = Event::PairBall { target: target.clone(), radius: 0.1 };
    let h = Harness::new(4).unwrap();
    let g = optimal_tilt(&target, spec.eta(), spec.kernel()).unwrap();
    let tilted = rare_event_tilted(&spec, &event, &g, 5000, 2, &h).unwrap();
    let naive = mc_scalar(&spec, 5000, 2, &h, |gr| if event.occurs(gr) { 1.0 } else { 0.0 }).unwrap();
    assert!(tilted.relative_error < 0.1);
    assert_eq!(naive.mean, 0.0);
}

#[test]
fn rn_decomposition_deviation_closed_form() {
    // Single type: the limit form misses `(n - 1)/2 |h_n - h_inf|` on every graph.
    let c: f64 = 2.0;
    let g = std::f64::consts::LN_2;
    let h = Harness::new(2).unwrap();
    let mut devs = Vec::new();
    for n in [50usize, 100, 200] {
        let spec = ModelSpec::single_type(c, n).unwrap();
        let r = asymptotic_rn_check(&spec, &TestFunction::constant(1, g).unwrap(), 50, 1, &h).unwrap();
        let nf = n as f64;
        let h_n = nf * ((c / nf).ln_1p() - (g.exp() * c / nf).ln_1p());
        let h_inf = c * (1.0 - g.exp());
        let predicted = (nf - 1.0) / 2.0 * (h_n - h_inf).abs();
        assert!(r.exact_form_deviation < 1e-9);
        assert!((r.limit_form_deviation - predicted).abs() < 1e-9, "{} vs {predicted}", r.limit_form_deviation);
        devs.push(r.limit_form_deviation);
    }
    // Bounded and approaching c^2 (e^{2g} - 1) / 4 = 3, so the per-site deviation vanishes.
    assert!(devs.iter().all(|&d| d < 3.0));
    assert!((devs[2] - 3.0).abs() < 0.1);
}

fn small_spec(m: usize, eta: Vec<f64>, c: Vec<f64>, n: usize) -> ModelSpec {
    ModelSpec::new(TypeAlphabet::numbered(m).unwrap(), ProbabilityMeasure::new(eta).unwrap(), ConnectivityKernel::new(m, c).unwrap(), n, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn enumeration_matches_closed_form_moments(w in 0.05f64..0.95, c in prop::collection::vec(0.0f64..4.0, 3), n in 1usize..=4) {
        let kernel = vec![c[0], c[1], c[1], c[2]];
        let spec = small_spec(2, vec![w, 1.0 - w], kernel.clone(), n);
        for kind in ObservableKind::ALL {
            let law = enumerate_ensemble(&spec, kind).unwrap();
            prop_assert!((law.total() - 1.0).abs() < 1e-12);
        }
        let eta = [w, 1.0 - w];
        let per_pair: f64 = (0..4).map(|i| eta[i / 2] * eta[i % 2] * kernel[i] / (n as f64 + kernel[i])).sum();
        let expected = (n * (n - 1) / 2) as f64 * per_pair;
        let mean = enumerate_expectation(&spec, |g: &TypedGraph| g.edge_count() as f64).unwrap();
        prop_assert!((mean - expected).abs() < 1e-12);
    }

    #[test]
    fn tilted_reweighting_is_exactly_unbiased(g in prop::collection::vec(-1.5f64..1.5, 3)) {
        // Sum over graphs of P~(G) exp(log dP/dP~) 1{E} recovers P(E), with P~/P built pair by pair.
        let spec = small_spec(2, vec![0.5, 0.5], vec![1.0, 2.0, 2.0, 1.0], 3);
        let tilt = TestFunction::from_rows(&[vec![g[0], g[1]], vec![g[1], g[2]]]).unwrap();
        let event = Event::IsolatedAtLeast(0.3);
        let direct = enumerate_expectation(&spec, |gr| if event.occurs(gr) { 1.0 } else { 0.0 }).unwrap();
        let reweighted = enumerate_expectation(&spec, |gr| {
            if !event.occurs(gr) {
                return 0.0;
            }
            let n = gr.n();
            let mut log_ratio = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (gr.type_of(i), gr.type_of(j));
                    let p = edge_probability(&spec, a, b);
                    let pt = tilted_edge_probability(&spec, &tilt, a, b).unwrap();
                    let linked = gr.edges().contains(&(i as u32, j as u32));
                    log_ratio += if linked { (pt / p).ln() } else { ((1.0 - pt) / (1.0 - p)).ln() };
                }
            }
            (log_ratio + log_rn_derivative(&spec, gr, &tilt).unwrap()).exp()
        }).unwrap();
        prop_assert!((direct - reweighted).abs() < 1e-12, "{direct} vs {reweighted}");
    }
}
