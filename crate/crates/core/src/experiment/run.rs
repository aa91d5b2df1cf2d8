//! Runs a validated experiment and writes its artifacts.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::empirical::{cooperative_measure, degree_counts, type_measure};
use crate::error::{Error, Result};
use crate::measure::{kernel_product, PairMeasure, TestFunction};
use crate::model::ModelSpec;
use crate::rates::{isolated_rate_h, poisson_pmf, rate_i1, solve_t};
use crate::sum::NeumaierSum;
use crate::verify::{
    empty_graph_log_probability, empty_graph_slope, enumerate_ensemble, enumerate_probability, enumeration_budget, ldp_slope_scan, mc_laws, mc_scalar, mc_values,
    no_edges_tilt, optimal_tilt, rare_event_tilted, Event, GraphEvent, Harness, Moments, ENUMERATION_BUDGET,
};

use super::config::{EventKind, ExperimentConfig, ExperimentKind};
use super::output::{fmt_f64, json_f64, summary_json, OutputSet, Table};

/// Command-line overrides of config values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: &'a str,
    seed: u64,
    harness: Harness,
    out: OutputSet,
    estimates: Map<String, Value>,
    references: Map<String, Value>,
}

impl Ctx<'_> {
    fn table(&self, columns: &[&str]) -> Table {
        Table::new(self.hash, self.seed, columns)
    }

    fn estimate(&mut self, key: &str, value: Value) {
        self.estimates.insert(key.into(), value);
    }

    fn reference(&mut self, key: &str, value: Value) {
        self.references.insert(key.into(), value);
    }
}

/// Validates, runs and writes `summary.json` plus the experiment's CSV tables into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, hash: &str, out_dir: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let report = cfg.validate();
    if !report.is_ok() {
        return Err(Error::Config(report.violations));
    }
    let workers = opts.workers.unwrap_or(cfg.workers);
    let mut ctx = Ctx {
        cfg,
        hash,
        seed: opts.seed.unwrap_or(cfg.seed),
        harness: Harness::new(workers)?,
        out: OutputSet::create(out_dir)?,
        estimates: Map::new(),
        references: Map::new(),
    };
    let pass = match cfg.experiment {
        ExperimentKind::Lln => run_lln(&mut ctx)?,
        ExperimentKind::Enumerate => run_enumerate(&mut ctx)?,
        ExperimentKind::RareEvent => run_rare_event(&mut ctx)?,
        ExperimentKind::RateLandscape => run_rate_landscape(&mut ctx)?,
        ExperimentKind::SlopeScan => run_slope_scan(&mut ctx)?,
    };
    let summary = summary_json(cfg.experiment.name(), hash, ctx.seed, std::mem::take(&mut ctx.estimates), std::mem::take(&mut ctx.references), pass);
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    ctx.out.bytes("summary.json", text.as_bytes())?;
    Ok(RunOutcome { pass, files: ctx.out.into_files(), summary })
}

fn estimate_json(mean: f64, se: f64) -> Value {
    let mut m = Map::new();
    m.insert("mean".into(), json_f64(mean));
    m.insert("std_error".into(), json_f64(se));
    Value::Object(m)
}

/// Mean degree of a type-`a` site: `sum_b (c(a, b) + c(b, a)) / 2 eta(b)`.
fn type_degree_means(spec: &ModelSpec) -> Vec<f64> {
    let m = spec.num_types();
    let k = spec.kernel();
    (0..m).map(|a| (0..m).map(|b| 0.5 * (k.get(a, b) + k.get(b, a)) * spec.eta().get(b)).sum()).collect()
}

/// Limit degree law: the `eta`-mixture of Poisson laws with the per-type means. Last entry is overflow.
fn limit_degree_pmf(spec: &ModelSpec, cap: usize) -> Result<Vec<f64>> {
    let mut pmf = vec![0.0; cap + 2];
    for (a, mu) in type_degree_means(spec).into_iter().enumerate() {
        let q = poisson_pmf(mu, cap)?;
        let w = spec.eta().get(a);
        for (k, p) in q.pmf().iter().enumerate() {
            pmf[k] += w * p;
        }
        pmf[cap + 1] += w * q.overflow();
    }
    Ok(pmf)
}

fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).collect::<NeumaierSum>().value()
}

struct LlnReplica {
    isolated: f64,
    degree: Vec<u64>,
    types: Vec<f64>,
    pairs: Vec<f64>,
}

fn run_lln(ctx: &mut Ctx) -> Result<bool> {
    let cfg = ctx.cfg;
    let n = cfg.model.n.expect("validated");
    let spec = cfg.model_spec(n)?;
    let replicas = cfg.replicas_or(20);
    let cap = cfg.caps.degree;
    let m = spec.num_types();
    let reps = mc_values(&spec, replicas, ctx.seed, &ctx.harness, |g| {
        let counts = degree_counts(g);
        let mut degree = vec![0u64; cap + 2];
        for (k, &c) in counts.iter().enumerate() {
            degree[k.min(cap + 1)] += c;
        }
        Ok(LlnReplica {
            isolated: counts.first().copied().unwrap_or(0) as f64 / n as f64,
            degree,
            types: type_measure(g)?.weights().to_vec(),
            pairs: cooperative_measure(g)?.weights().to_vec(),
        })
    })?;

    let reference_deg = limit_degree_pmf(&spec, cap)?;
    let mut pooled = vec![0u64; cap + 2];
    let mut max_tv = 0.0f64;
    let mut iso = Moments::default();
    let mut mass = Moments::default();
    let mut pair_mean = vec![NeumaierSum::new(); m * m];
    let mut type_mean = vec![NeumaierSum::new(); m];
    for r in &reps {
        for (p, c) in pooled.iter_mut().zip(&r.degree) {
            *p += c;
        }
        let pmf: Vec<f64> = r.degree.iter().map(|&c| c as f64 / n as f64).collect();
        max_tv = max_tv.max(half_l1(&pmf, &reference_deg));
        iso.push(r.isolated);
        mass.push(r.pairs.iter().copied().collect::<NeumaierSum>().value());
        for (s, &x) in pair_mean.iter_mut().zip(&r.pairs) {
            s.add(x);
        }
        for (s, &x) in type_mean.iter_mut().zip(&r.types) {
            s.add(x);
        }
    }
    let total = (replicas * n as u64) as f64;
    let pooled_pmf: Vec<f64> = pooled.iter().map(|&c| c as f64 / total).collect();
    let pooled_tv = half_l1(&pooled_pmf, &reference_deg);
    let pairs: Vec<f64> = pair_mean.iter().map(|s| s.value() / replicas as f64).collect();
    let types: Vec<f64> = type_mean.iter().map(|s| s.value() / replicas as f64).collect();
    let limit_pairs = kernel_product(spec.kernel(), spec.eta())?;
    let limit_mass = limit_pairs.mass();
    let max_pair_dev = pairs.iter().zip(limit_pairs.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let iso_ref: f64 = type_degree_means(&spec).iter().enumerate().map(|(a, mu)| spec.eta().get(a) * (-mu).exp()).sum();

    let mut t = ctx.table(&["k", "empirical", "reference"]);
    for k in 0..=cap + 1 {
        let label = if k <= cap { k.to_string() } else { "overflow".into() };
        t.push(vec![label, fmt_f64(pooled_pmf[k]), fmt_f64(reference_deg[k])]);
    }
    ctx.out.table("degree.csv", &t)?;
    let alphabet = spec.alphabet().clone();
    let mut t = ctx.table(&["label", "empirical", "reference"]);
    for (a, &mass) in types.iter().enumerate() {
        t.push(vec![alphabet.label(a).into(), fmt_f64(mass), fmt_f64(spec.eta().get(a))]);
    }
    ctx.out.table("types.csv", &t)?;
    let mut t = ctx.table(&["label", "label2", "empirical", "reference"]);
    for a in 0..m {
        for b in 0..m {
            t.push(vec![alphabet.label(a).into(), alphabet.label(b).into(), fmt_f64(pairs[a * m + b]), fmt_f64(limit_pairs.get(a, b))]);
        }
    }
    ctx.out.table("pairs.csv", &t)?;

    let iso_ok = (iso.mean - iso_ref).abs() <= 3.0 * iso.std_error();
    let tv_ok = max_tv < 0.02;
    let mass_ok = (mass.mean - limit_mass).abs() < 0.05;
    let pairs_ok = max_pair_dev < 0.05;
    ctx.estimate("isolated_fraction", estimate_json(iso.mean, iso.std_error()));
    ctx.estimate("degree_tv_max", json_f64(max_tv));
    ctx.estimate("degree_tv_pooled", json_f64(pooled_tv));
    ctx.estimate("pair_mass", estimate_json(mass.mean, mass.std_error()));
    ctx.estimate("pair_max_deviation", json_f64(max_pair_dev));
    ctx.estimate("replicas", Value::from(replicas));
    ctx.reference("isolated_fraction", json_f64(iso_ref));
    ctx.reference("pair_mass", json_f64(limit_mass));
    ctx.reference("degree_tv_bound", json_f64(0.02));
    ctx.reference("pair_deviation_bound", json_f64(0.05));
    Ok(iso_ok && tv_ok && mass_ok && pairs_ok)
}

fn run_enumerate(ctx: &mut Ctx) -> Result<bool> {
    let cfg = ctx.cfg;
    let spec = cfg.model_spec(cfg.model.n.expect("validated"))?;
    let kinds = cfg.observable_kinds()?;
    let replicas = cfg.replicas_or(100_000);
    let tolerance = cfg.tolerance.unwrap_or(0.005);
    let exact = ctx.harness.install(|| kinds.iter().map(|&k| enumerate_ensemble(&spec, k)).collect::<Result<Vec<_>>>())?;
    let laws = mc_laws(&spec, &kinds, replicas, ctx.seed, &ctx.harness)?;
    let mut pass = true;
    for (law, ex) in laws.iter().zip(&exact) {
        let mc = law.probabilities();
        let keys: BTreeSet<_> = ex.support.iter().map(|(v, _)| v.clone()).chain(mc.keys().cloned()).collect();
        let mut t = ctx.table(&["value", "exact", "mc"]);
        for v in keys {
            t.push(vec![v.to_string(), fmt_f64(ex.probability(&v)), fmt_f64(mc.get(&v).copied().unwrap_or(0.0))]);
        }
        ctx.out.table(&format!("law_{}.csv", law.kind), &t)?;
        let tv = law.tv_distance(ex);
        pass &= tv < tolerance;
        ctx.estimate(&format!("tv_{}", law.kind), json_f64(tv));
        ctx.reference(&format!("support_{}", law.kind), Value::from(ex.support.len()));
    }
    ctx.estimate("replicas", Value::from(replicas));
    ctx.reference("tolerance", json_f64(tolerance));
    ctx.reference("configurations", json_f64(enumeration_budget(&spec)));
    Ok(pass)
}

fn pair_target(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<PairMeasure> {
    let factor = cfg.event.as_ref().and_then(|e| e.factor).expect("validated");
    kernel_product(spec.kernel(), spec.eta())?.scaled(factor)
}

fn build_event(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<Event> {
    let ev = cfg.event.as_ref().expect("validated");
    Ok(match ev.kind {
        EventKind::NoEdges => Event::NoEdges,
        EventKind::PairBall => Event::PairBall { target: pair_target(cfg, spec)?, radius: ev.radius.expect("validated") },
        EventKind::IsolatedAtLeast => Event::IsolatedAtLeast(ev.threshold.expect("validated")),
        EventKind::IsolatedAtMost => Event::IsolatedAtMost(ev.threshold.expect("validated")),
    })
}

fn build_tilt(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<TestFunction> {
    if let Some(g) = cfg.tilt {
        return TestFunction::constant(spec.num_types(), g);
    }
    match cfg.event.as_ref().expect("validated").kind {
        EventKind::NoEdges => no_edges_tilt(spec),
        EventKind::PairBall => optimal_tilt(&pair_target(cfg, spec)?, spec.eta(), spec.kernel()),
        EventKind::IsolatedAtLeast | EventKind::IsolatedAtMost => Err(Error::Domain("isolated-fraction events need an explicit tilt".into())),
    }
}

fn single_type_c(spec: &ModelSpec) -> Option<f64> {
    (spec.num_types() == 1).then(|| spec.kernel().get(0, 0))
}

fn exact_probability(spec: &ModelSpec, event: &Event, harness: &Harness) -> Result<Option<f64>> {
    if let (Event::NoEdges, Some(c)) = (event, single_type_c(spec)) {
        return Ok(Some(empty_graph_log_probability(spec.n(), c).exp()));
    }
    if enumeration_budget(spec) <= ENUMERATION_BUDGET {
        return harness.install(|| enumerate_probability(spec, |g| event.occurs(g))).map(Some);
    }
    Ok(None)
}

fn run_rare_event(ctx: &mut Ctx) -> Result<bool> {
    let cfg = ctx.cfg;
    let n = cfg.model.n.expect("validated");
    let spec = cfg.model_spec(n)?;
    let replicas = cfg.replicas_or(10_000);
    let event = build_event(cfg, &spec)?;
    let g = build_tilt(cfg, &spec)?;
    let tilted = match rare_event_tilted(&spec, &event, &g, replicas, ctx.seed, &ctx.harness) {
        Ok(est) => Some(est),
        Err(Error::NoEffectiveSamples { .. }) => None,
        Err(e) => return Err(e),
    };
    let naive = mc_scalar(&spec, replicas, ctx.seed, &ctx.harness, |gr| if event.occurs(gr) { 1.0 } else { 0.0 })?;
    let exact = exact_probability(&spec, &event, &ctx.harness)?;
    let nan = f64::NAN;
    let get = |f: fn(&crate::verify::TiltedEstimate) -> f64| tilted.as_ref().map_or(nan, f);

    let mut t = ctx.table(&[
        "event", "n", "replicas", "hits", "estimate", "std_error", "log_estimate", "relative_error", "effective_sample_size", "naive_estimate", "naive_std_error", "exact",
    ]);
    t.push(vec![
        event.name().into(),
        n.to_string(),
        replicas.to_string(),
        tilted.as_ref().map_or(0, |e| e.hits).to_string(),
        fmt_f64(get(|e| e.mean)),
        fmt_f64(get(|e| e.std_error)),
        fmt_f64(get(|e| e.log_mean)),
        fmt_f64(get(|e| e.relative_error)),
        fmt_f64(get(|e| e.effective_sample_size)),
        fmt_f64(naive.mean),
        fmt_f64(naive.std_error),
        fmt_f64(exact.unwrap_or(nan)),
    ]);
    ctx.out.table("estimate.csv", &t)?;

    let pass = match (&tilted, exact) {
        (None, _) => false,
        (Some(est), Some(p)) => est.as_mc().within(p, 3.0),
        (Some(est), None) => est.relative_error <= 0.3,
    };
    ctx.estimate("probability", estimate_json(get(|e| e.mean), get(|e| e.std_error)));
    ctx.estimate("log_probability", json_f64(get(|e| e.log_mean)));
    ctx.estimate("relative_error", json_f64(get(|e| e.relative_error)));
    ctx.estimate("naive_probability", estimate_json(naive.mean, naive.std_error));
    ctx.estimate("hits", Value::from(tilted.as_ref().map_or(0, |e| e.hits)));
    ctx.estimate("tilt", Value::Array(g.entries().iter().map(|&x| json_f64(x)).collect()));
    ctx.reference("probability", exact.map_or(Value::Null, json_f64));
    Ok(pass)
}

fn run_rate_landscape(ctx: &mut Ctx) -> Result<bool> {
    let cfg = ctx.cfg;
    let c = cfg.model.kernel[0][0];
    let points = cfg.points.unwrap_or(1000);
    let mut t = ctx.table(&["z", "t", "h"]);
    let mut min_h = f64::INFINITY;
    for i in 0..points {
        let z = i as f64 / (points - 1) as f64;
        let tz = if z < 1.0 { solve_t(z, c)? } else { f64::NAN };
        let h = isolated_rate_h(z, c)?.value;
        min_h = min_h.min(h);
        t.push(vec![fmt_f64(z), fmt_f64(tz), fmt_f64(h)]);
    }
    ctx.out.table("landscape.csv", &t)?;
    let zero = (-c).exp();
    let h_zero = isolated_rate_h(zero, c)?.value;
    let h_one = isolated_rate_h(1.0, c)?.value;
    ctx.estimate("min_h", json_f64(min_h));
    ctx.estimate("h_at_lln_point", json_f64(h_zero));
    ctx.estimate("h_at_one", json_f64(h_one));
    ctx.reference("lln_point", json_f64(zero));
    ctx.reference("h_at_one", json_f64(c / 2.0));
    Ok(min_h >= -1e-12 && h_zero.abs() < 1e-10 && h_one == c / 2.0)
}

/// `I1` at the point where the segment from the target toward the typical pair measure leaves
/// the ball; this is the infimum over the ball for a single type and an upper bound otherwise.
fn ball_edge_rate(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<f64> {
    let target = pair_target(cfg, spec)?;
    let typical = kernel_product(spec.kernel(), spec.eta())?;
    let radius = cfg.event.as_ref().and_then(|e| e.radius).expect("validated");
    let dist: f64 = target.weights().iter().zip(typical.weights()).map(|(a, b)| (a - b).abs()).sum();
    if dist <= radius {
        return Ok(0.0);
    }
    let s = radius / dist;
    let edge = target.weights().iter().zip(typical.weights()).map(|(a, b)| a + s * (b - a)).collect();
    let edge = PairMeasure::new(spec.num_types(), edge, target.is_symmetric())?;
    Ok(rate_i1(spec.eta(), &edge, spec.kernel())?.value)
}

fn run_slope_scan(ctx: &mut Ctx) -> Result<bool> {
    let cfg = ctx.cfg;
    let grid = cfg.model.n_grid.clone().expect("validated");
    let base = cfg.model_spec(grid[0])?;
    let replicas = cfg.replicas_or(10_000);
    let kind = cfg.event.as_ref().expect("validated").kind;
    let c = single_type_c(&base);
    let reference = match (kind, c) {
        (EventKind::NoEdges, Some(c)) => c / 2.0,
        (EventKind::PairBall, _) => rate_i1(base.eta(), &pair_target(cfg, &base)?, base.kernel())?.value,
        (EventKind::IsolatedAtLeast | EventKind::IsolatedAtMost, Some(c)) => isolated_rate_h(cfg.event.as_ref().and_then(|e| e.threshold).expect("validated"), c)?.value,
        _ => f64::NAN,
    };
    let scan = ldp_slope_scan(&base, &grid, |s| build_event(cfg, s), |s| build_tilt(cfg, s), replicas, ctx.seed, &ctx.harness, reference)?;

    let mut t = ctx.table(&["n", "estimate", "std_error", "log_estimate", "slope", "exact_slope", "usable"]);
    let mut pass = true;
    let mut slopes = Vec::new();
    for row in &scan.rows {
        let exact = match (kind, c) {
            (EventKind::NoEdges, Some(c)) => Some(empty_graph_slope(row.n, c)),
            _ => None,
        };
        let est = row.estimate.as_ref();
        t.push(vec![
            row.n.to_string(),
            fmt_f64(est.map_or(f64::NAN, |e| e.mean)),
            fmt_f64(est.map_or(f64::NAN, |e| e.std_error)),
            fmt_f64(est.map_or(f64::NAN, |e| e.log_mean)),
            fmt_f64(row.slope),
            fmt_f64(exact.unwrap_or(f64::NAN)),
            row.usable.to_string(),
        ]);
        pass &= row.usable;
        if let (Some(e), Some(c)) = (est, c) {
            if kind == EventKind::NoEdges {
                pass &= e.as_mc().within(empty_graph_log_probability(row.n, c).exp(), 3.0);
            }
        }
        slopes.push(json_f64(row.slope));
    }
    ctx.out.table("slopes.csv", &t)?;
    if kind == EventKind::PairBall {
        ctx.reference("rate_ball_edge", json_f64(ball_edge_rate(cfg, &base)?));
    }
    ctx.estimate("slopes", Value::Array(slopes));
    ctx.estimate("n_grid", Value::Array(grid.iter().map(|&n| Value::from(n)).collect()));
    ctx.reference("rate", json_f64(reference));
    Ok(pass)
}
