//! Experiment configuration: TOML schema, parsing and semantic validation.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, Violation};
use crate::measure::{ConnectivityKernel, ProbabilityMeasure, TypeAlphabet, MEASURE_TOL};
use crate::model::ModelSpec;
use crate::verify::{enumeration_budget, ObservableKind, ENUMERATION_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Lln,
    Enumerate,
    RareEvent,
    RateLandscape,
    SlopeScan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Lln,
        ExperimentKind::Enumerate,
        ExperimentKind::RareEvent,
        ExperimentKind::RateLandscape,
        ExperimentKind::SlopeScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Lln => "lln",
            ExperimentKind::Enumerate => "enumerate",
            ExperimentKind::RareEvent => "rare-event",
            ExperimentKind::RateLandscape => "rate-landscape",
            ExperimentKind::SlopeScan => "slope-scan",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Lln => "empirical measures at large n against their limits (degree pmf, isolated fraction, L2)",
            ExperimentKind::Enumerate => "Monte Carlo laws of small networks against exact enumeration",
            ExperimentKind::RareEvent => "importance-sampling estimate of a rare event probability",
            ExperimentKind::RateLandscape => "isolated-fraction rate h(z) on a grid over [0, 1]",
            ExperimentKind::SlopeScan => "decay slopes -(1/n) log P(event) along an n-grid",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Type labels; defaults to `a1 .. am`.
    pub types: Option<Vec<String>>,
    pub eta: Vec<f64>,
    pub kernel: Vec<Vec<f64>>,
    #[serde(default = "default_true")]
    pub symmetric: bool,
    pub n: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(default = "default_cap")]
    pub degree: usize,
    #[serde(default = "default_cap")]
    pub neighbourhood: usize,
}

fn default_cap() -> usize {
    crate::empirical::DEFAULT_CAP
}

impl Default for Caps {
    fn default() -> Self {
        Self { degree: default_cap(), neighbourhood: default_cap() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    NoEdges,
    PairBall,
    IsolatedAtLeast,
    IsolatedAtMost,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub kind: EventKind,
    /// Pair-ball target is `factor * c eta (x) eta`.
    pub factor: Option<f64>,
    pub radius: Option<f64>,
    /// Isolated-fraction threshold.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub replicas: Option<u64>,
    pub model: ModelConfig,
    #[serde(default)]
    pub caps: Caps,
    pub event: Option<EventConfig>,
    /// Constant tilt `g`; chosen automatically from the event when absent.
    pub tilt: Option<f64>,
    /// Observables compared by `enumerate`; all of them by default.
    pub observables: Option<Vec<String>>,
    /// Grid size for `rate-landscape`.
    pub points: Option<usize>,
    /// Pass threshold on total variation for `enumerate`.
    pub tolerance: Option<f64>,
}

fn default_workers() -> usize {
    1
}

/// Outcome of semantic validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Hex SHA-256 of the raw config text.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses config text; schema errors come back as [`Error::Config`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| {
        let path = e.span().map_or_else(|| "config".to_string(), |s| format!("line {}", line_of(text, s.start)));
        Error::Config(vec![Violation::new(path, e.message().trim())])
    })
}

/// Reads and parses a config file, returning it with the hash of its text.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, String)> {
    let text = std::fs::read_to_string(path)?;
    let config = parse_config(&text)?;
    Ok((config, config_hash(&text)))
}

impl ExperimentConfig {
    pub fn alphabet(&self) -> Result<TypeAlphabet> {
        match &self.model.types {
            Some(labels) => TypeAlphabet::new(labels.iter().cloned()),
            None => TypeAlphabet::numbered(self.model.eta.len()),
        }
    }

    /// The model at `n`.
    pub fn model_spec(&self, n: usize) -> Result<ModelSpec> {
        let kernel = ConnectivityKernel::from_rows(&self.model.kernel)?;
        ModelSpec::new(self.alphabet()?, ProbabilityMeasure::new(self.model.eta.clone())?, kernel, n, self.model.symmetric)
    }

    pub fn observable_kinds(&self) -> Result<Vec<ObservableKind>> {
        match &self.observables {
            None => Ok(ObservableKind::ALL.to_vec()),
            Some(names) => names.iter().map(|s| s.parse()).collect(),
        }
    }

    pub fn replicas_or(&self, default: u64) -> u64 {
        self.replicas.unwrap_or(default)
    }

    /// Checks every invariant the runner relies on, naming the offending field.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut bad = |path: &str, message: String| report.violations.push(Violation::new(path, message));
        let m = self.model.eta.len();

        if m == 0 {
            bad("model.eta", "must list at least one type".into());
        }
        for (i, &w) in self.model.eta.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                bad(&format!("model.eta[{i}]"), format!("must be finite and nonnegative, got {w}"));
            }
        }
        let total: f64 = self.model.eta.iter().sum();
        if m > 0 && (total - 1.0).abs() > MEASURE_TOL {
            bad("model.eta", format!("must sum to 1, sums to {total}"));
        }
        if let Some(labels) = &self.model.types {
            if labels.len() != m {
                bad("model.types", format!("declares {} labels but model.eta has {m} entries", labels.len()));
            }
            if let Err(e) = TypeAlphabet::new(labels.iter().cloned()) {
                bad("model.types", e.to_string());
            }
        }
        let mut kernel_ok = self.model.kernel.len() == m;
        if !kernel_ok {
            bad("model.kernel", format!("must have {m} rows to match model.eta, has {}", self.model.kernel.len()));
        }
        for (a, row) in self.model.kernel.iter().enumerate() {
            if row.len() != m {
                kernel_ok = false;
                bad(&format!("model.kernel[{a}]"), format!("must have {m} entries, has {}", row.len()));
                continue;
            }
            for (b, &c) in row.iter().enumerate() {
                if !c.is_finite() || c < 0.0 {
                    kernel_ok = false;
                    bad(&format!("model.kernel[{a}][{b}]"), format!("must be finite and nonnegative, got {c}"));
                }
            }
        }
        if kernel_ok && self.model.symmetric {
            for a in 0..m {
                for b in a + 1..m {
                    if self.model.kernel[a][b] != self.model.kernel[b][a] {
                        bad("model.symmetric", format!("kernel is not symmetric: entry [{a}][{b}] = {} but [{b}][{a}] = {}", self.model.kernel[a][b], self.model.kernel[b][a]));
                    }
                }
            }
        }
        if self.workers == 0 {
            bad("workers", "must be at least 1".into());
        }
        if self.replicas == Some(0) {
            bad("replicas", "must be at least 1".into());
        }
        if self.caps.degree == 0 {
            bad("caps.degree", "must be at least 1".into());
        }
        if self.caps.neighbourhood == 0 {
            bad("caps.neighbourhood", "must be at least 1".into());
        }
        if let Some(t) = self.tilt {
            if !t.is_finite() {
                bad("tilt", format!("must be finite, got {t}"));
            }
        }

        let needs_n = matches!(self.experiment, ExperimentKind::Lln | ExperimentKind::Enumerate | ExperimentKind::RareEvent);
        match self.model.n {
            Some(0) => bad("model.n", "must be at least 1".into()),
            None if needs_n => bad("model.n", format!("required by experiment `{}`", self.experiment)),
            _ => {}
        }
        if self.experiment == ExperimentKind::SlopeScan {
            match &self.model.n_grid {
                None => bad("model.n_grid", "required by experiment `slope-scan`".into()),
                Some(grid) if grid.is_empty() => bad("model.n_grid", "must not be empty".into()),
                Some(grid) => {
                    if grid.iter().any(|&n| n < 2) {
                        bad("model.n_grid", "every n must be at least 2".into());
                    }
                    if grid.windows(2).any(|w| w[0] >= w[1]) {
                        bad("model.n_grid", "must be strictly increasing".into());
                    }
                }
            }
        }
        if matches!(self.experiment, ExperimentKind::RareEvent | ExperimentKind::SlopeScan) {
            match &self.event {
                None => bad("event", format!("required by experiment `{}`", self.experiment)),
                Some(ev) => validate_event(ev, self.tilt.is_some(), &mut bad),
            }
        }
        if self.experiment == ExperimentKind::RateLandscape {
            if m != 1 {
                bad("model.eta", "rate-landscape needs a single-type model".into());
            } else if self.model.kernel.first().and_then(|r| r.first()).is_some_and(|&c| c <= 0.0) {
                bad("model.kernel[0][0]", "rate-landscape needs a positive kernel value".into());
            }
            if self.points.is_some_and(|p| p < 2) {
                bad("points", "must be at least 2".into());
            }
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                bad("tolerance", format!("must be positive, got {tol}"));
            }
        }
        if let Some(names) = &self.observables {
            for (i, s) in names.iter().enumerate() {
                if let Err(e) = s.parse::<ObservableKind>() {
                    bad(&format!("observables[{i}]"), e.to_string());
                }
            }
        }

        if report.violations.is_empty() && self.experiment == ExperimentKind::Enumerate {
            if let Some(n) = self.model.n {
                if let Ok(spec) = self.model_spec(n) {
                    let required = enumeration_budget(&spec);
                    if required > ENUMERATION_BUDGET {
                        report.warnings.push(format!(
                            "enumeration needs {required:.6e} configurations (|types|^n * 2^(n(n-1)/2)), above the budget of {ENUMERATION_BUDGET:.0e}"
                        ));
                    }
                }
            }
        }
        report
    }
}

fn validate_event(ev: &EventConfig, tilt_given: bool, bad: &mut impl FnMut(&str, String)) {
    match ev.kind {
        EventKind::NoEdges => {}
        EventKind::PairBall => {
            match ev.factor {
                None => bad("event.factor", "required for pair-ball".into()),
                Some(f) if !(f > 0.0 && f.is_finite()) => bad("event.factor", format!("must be positive, got {f}")),
                _ => {}
            }
            match ev.radius {
                None => bad("event.radius", "required for pair-ball".into()),
                Some(r) if !(r > 0.0 && r.is_finite()) => bad("event.radius", format!("must be positive, got {r}")),
                _ => {}
            }
        }
        EventKind::IsolatedAtLeast | EventKind::IsolatedAtMost => {
            match ev.threshold {
                None => bad("event.threshold", "required for isolated-fraction events".into()),
                Some(z) if !(0.0..=1.0).contains(&z) => bad("event.threshold", format!("must lie in [0, 1], got {z}")),
                _ => {}
            }
            if !tilt_given {
                bad("tilt", "isolated-fraction events need an explicit tilt".into());
            }
        }
    }
}
