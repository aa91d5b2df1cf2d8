//! Numerical contraction of the degree rate onto the isolated fraction.
//!
//! Minimizes `lambda(d)` over degree distributions on `0..=k_max` with `d(0) = z` by
//! exponentiated-gradient (mirror) descent on the simplex of `d(1..)`, from several starts.

use crate::empirical::DegreeDistribution;
use crate::error::{Error, Result};
use crate::rates::degree_rate_lambda;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionResult {
    pub value: f64,
    pub minimizer: DegreeDistribution,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 20_000;
const STEP: f64 = 0.5;

fn ln_factorials(k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    for k in 1..=k_max {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

fn lambda_of(pmf: &[f64], c: f64) -> Result<f64> {
    Ok(degree_rate_lambda(&DegreeDistribution::new(pmf.to_vec(), 0.0)?, c)?.value)
}

/// Gradient of `lambda` with respect to `d(k)`: `log d(k) + 1 + log k! - (k/2) log(c <d>)`.
fn descend(start: Vec<f64>, z: f64, c: f64, lf: &[f64]) -> Result<(Vec<f64>, f64, usize)> {
    let mut d = start;
    let mut value = lambda_of(&d, c)?;
    for it in 1..=MAX_ITERATIONS {
        let mean: f64 = d.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let log_mc = (c * mean).ln();
        let mut logs: Vec<f64> = (1..d.len())
            .map(|k| {
                if d[k] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let grad = d[k].ln() + 1.0 + lf[k] - 0.5 * k as f64 * log_mc;
                d[k].ln() - STEP * grad
            })
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logs.iter_mut().for_each(|l| *l = (*l - top).exp());
        let norm: f64 = logs.iter().sum();
        let mut next = Vec::with_capacity(d.len());
        next.push(z);
        next.extend(logs.iter().map(|w| (1.0 - z) * w / norm));
        let next_value = lambda_of(&next, c)?;
        let done = (value - next_value).abs() <= 1e-15 * value.abs().max(1.0);
        d = next;
        value = next_value;
        if done {
            return Ok((d, value, it));
        }
    }
    Ok((d, value, MAX_ITERATIONS))
}

/// `min { lambda(d) : d(0) = z }` over distributions supported on `0..=k_max`.
pub fn minimize_lambda_given_isolated(z: f64, c: f64, k_max: usize) -> Result<ContractionResult> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("z must lie in [0, 1], got {z}")));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::Domain(format!("kernel value must be positive, got {c}")));
    }
    if k_max < 1 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    if z == 1.0 {
        let d = DegreeDistribution::point_mass(0, k_max)?;
        let value = degree_rate_lambda(&d, c)?.value;
        return Ok(ContractionResult { value, minimizer: d, iterations: 0 });
    }
    let lf = ln_factorials(k_max);
    let starts: Vec<Vec<f64>> = [0.5, c, 3.0 * c + 1.0]
        .iter()
        .map(|&s| {
            // Truncated Poisson-shaped start on 1..=k_max, plus a uniform floor so every entry is positive.
            let raw: Vec<f64> = (1..=k_max).map(|k| (k as f64 * s.ln() - lf[k]).exp() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            std::iter::once(z).chain(raw.iter().map(|w| (1.0 - z) * w / total)).collect()
        })
        .collect();
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    for start in starts {
        let run = descend(start, z, c, &lf)?;
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (pmf, value, iterations) = best.expect("at least one start");
    Ok(ContractionResult { value, minimizer: DegreeDistribution::new(pmf, 0.0)?, iterations })
}
