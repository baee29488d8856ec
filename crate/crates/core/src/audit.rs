//! Audit reports, deterministic point sampling and a small parallel map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::linalg::{self, Matrix};
use crate::metric::Metric;

/// One named residual check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// `None` when the quantity could not be evaluated (serialized as null).
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64, x: &[f64], y: &[f64]) -> Check {
        Check {
            name: name.into(),
            residual: Some(residual),
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }

    /// A check whose residual could not be computed; always failing.
    pub fn failed(name: impl Into<String>, tolerance: f64, x: &[f64], y: &[f64]) -> Check {
        Check {
            name: name.into(),
            residual: None,
            tolerance,
            pass: false,
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }

    pub fn from_result(name: impl Into<String>, residual: Result<f64>, tolerance: f64, x: &[f64], y: &[f64]) -> Check {
        match residual {
            Ok(r) => Check::new(name, r, tolerance, x, y),
            Err(_) => Check::failed(name, tolerance, x, y),
        }
    }

    /// A check that passes when `residual >= threshold` (negative controls
    /// and lower bounds).
    pub fn at_least(name: impl Into<String>, residual: f64, threshold: f64, x: &[f64], y: &[f64]) -> Check {
        Check {
            name: name.into(),
            residual: Some(residual),
            tolerance: threshold,
            pass: residual.is_finite() && residual >= threshold,
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }
}

/// Collection of checks with an overall verdict (logical AND).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub verdict: bool,
    pub seed: u64,
    pub samples_used: usize,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AuditReport {
    pub fn new(seed: u64, samples_used: usize, checks: Vec<Check>) -> AuditReport {
        AuditReport {
            verdict: checks.iter().all(|c| c.pass),
            seed,
            samples_used,
            checks,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> AuditReport {
        self.note = Some(note.into());
        self
    }

    /// Concatenates reports; the verdict is the AND of all checks.
    pub fn merge(seed: u64, reports: Vec<AuditReport>) -> AuditReport {
        let samples_used = reports.iter().map(|r| r.samples_used).max().unwrap_or(0);
        let notes: Vec<String> = reports.iter().filter_map(|r| r.note.clone()).collect();
        let checks = reports.into_iter().flat_map(|r| r.checks).collect();
        let mut merged = AuditReport::new(seed, samples_used, checks);
        if !notes.is_empty() {
            merged.note = Some(notes.join("; "));
        }
        merged
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Largest residual among checks whose name starts with `prefix`.
    pub fn max_residual(&self, prefix: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .filter_map(|c| c.residual)
            .reduce(f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Largest `|v|` over a collection, at least 1; used to scale tolerances.
pub fn scale_of<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Retry budget when drawing admissible points.
pub const MAX_RETRIES: usize = 100;

/// `|det g|` must exceed this fraction of `(max|g_ij|)^n` for a sample to be used.
const SAMPLE_DET_MARGIN: f64 = 1e-8;
/// `L(x, y)` must exceed this fraction of `max|y_i|` for a sample to be used.
const SAMPLE_LENGTH_MARGIN: f64 = 0.05;

/// True when `(x, y)` lies well inside the admissible cone: `L > 0`, finite
/// and non-degenerate fundamental tensor, away from the cone boundary.
pub fn well_conditioned(metric: &dyn Metric, x: &[f64], y: &[f64]) -> bool {
    let Ok(f) = metric.energy_jet(x, y, 2) else {
        return false;
    };
    let n = metric.dim();
    let l = (2.0 * f.value()).sqrt();
    let y_max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if l.is_nan() || l <= SAMPLE_LENGTH_MARGIN * y_max {
        return false;
    }
    let g: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| f.partial_vars(&[n + i, n + j]).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    if g.iter().flatten().any(|v| !v.is_finite()) {
        return false;
    }
    !linalg::is_degenerate(&g, SAMPLE_DET_MARGIN)
}

fn uniform_in(rng: &mut ChaCha8Rng, intervals: &[(f64, f64)]) -> Vec<f64> {
    intervals.iter().map(|&(a, b)| rng.gen_range(a..b)).collect()
}

/// Seeded generator of admissible evaluation points.
pub struct PointSampler {
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(seed: u64) -> PointSampler {
        PointSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, intervals: &[(f64, f64)]) -> Vec<f64> {
        uniform_in(&mut self.rng, intervals)
    }

    /// Draws `(x, y)` from the metric's sampling box until the point is well
    /// conditioned, at most [`MAX_RETRIES`] times.
    pub fn point(&mut self, metric: &dyn Metric) -> Result<(Vec<f64>, Vec<f64>)> {
        let domain = metric.sampling_domain();
        for _ in 0..MAX_RETRIES {
            let x = uniform_in(&mut self.rng, &domain.x);
            let y = uniform_in(&mut self.rng, &domain.y);
            if well_conditioned(metric, &x, &y) {
                return Ok((x, y));
            }
        }
        Err(FinslerError::SamplingExhausted(format!(
            "no admissible point after {MAX_RETRIES} draws"
        )))
    }

    /// Position only, from the sampling box.
    pub fn position(&mut self, metric: &dyn Metric) -> Vec<f64> {
        let domain = metric.sampling_domain();
        uniform_in(&mut self.rng, &domain.x)
    }

    /// A direction at fixed `x`, drawn until well conditioned.
    pub fn direction(&mut self, metric: &dyn Metric, x: &[f64]) -> Result<Vec<f64>> {
        let domain = metric.sampling_domain();
        for _ in 0..MAX_RETRIES {
            let y = uniform_in(&mut self.rng, &domain.y);
            if well_conditioned(metric, x, &y) {
                return Ok(y);
            }
        }
        Err(FinslerError::SamplingExhausted(format!(
            "no admissible direction at x = {x:?} after {MAX_RETRIES} draws"
        )))
    }

    /// `count` admissible points, drawn sequentially.
    pub fn points(&mut self, metric: &dyn Metric, count: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        (0..count).map(|_| self.point(metric)).collect()
    }

    /// Standard normal vector (Box-Muller).
    pub fn gaussian(&mut self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|_| {
                let u: f64 = self.rng.gen_range(f64::EPSILON..1.0);
                let v: f64 = self.rng.gen_range(0.0..1.0);
                (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
            })
            .collect()
    }
}

/// Radical inverse of `index` in `base` (van der Corput).
fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

const PRIMES: [usize; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// The first `count` well-conditioned directions of the Halton sequence in the
/// metric's direction box, at position `x`.
pub fn halton_directions(metric: &dyn Metric, x: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
    let domain = metric.sampling_domain();
    let mut out = Vec::with_capacity(count);
    let mut index = 1;
    while out.len() < count {
        if index > MAX_RETRIES * count {
            return Err(FinslerError::SamplingExhausted(format!(
                "only {} of {count} admissible low-discrepancy directions found",
                out.len()
            )));
        }
        let y: Vec<f64> = domain
            .y
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| a + (b - a) * radical_inverse(index, PRIMES[k % PRIMES.len()]))
            .collect();
        index += 1;
        if well_conditioned(metric, x, &y) {
            out.push(y);
        }
    }
    Ok(out)
}

/// Maps `f` over `items` on a rayon pool of `threads` workers; output order
/// follows input order regardless of the thread count.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if threads <= 1 {
        return items.iter().map(&f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        // Without a pool the serial map gives the same output.
        Err(_) => items.iter().map(&f).collect(),
    }
}
