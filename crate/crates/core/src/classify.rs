//! Metric audits and classification: homogeneity and the identity suite,
//! m-th root regularity, the Berwald and locally Minkowski tests and
//! conformal equivalence.
//!
//! Every audit draws its points from a seeded [`PointSampler`] sequentially
//! and evaluates them with [`par_map`], so reports are identical for any
//! thread count.

use serde::Serialize;

use crate::audit::{halton_directions, par_map, scale_of, well_conditioned, AuditReport, Check, PointSampler};
use crate::error::{FinslerError, Result};
use crate::linalg::{det, Matrix};
use crate::metric::{Metric, MetricSpec};
use crate::tensor::{
    berwald_coefficients, fundamental_tensor, mth_root_tensors, nonlinear_connection, spray_coefficients, SprayJets,
};

/// Relative tolerance of the homogeneity checks.
pub const HOMOGENEITY_TOL: f64 = 1e-8;

/// Tolerance of first-order identities (Euler relations, null directions).
pub const IDENTITY_TOL: f64 = 1e-8;

/// Tolerance of identities involving inverse or higher derivatives.
pub const IDENTITY_TOL_LOOSE: f64 = 1e-6;

/// Default tolerance of the Berwald test.
pub const BERWALD_TOL: f64 = 1e-6;

/// Tolerance of the locally Minkowski certificate.
pub const MINKOWSKI_TOL: f64 = 1e-8;

/// Largest spread of `ln(L_B/L_A)` across directions for conformal pass.
pub const CONFORMAL_TOL: f64 = 1e-8;

/// Relative threshold below which `det(a_ij)` counts as singular.
pub const REGULARITY_TOL: f64 = 1e-10;

/// Scale factors used by the homogeneity checks.
const SCALINGS: [f64; 2] = [0.5, 2.0];

fn require_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(FinslerError::InvalidArgument("need at least one sample".into()));
    }
    Ok(())
}

fn scaled(y: &[f64], lambda: f64) -> Vec<f64> {
    y.iter().map(|v| lambda * v).collect()
}

fn max_abs_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

fn flatten(m: &Matrix) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

/// `∂L/∂y^i = F_{y^i} / L` and `∂L/∂x^i = F_{x^i} / L` at one point.
fn length_gradients(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = metric.dim();
    let energy = metric.energy_jet(x, y, 1)?;
    let length = (2.0 * energy.value()).sqrt();
    let grad = |slot: usize| energy.partial_vars(&[slot]).map(|d| d / length);
    let dx = (0..n).map(grad).collect::<Result<_>>()?;
    let dy = (0..n).map(|i| grad(n + i)).collect::<Result<_>>()?;
    Ok((length, dx, dy))
}

/// Degree-1 scaling and Euler relation of `L`, degree 0 of `g`, degree 2 of
/// `G` and degree 1 of `N`, at `samples` seeded points.
pub fn homogeneity_audit(metric: &dyn Metric, samples: usize, seed: u64, threads: usize) -> Result<AuditReport> {
    require_samples(samples)?;
    let points = PointSampler::new(seed).points(metric, samples)?;
    let checks = par_map(&points, threads, |(x, y)| homogeneity_checks(metric, x, y));
    Ok(AuditReport::new(seed, samples, checks.into_iter().flatten().collect()))
}

fn homogeneity_checks(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Vec<Check> {
    let tol = HOMOGENEITY_TOL;
    let scaling = || -> Result<f64> {
        let length = metric.length(x, y)?;
        let mut worst: f64 = 0.0;
        for lambda in SCALINGS {
            let scaled_length = metric.length(x, &scaled(y, lambda))?;
            worst = worst.max((scaled_length - lambda * length).abs() / (lambda * length).max(1.0));
        }
        Ok(worst)
    };
    let euler = || -> Result<f64> {
        let (length, _, dy) = length_gradients(metric, x, y)?;
        let contracted: f64 = y.iter().zip(&dy).map(|(a, b)| a * b).sum();
        Ok((contracted - length).abs() / length.max(1.0))
    };
    let degree = |power: i32, eval: &dyn Fn(&[f64]) -> Result<Vec<f64>>| -> Result<f64> {
        let base = eval(y)?;
        let mut worst: f64 = 0.0;
        for lambda in SCALINGS {
            let factor = lambda.powi(power);
            let expected: Vec<f64> = base.iter().map(|v| factor * v).collect();
            let got = eval(&scaled(y, lambda))?;
            worst = worst.max(max_abs_diff(&got, &expected) / scale_of(&expected));
        }
        Ok(worst)
    };
    vec![
        Check::from_result("homogeneity.scaling", scaling(), tol, x, y),
        Check::from_result("homogeneity.euler", euler(), tol, x, y),
        Check::from_result(
            "homogeneity.fundamental_tensor",
            degree(0, &|v| fundamental_tensor(metric, x, v).map(|g| flatten(&g))),
            tol,
            x,
            y,
        ),
        Check::from_result(
            "homogeneity.spray",
            degree(2, &|v| spray_coefficients(metric, x, v)),
            tol,
            x,
            y,
        ),
        Check::from_result(
            "homogeneity.nonlinear_connection",
            degree(1, &|v| nonlinear_connection(metric, x, v).map(|m| flatten(&m))),
            tol,
            x,
            y,
        ),
    ]
}

/// The tensor identity suite at `samples` seeded points: Euler relation of
/// `L`, `g(y, y) = L²`, `y^i h_ij = 0`, `g^ij h_ij = n − 1`, `y^i C_ijk = 0`,
/// `y^i ∂_i C_jkm + C_jkm = 0` and `½ ∂g^{ki}/∂y^m + C^{ki}_m = 0`.
pub fn identity_suite(metric: &dyn Metric, samples: usize, seed: u64, threads: usize) -> Result<AuditReport> {
    require_samples(samples)?;
    let points = PointSampler::new(seed).points(metric, samples)?;
    let checks = par_map(&points, threads, |(x, y)| match identity_residuals(metric, x, y) {
        Ok(residuals) => residuals
            .into_iter()
            .map(|(name, residual, tol)| Check::new(name, residual, tol, x, y))
            .collect(),
        Err(_) => IDENTITY_NAMES
            .iter()
            .map(|&(name, tol)| Check::failed(name, tol, x, y))
            .collect::<Vec<_>>(),
    });
    Ok(AuditReport::new(seed, samples, checks.into_iter().flatten().collect()))
}

const IDENTITY_NAMES: [(&str, f64); 7] = [
    ("identity.euler", IDENTITY_TOL),
    ("identity.norm", IDENTITY_TOL),
    ("identity.angular_null", IDENTITY_TOL),
    ("identity.angular_trace", IDENTITY_TOL_LOOSE),
    ("identity.cartan_null", IDENTITY_TOL),
    ("identity.cartan_derivative", IDENTITY_TOL_LOOSE),
    ("identity.inverse_derivative", IDENTITY_TOL_LOOSE),
];

/// Residuals of the identity suite, each divided by the magnitude of the
/// terms that cancel (at least 1), paired with their names and tolerances.
pub fn identity_residuals(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Vec<(&'static str, f64, f64)>> {
    let n = metric.dim();
    let sj = SprayJets::compute(metric, x, y, 4)?;
    let yv = |i: usize| n + i;
    let d = |vars: &[usize]| sj.energy.partial_vars(vars);
    let energy = sj.energy.value();
    let length = (2.0 * energy).sqrt();
    let g = sj.g_values();
    let g_inv: Matrix = (0..n)
        .map(|i| (0..n).map(|j| sj.g_inv[i][j].value()).collect())
        .collect();
    let cartan = |i: usize, j: usize, k: usize| d(&[yv(i), yv(j), yv(k)]).map(|v| 0.5 * v);

    // Residual of a cancelling sum, relative to max(1, Σ|terms|).
    let relative = |terms: &[f64]| -> f64 {
        let total: f64 = terms.iter().sum();
        total.abs() / terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0)
    };

    let mut dl = Vec::with_capacity(n);
    for i in 0..n {
        dl.push(d(&[yv(i)])? / length);
    }
    let euler_terms: Vec<f64> = (0..n).map(|i| y[i] * dl[i]).collect();
    let euler = (euler_terms.iter().sum::<f64>() - length).abs() / (1.0 + length);

    let mut norm_value = 0.0;
    for i in 0..n {
        for j in 0..n {
            norm_value += g[i][j] * y[i] * y[j];
        }
    }
    let norm = (norm_value - length * length).abs() / (length * length);

    let y_low: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g[i][j] * y[j]).sum()).collect();
    let h = |i: usize, j: usize| g[i][j] - y_low[i] * y_low[j] / (length * length);
    let mut angular_null: f64 = 0.0;
    let mut trace = 0.0;
    for j in 0..n {
        let terms: Vec<f64> = (0..n).map(|i| y[i] * h(i, j)).collect();
        angular_null = angular_null.max(relative(&terms));
        for i in 0..n {
            trace += g_inv[i][j] * h(i, j);
        }
    }
    let angular_trace = (trace - (n as f64 - 1.0)).abs();

    let mut cartan_null: f64 = 0.0;
    let mut cartan_derivative: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let terms = (0..n)
                .map(|i| Ok(y[i] * cartan(i, j, k)?))
                .collect::<Result<Vec<f64>>>()?;
            cartan_null = cartan_null.max(relative(&terms));
            for m in 0..n {
                let mut terms = (0..n)
                    .map(|i| Ok(y[i] * 0.5 * d(&[yv(i), yv(j), yv(k), yv(m)])?))
                    .collect::<Result<Vec<f64>>>()?;
                terms.push(cartan(j, k, m)?);
                cartan_derivative = cartan_derivative.max(relative(&terms));
            }
        }
    }

    let mut inverse_derivative: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for m in 0..n {
                let mut terms = vec![0.5 * sj.g_inv[k][i].partial_vars(&[yv(m)])?];
                for a in 0..n {
                    for b in 0..n {
                        terms.push(g_inv[k][a] * g_inv[i][b] * cartan(a, b, m)?);
                    }
                }
                inverse_derivative = inverse_derivative.max(relative(&terms));
            }
        }
    }

    let values = [
        euler,
        norm,
        angular_null,
        angular_trace,
        cartan_null,
        cartan_derivative,
        inverse_derivative,
    ];
    Ok(IDENTITY_NAMES
        .iter()
        .zip(values)
        .map(|(&(name, tol), residual)| (name, residual, tol))
        .collect())
}

/// Determinant of `a_ij` for an m-th root metric and whether it is regular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regularity {
    pub det_a: f64,
    pub regular: bool,
}

/// `det(a_ij)` at `(x, y)`; regular iff `|det| > 10⁻¹⁰·max(1, max|a_ij|)ⁿ`.
pub fn regularity(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Regularity> {
    let tensors = mth_root_tensors(spec, x, y)?;
    let det_a = det(&tensors.a_ij);
    let scale = scale_of(tensors.a_ij.iter().flatten()).powi(spec.dim as i32);
    Ok(Regularity {
        det_a,
        regular: det_a.abs() > REGULARITY_TOL * scale,
    })
}

/// Berwald test: at each sampled position, `G^i_jk` must agree across
/// `2n + 3` low-discrepancy directions to `tol·scale`; each direction also
/// checks `G^i_jk y^j y^k = 2G^i`.
pub fn berwald_test(metric: &dyn Metric, samples: usize, seed: u64, tol: f64, threads: usize) -> Result<AuditReport> {
    require_samples(samples)?;
    let n = metric.dim();
    let mut sampler = PointSampler::new(seed);
    let mut positions = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (x, _) = sampler.point(metric)?;
        let directions = halton_directions(metric, &x, 2 * n + 3)?;
        positions.push((x, directions));
    }
    let checks = par_map(&positions, threads, |(x, directions)| {
        berwald_checks(metric, x, directions, tol)
    });
    Ok(AuditReport::new(seed, samples, checks.into_iter().flatten().collect()))
}

fn berwald_checks(metric: &dyn Metric, x: &[f64], directions: &[Vec<f64>], tol: f64) -> Vec<Check> {
    let n = metric.dim();
    let mut checks = Vec::new();
    let mut coefficients = Vec::new();
    for y in directions {
        let euler = || -> Result<(Vec<f64>, f64)> {
            let berwald = berwald_coefficients(metric, x, y)?;
            let spray = spray_coefficients(metric, x, y)?;
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let mut contracted = 0.0;
                let mut magnitude = 2.0 * spray[i].abs();
                for j in 0..n {
                    for k in 0..n {
                        let term = berwald[i][j][k] * y[j] * y[k];
                        contracted += term;
                        magnitude += term.abs();
                    }
                }
                worst = worst.max((contracted - 2.0 * spray[i]).abs() / magnitude.max(1.0));
            }
            Ok((berwald.into_iter().flatten().flatten().collect(), worst))
        };
        match euler() {
            Ok((flat, residual)) => {
                checks.push(Check::new("berwald.euler", residual, IDENTITY_TOL, x, y));
                coefficients.push(flat);
            }
            Err(_) => checks.push(Check::failed("berwald.euler", IDENTITY_TOL, x, y)),
        }
    }
    let reference = &directions[0];
    if coefficients.len() == directions.len() {
        let scale = scale_of(coefficients.iter().flatten());
        let deviation = coefficients[1..]
            .iter()
            .map(|c| max_abs_diff(c, &coefficients[0]))
            .fold(0.0, f64::max);
        checks.push(Check::new("berwald.deviation", deviation / scale, tol, x, reference));
    } else {
        checks.push(Check::failed("berwald.deviation", tol, x, reference));
    }
    checks
}

const MINKOWSKI_NOTE: &str = "locally Minkowski is certified in the given chart only: a pass means L does \
not depend on x in these coordinates; a fail does not rule out adapted coordinates elsewhere";

/// Chart-level locally Minkowski certificate: `|∂L/∂x^i| ≤ 10⁻⁸·max(1, L)`
/// at every sample.
pub fn locally_minkowski_test(metric: &dyn Metric, samples: usize, seed: u64, threads: usize) -> Result<AuditReport> {
    require_samples(samples)?;
    let points = PointSampler::new(seed).points(metric, samples)?;
    let checks = par_map(&points, threads, |(x, y)| {
        let residual = length_gradients(metric, x, y)
            .map(|(length, dx, _)| dx.iter().fold(0.0, |m: f64, v| m.max(v.abs())) / length.max(1.0));
        Check::from_result("minkowski.position_gradient", residual, MINKOWSKI_TOL, x, y)
    });
    Ok(AuditReport::new(seed, samples, checks).with_note(MINKOWSKI_NOTE))
}

/// Estimate of the conformal factor at one position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalEstimate {
    pub x: Vec<f64>,
    /// Mean of `ln(L_B/L_A)` over the sampled directions.
    pub c: f64,
    /// Spread (max − min) of `ln(L_B/L_A)` over the directions.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalResult {
    pub is_conformal: bool,
    pub estimates: Vec<ConformalEstimate>,
    pub report: AuditReport,
}

/// Tests `L_B = e^{c(x)} L_A`: at each sampled position the log-ratio must
/// not vary across `2n + 3` low-discrepancy directions admissible for both.
pub fn conformal_check(a: &dyn Metric, b: &dyn Metric, samples: usize, seed: u64) -> Result<ConformalResult> {
    require_samples(samples)?;
    if a.dim() != b.dim() {
        return Err(FinslerError::InvalidArgument(format!(
            "metrics have dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let n = a.dim();
    let mut sampler = PointSampler::new(seed);
    let mut estimates = Vec::with_capacity(samples);
    let mut checks = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (x, _) = sampler.point(a)?;
        let directions = common_directions(a, b, &x, 2 * n + 3)?;
        let mut ratios = Vec::with_capacity(directions.len());
        for y in &directions {
            let la = a.length(&x, y)?;
            let lb = b.length(&x, y)?;
            if !(la > 0.0 && lb > 0.0) {
                return Err(FinslerError::OutsideDomain(format!(
                    "non-positive length at x = {x:?}, y = {y:?}"
                )));
            }
            ratios.push((lb / la).ln());
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let c = ratios.iter().sum::<f64>() / ratios.len() as f64;
        checks.push(Check::new(
            "conformal.spread",
            hi - lo,
            CONFORMAL_TOL,
            &x,
            &directions[0],
        ));
        estimates.push(ConformalEstimate { x, c, spread: hi - lo });
    }
    let report = AuditReport::new(seed, samples, checks);
    Ok(ConformalResult {
        is_conformal: report.verdict,
        estimates,
        report,
    })
}

/// The first `count` low-discrepancy directions admissible for both metrics.
fn common_directions(a: &dyn Metric, b: &dyn Metric, x: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
    let candidates = halton_directions(a, x, COMMON_DIRECTION_POOL * count)?;
    let common: Vec<Vec<f64>> = candidates
        .into_iter()
        .filter(|y| well_conditioned(b, x, y))
        .take(count)
        .collect();
    if common.len() < count {
        return Err(FinslerError::OutsideDomain(format!(
            "only {} of {count} sampled directions at x = {x:?} are admissible for both metrics",
            common.len()
        )));
    }
    Ok(common)
}

/// Candidate directions drawn per requested common direction.
const COMMON_DIRECTION_POOL: usize = 8;
