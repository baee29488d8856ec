//! Geodesics in normalized arc length, conserved-quantity monitoring and
//! Euler-Lagrange residuals of sampled curves.

use serde::Serialize;

use crate::audit::{AuditReport, Check};
use crate::error::{FinslerError, Result};
use crate::metric::{Metric, MetricKind, MetricSpec};
use crate::tensor::spray_coefficients;

/// Default integration step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Precision in `τ` to which a domain exit is localized.
pub const EXIT_RESOLUTION: f64 = 1e-8;

/// Default relative drift accepted by [`conservation_report`].
pub const DRIFT_TOL: f64 = 1e-6;

/// One classic fourth-order Runge-Kutta step of `s' = f(s)`.
pub fn rk4_step(state: &[f64], h: f64, f: &impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { state.iter().zip(k).map(|(s, k)| s + a * k).collect() };
    let k1 = f(state)?;
    let k2 = f(&axpy(h / 2.0, &k1))?;
    let k3 = f(&axpy(h / 2.0, &k2))?;
    let k4 = f(&axpy(h, &k3))?;
    Ok((0..state.len())
        .map(|i| state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Quantities logged at each sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleLog {
    #[serde(rename = "L")]
    pub length: f64,
    pub energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clairaut: Option<f64>,
}

/// Why and where an integration stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainExit {
    pub tau: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub taus: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub logs: Vec<SampleLog>,
    pub exit: Option<DomainExit>,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn endpoint(&self) -> (&[f64], &[f64]) {
        let last = self.len() - 1;
        (&self.xs[last], &self.ys[last])
    }

    /// CSV with header `tau,x0..,y0..,L,E[,clairaut]`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.xs.first().map_or(0, Vec::len);
        let with_clairaut = self.logs.iter().any(|l| l.clairaut.is_some());
        let mut header = vec!["tau".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("y{i}")));
        header.push("L".into());
        header.push("E".into());
        if with_clairaut {
            header.push("clairaut".into());
        }
        let mut out = header.join(",");
        out.push('\n');
        for k in 0..self.len() {
            let mut row: Vec<f64> = vec![self.taus[k]];
            row.extend(&self.xs[k]);
            row.extend(&self.ys[k]);
            row.push(self.logs[k].length);
            row.push(self.logs[k].energy);
            if with_clairaut {
                row.push(self.logs[k].clairaut.unwrap_or(f64::NAN));
            }
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `E = y^i ∂F/∂y^i − F`, equal to `F` for a 2-homogeneous `F`.
pub fn energy_integral(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = metric.dim();
    let f = metric.energy_jet(x, y, 1)?;
    let mut e = -f.value();
    for (i, yi) in y.iter().enumerate() {
        e += yi * f.partial_vars(&[n + i])?;
    }
    Ok(e)
}

/// `r cos α = r² θ̇ / √(2E)` on a surface of revolution in coordinates `(z, θ)`.
pub fn clairaut_invariant(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if !matches!(spec.kind, MetricKind::Revolution { .. }) {
        return Err(FinslerError::InvalidArgument(
            "Clairaut invariant needs a surface of revolution".into(),
        ));
    }
    let (r, _) = spec.profile_at(x[0])?;
    let e = energy_integral(spec, x, y)?;
    if e <= 0.0 {
        return Err(FinslerError::OutsideDomain("zero velocity".into()));
    }
    Ok(r * r * y[1] / (2.0 * e).sqrt())
}

fn sample_log(metric: &dyn Metric, spec: Option<&MetricSpec>, x: &[f64], y: &[f64]) -> Result<SampleLog> {
    let length = metric.length(x, y)?;
    let energy = energy_integral(metric, x, y)?;
    let clairaut = match spec {
        Some(s) if matches!(s.kind, MetricKind::Revolution { .. }) => Some(clairaut_invariant(s, x, y)?),
        _ => None,
    };
    if !(length.is_finite() && energy.is_finite()) {
        return Err(FinslerError::NumericalInstability("non-finite length".into()));
    }
    Ok(SampleLog {
        length,
        energy,
        clairaut,
    })
}

/// Integrates `x' = y, y' = −2G(x, y)` from `(x0, y0)` rescaled to unit
/// length, sampling every step. Leaving the admissible cone truncates the
/// path at the last valid `τ` (localized by bisection) and records the exit.
pub fn integrate_geodesic(
    metric: &dyn Metric,
    x0: &[f64],
    y0: &[f64],
    tau_max: f64,
    step: f64,
) -> Result<GeodesicPath> {
    integrate(metric, None, x0, y0, tau_max, step)
}

/// [`integrate_geodesic`] for a spec, logging the Clairaut invariant on
/// surfaces of revolution.
pub fn integrate_spec_geodesic(
    spec: &MetricSpec,
    x0: &[f64],
    y0: &[f64],
    tau_max: f64,
    step: f64,
) -> Result<GeodesicPath> {
    integrate(spec, Some(spec), x0, y0, tau_max, step)
}

fn integrate(
    metric: &dyn Metric,
    spec: Option<&MetricSpec>,
    x0: &[f64],
    y0: &[f64],
    tau_max: f64,
    step: f64,
) -> Result<GeodesicPath> {
    let n = metric.dim();
    if !(step > 0.0 && step.is_finite()) || !(tau_max >= 0.0 && tau_max.is_finite()) {
        return Err(FinslerError::InvalidArgument(format!(
            "need step > 0 and tau_max ≥ 0, got step = {step}, tau_max = {tau_max}"
        )));
    }
    let l0 = metric.length(x0, y0)?;
    let y0: Vec<f64> = y0.iter().map(|v| v / l0).collect();
    let rhs = |s: &[f64]| -> Result<Vec<f64>> {
        let (x, y) = s.split_at(n);
        let g = spray_coefficients(metric, x, y)?;
        Ok(y.iter().copied().chain(g.iter().map(|v| -2.0 * v)).collect())
    };
    // A step is accepted only if the new point can be logged.
    let advance = |s: &[f64], h: f64| -> Result<(Vec<f64>, SampleLog)> {
        let next = rk4_step(s, h, &rhs)?;
        let log = sample_log(metric, spec, &next[..n], &next[n..])?;
        Ok((next, log))
    };

    let mut state: Vec<f64> = x0.iter().chain(&y0).copied().collect();
    let mut path = GeodesicPath {
        taus: vec![0.0],
        xs: vec![x0.to_vec()],
        ys: vec![y0.clone()],
        logs: vec![sample_log(metric, spec, x0, &y0)?],
        exit: None,
    };
    let steps = (tau_max / step - 1e-9).ceil().max(0.0) as usize;
    let mut tau = 0.0;
    for k in 0..steps {
        let target = if k + 1 == steps { tau_max } else { (k + 1) as f64 * step };
        let h = target - tau;
        match advance(&state, h) {
            Ok((next, log)) => {
                state = next;
                tau = target;
                path.push(tau, &state, n, log);
            }
            Err(err) => {
                let (mut lo, mut hi) = (0.0, h);
                let mut best = None;
                while hi - lo > EXIT_RESOLUTION {
                    let mid = 0.5 * (lo + hi);
                    match advance(&state, mid) {
                        Ok(found) => {
                            lo = mid;
                            best = Some(found);
                        }
                        Err(_) => hi = mid,
                    }
                }
                if let Some((next, log)) = best {
                    tau += lo;
                    path.push(tau, &next, n, log);
                }
                path.exit = Some(DomainExit {
                    tau,
                    reason: err.to_string(),
                });
                break;
            }
        }
    }
    Ok(path)
}

impl GeodesicPath {
    fn push(&mut self, tau: f64, state: &[f64], n: usize, log: SampleLog) {
        self.taus.push(tau);
        self.xs.push(state[..n].to_vec());
        self.ys.push(state[n..].to_vec());
        self.logs.push(log);
    }
}

/// Relative drifts of `L`, of the energy integral and, on surfaces of
/// revolution, of the Clairaut invariant, recomputed from the samples.
pub fn conservation_report(spec: &MetricSpec, path: &GeodesicPath, tol: f64) -> Result<AuditReport> {
    if path.is_empty() {
        return Err(FinslerError::InvalidArgument("empty path".into()));
    }
    let logs: Vec<SampleLog> = path
        .xs
        .iter()
        .zip(&path.ys)
        .map(|(x, y)| sample_log(spec, Some(spec), x, y))
        .collect::<Result<_>>()?;
    let drift = |values: Vec<f64>| {
        let first = values[0];
        let scale = first.abs().max(f64::MIN_POSITIVE);
        values.iter().map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
    };
    let (x0, y0) = (&path.xs[0], &path.ys[0]);
    let mut checks = vec![
        Check::new(
            "conservation.length",
            drift(logs.iter().map(|l| l.length).collect()),
            tol,
            x0,
            y0,
        ),
        Check::new(
            "conservation.energy",
            drift(logs.iter().map(|l| l.energy).collect()),
            tol,
            x0,
            y0,
        ),
    ];
    if logs[0].clairaut.is_some() {
        let values = logs.iter().map(|l| l.clairaut.unwrap_or(f64::NAN)).collect::<Vec<_>>();
        let first = values[0];
        let worst = values.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
        checks.push(Check::new("conservation.clairaut", worst, tol, x0, y0));
    }
    Ok(AuditReport::new(0, path.len(), checks))
}

/// Finite-difference weights for derivatives `0..=order` at `z` on `nodes`.
pub fn fornberg_weights(z: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// Which form of the Euler-Lagrange system [`el_residual`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElForm {
    /// `ẍ + 2G(x, ẋ) − ẋ d(ln L)/dt`: the equations of `L`, valid in any
    /// parametrization.
    Parametric,
    /// `ẍ + 2G(x, ẋ)`: the equations of `F`, valid in arc length only.
    ArcLength,
}

/// Number of samples in each finite-difference stencil.
const STENCIL: usize = 5;

/// Largest component of the Euler-Lagrange residual over the interior
/// samples of a curve `(t_k, x_k)`, with `ẋ` and `ẍ` from centred five-point
/// stencils on the (possibly non-uniform) grid.
pub fn el_residual(metric: &dyn Metric, ts: &[f64], xs: &[Vec<f64>], form: ElForm) -> Result<f64> {
    let count = ts.len();
    if count < STENCIL || xs.len() != count {
        return Err(FinslerError::InvalidArgument(format!(
            "need at least {STENCIL} matching samples, got {} times and {} points",
            count,
            xs.len()
        )));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FinslerError::InvalidArgument("sample times must increase".into()));
    }
    let n = metric.dim();
    let half = STENCIL / 2;
    let derivs = |k: usize, values: &dyn Fn(usize) -> f64| -> (f64, f64) {
        let start = k - half;
        let w = fornberg_weights(ts[k], &ts[start..start + STENCIL], 2);
        (0..STENCIL).fold((0.0, 0.0), |(d1, d2), s| {
            let v = values(start + s);
            (d1 + w[s][1] * v, d2 + w[s][2] * v)
        })
    };
    let mut worst = 0.0f64;
    for k in half..count - half {
        let (velocity, accel): (Vec<f64>, Vec<f64>) = (0..n).map(|i| derivs(k, &|s| xs[s][i])).unzip();
        let g = spray_coefficients(metric, &xs[k], &velocity)?;
        // d(ln L)/dt = (F_x ẋ + F_y ẍ) / 2F along the curve
        let dlog = match form {
            ElForm::Parametric => {
                let f = metric.energy_jet(&xs[k], &velocity, 1)?;
                let mut rate = 0.0;
                for i in 0..n {
                    rate += f.partial_vars(&[i])? * velocity[i] + f.partial_vars(&[n + i])? * accel[i];
                }
                rate / (2.0 * f.value())
            }
            ElForm::ArcLength => 0.0,
        };
        for i in 0..n {
            let r = accel[i] + 2.0 * g[i] - velocity[i] * dlog;
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}
