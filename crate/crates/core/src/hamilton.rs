//! Legendre transform, Hamiltonian description and the Hilbert form.
//!
//! The Legendre machinery works for any Lagrangian `ℒ(x, ξ)` given as a jet;
//! every Finsler metric is one through its energy `F = ½L²`, for which the
//! Hamiltonian is again `F` and the Legendre map is `y ↦ g_y(y, ·)`.

use serde::Serialize;

use crate::audit::{scale_of, AuditReport, Check, PointSampler};
use crate::error::{FinslerError, Result};
use crate::expr::{Expr, VarSet};
use crate::geodesic::{rk4_step, DomainExit};
use crate::jets::Jet;
use crate::linalg::{self, Matrix};
use crate::metric::{check_point, Metric};
use crate::tensor::spray_coefficients;

/// Newton iterations allowed in [`legendre_inverse`].
pub const NEWTON_ITERATIONS: usize = 50;

/// Step halvings allowed per Newton iteration.
pub const LINE_SEARCH_HALVINGS: usize = 20;

/// Relative residual at which the Legendre inverse is converged.
pub const INVERSE_TOL: f64 = 1e-12;

/// Relative residual accepted when the line search stalls at roundoff.
const ROUNDOFF_TOL: f64 = 1e-10;

/// A Lagrangian `ℒ(x, ξ)` on a single chart.
pub trait Lagrangian {
    fn dim(&self) -> usize;

    /// Jet of `ℒ` in the `2n` variables `(x0.., ξ0..)` expanded at `(x, ξ)`.
    fn lagrangian_jet(&self, x: &[f64], xi: &[f64], order: u32) -> Result<Jet>;

    /// Admissible velocities at `x` from which continuation may start when
    /// the standard Newton seed is inadmissible.
    fn reference_velocities(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

/// Number of reference directions tried by the continuation fallback.
const REFERENCE_DIRECTIONS: usize = 16;

/// Deterministic admissible directions of a metric at `x`; several are
/// needed because the cone of a pseudo-Finsler metric may have several
/// components.
fn metric_references(metric: &dyn Metric, x: &[f64]) -> Vec<Vec<f64>> {
    let mut sampler = PointSampler::new(0);
    (0..REFERENCE_DIRECTIONS)
        .filter_map(|_| sampler.direction(metric, x).ok())
        .collect()
}

impl<M: Metric> Lagrangian for M {
    fn dim(&self) -> usize {
        Metric::dim(self)
    }

    fn lagrangian_jet(&self, x: &[f64], xi: &[f64], order: u32) -> Result<Jet> {
        self.energy_jet(x, xi, order)
    }

    fn reference_velocities(&self, x: &[f64]) -> Vec<Vec<f64>> {
        metric_references(self, x)
    }
}

impl Lagrangian for dyn Metric + '_ {
    fn dim(&self) -> usize {
        Metric::dim(self)
    }

    fn lagrangian_jet(&self, x: &[f64], xi: &[f64], order: u32) -> Result<Jet> {
        self.energy_jet(x, xi, order)
    }

    fn reference_velocities(&self, x: &[f64]) -> Vec<Vec<f64>> {
        metric_references(self, x)
    }
}

/// A Lagrangian written as an expression in `x0.., y0..` (the velocity
/// components are named `y`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExprLagrangian {
    pub dim: usize,
    pub expr: Expr,
}

impl ExprLagrangian {
    pub fn parse(source: &str, dim: usize) -> Result<ExprLagrangian> {
        Ok(ExprLagrangian {
            dim,
            expr: Expr::parse(source, &VarSet::finsler(dim))?,
        })
    }
}

impl Lagrangian for ExprLagrangian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lagrangian_jet(&self, x: &[f64], xi: &[f64], order: u32) -> Result<Jet> {
        check_point(x, xi, self.dim)?;
        let joint: Vec<f64> = x.iter().chain(xi).copied().collect();
        self.expr.eval(&Jet::variables(&joint, order)?)
    }
}

/// `p_i = ∂ℒ/∂ξ^i`, which for a Finsler energy equals `g_ij y^j`.
pub fn legendre_point<L: Lagrangian + ?Sized>(lag: &L, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let n = lag.dim();
    let jet = lag.lagrangian_jet(x, xi, 2)?;
    let hessian = velocity_hessian(&jet, n);
    if linalg::is_degenerate(&hessian, linalg::DEGENERACY_REL) {
        return Err(FinslerError::DegenerateMetric(format!(
            "velocity Hessian is singular at x = {x:?}, y = {xi:?}"
        )));
    }
    (0..n).map(|i| jet.partial_vars(&[n + i])).collect()
}

fn velocity_hessian(jet: &Jet, n: usize) -> Matrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| jet.partial_vars(&[n + i, n + j]).expect("order 2 jet"))
                .collect()
        })
        .collect()
}

/// `(∂ℒ/∂ξ − p, ∂²ℒ/∂ξ²)` at `ξ`.
fn momentum_residual<L: Lagrangian + ?Sized>(lag: &L, x: &[f64], xi: &[f64], p: &[f64]) -> Result<(Vec<f64>, Matrix)> {
    let n = lag.dim();
    let jet = lag.lagrangian_jet(x, xi, 2)?;
    let r = (0..n)
        .map(|i| jet.partial_vars(&[n + i]).map(|v| v - p[i]))
        .collect::<Result<Vec<f64>>>()?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(FinslerError::NumericalInstability("non-finite momentum".into()));
    }
    Ok((r, velocity_hessian(&jet, n)))
}

/// Inverts the Legendre map by damped Newton iteration on
/// `r(ξ) = ∂ℒ/∂ξ(x, ξ) − p`, seeded with `ξ₀ = H(x, p)⁻¹ p` where `H` is the
/// velocity Hessian at `ξ = p`. When that seed is inadmissible or Newton
/// fails from it, `p` is reached by continuation along the segment from the
/// momentum of a reference velocity.
pub fn legendre_inverse<L: Lagrangian + ?Sized>(lag: &L, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let n = lag.dim();
    check_point(x, p, n)?;
    let p_norm = linalg::norm(p);
    let seeded = lag
        .lagrangian_jet(x, p, 2)
        .and_then(|jet| linalg::solve_checked(&velocity_hessian(&jet, n), p, "velocity Hessian"))
        .and_then(|seed| legendre_inverse_from(lag, x, p, &seed));
    let err = match seeded {
        Ok(xi) => return Ok(xi),
        Err(err @ FinslerError::NonConvergence { .. }) => err,
        Err(_) => FinslerError::NonConvergence {
            iterations: 0,
            residual: p_norm,
        },
    };
    // Start from the references whose momenta point most nearly along p.
    let mut starts: Vec<(f64, Vec<f64>, Vec<f64>)> = lag
        .reference_velocities(x)
        .into_iter()
        .filter_map(|r| {
            let q = momentum(lag, x, &r).ok()?;
            let cos = linalg::dot(&q, p) / (linalg::norm(&q) * p_norm);
            Some((cos, r, q))
        })
        .collect();
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    starts
        .iter()
        .find_map(|(_, r, q)| continuation(lag, x, p, r, q).ok())
        .ok_or(err)
}

/// `∂ℒ/∂ξ` at `ξ`.
fn momentum<L: Lagrangian + ?Sized>(lag: &L, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let n = lag.dim();
    let jet = lag.lagrangian_jet(x, xi, 1)?;
    (0..n).map(|i| jet.partial_vars(&[n + i])).collect()
}

/// Smallest continuation step before giving up.
const MIN_CONTINUATION_STEP: f64 = 1e-3;

/// Tracks `ξ(p(s))` for `p(s) = p_ref + s (p − p_ref)`, `s: 0 → 1`.
fn continuation<L: Lagrangian + ?Sized>(
    lag: &L,
    x: &[f64],
    p: &[f64],
    reference: &[f64],
    p_ref: &[f64],
) -> Result<Vec<f64>> {
    let mut xi = reference.to_vec();
    let (mut s, mut ds) = (0.0f64, 0.25f64);
    while s < 1.0 {
        let t = (s + ds).min(1.0);
        let target: Vec<f64> = p_ref.iter().zip(p).map(|(a, b)| a + t * (b - a)).collect();
        match legendre_inverse_from(lag, x, &target, &xi) {
            Ok(next) => {
                xi = next;
                s = t;
                ds *= 2.0;
            }
            Err(err) => {
                ds *= 0.5;
                if ds < MIN_CONTINUATION_STEP {
                    return Err(err);
                }
            }
        }
    }
    Ok(xi)
}

/// [`legendre_inverse`] from an explicit starting velocity.
pub fn legendre_inverse_from<L: Lagrangian + ?Sized>(lag: &L, x: &[f64], p: &[f64], seed: &[f64]) -> Result<Vec<f64>> {
    let p_norm = linalg::norm(p);
    let fail = |iterations, residual| FinslerError::NonConvergence { iterations, residual };
    let mut xi = seed.to_vec();
    let (mut r, mut hessian) = momentum_residual(lag, x, &xi, p).map_err(|_| fail(0, p_norm))?;
    let mut r_norm = linalg::norm(&r);
    for iteration in 0..NEWTON_ITERATIONS {
        if r_norm <= INVERSE_TOL * p_norm {
            return Ok(xi);
        }
        let delta = linalg::solve_checked(&hessian, &r, "velocity Hessian").map_err(|_| fail(iteration, r_norm))?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=LINE_SEARCH_HALVINGS {
            let trial: Vec<f64> = xi.iter().zip(&delta).map(|(a, d)| a - t * d).collect();
            if let Ok((tr, th)) = momentum_residual(lag, x, &trial, p) {
                let tn = linalg::norm(&tr);
                if tn < r_norm {
                    accepted = Some((trial, tr, th, tn));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, tr, th, tn)) => {
                xi = trial;
                r = tr;
                hessian = th;
                r_norm = tn;
            }
            None if r_norm <= ROUNDOFF_TOL * p_norm => return Ok(xi),
            None => return Err(fail(iteration, r_norm)),
        }
    }
    if r_norm <= INVERSE_TOL * p_norm {
        Ok(xi)
    } else {
        Err(fail(NEWTON_ITERATIONS, r_norm))
    }
}

/// `H = p·ξ − ℒ` at the velocity `ξ` with momentum `p`.
fn energy_at<L: Lagrangian + ?Sized>(lag: &L, x: &[f64], xi: &[f64]) -> Result<f64> {
    let n = lag.dim();
    let jet = lag.lagrangian_jet(x, xi, 1)?;
    let mut h = -jet.value();
    for (i, v) in xi.iter().enumerate() {
        h += v * jet.partial_vars(&[n + i])?;
    }
    Ok(h)
}

/// `H(x, p) = p·ξ(p) − ℒ(x, ξ(p))`; equal to `F(x, y(p))` for a Finsler energy.
pub fn hamiltonian<L: Lagrangian + ?Sized>(lag: &L, x: &[f64], p: &[f64]) -> Result<f64> {
    let xi = legendre_inverse(lag, x, p)?;
    energy_at(lag, x, &xi)
}

/// A sampled phase-space trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePath {
    pub ts: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub ps: Vec<Vec<f64>>,
    pub hamiltonians: Vec<f64>,
    pub exit: Option<DomainExit>,
}

impl PhasePath {
    pub fn endpoint(&self) -> (&[f64], &[f64]) {
        let last = self.ts.len() - 1;
        (&self.xs[last], &self.ps[last])
    }

    /// Largest `|H − H₀| / max(1, |H₀|)` along the path.
    pub fn hamiltonian_drift(&self) -> f64 {
        let h0 = self.hamiltonians[0];
        self.hamiltonians
            .iter()
            .map(|h| (h - h0).abs() / h0.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,x0..,p0..,H`.
    pub fn to_csv(&self) -> String {
        let n = self.xs.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("p{i}")));
        header.push("H".into());
        let mut out = header.join(",");
        out.push('\n');
        for k in 0..self.ts.len() {
            let mut row = vec![self.ts[k]];
            row.extend(&self.xs[k]);
            row.extend(&self.ps[k]);
            row.push(self.hamiltonians[k]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// RK4 on `ẋ = ∂H/∂p = ξ(p)`, `ṗ = −∂H/∂x = ∂ℒ/∂x` (at fixed `ξ`). A failed
/// Legendre inverse truncates the path and records the exit.
pub fn hamilton_flow<L: Lagrangian + ?Sized>(
    lag: &L,
    x0: &[f64],
    p0: &[f64],
    t_max: f64,
    step: f64,
) -> Result<PhasePath> {
    let n = lag.dim();
    if !(step > 0.0 && step.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(FinslerError::InvalidArgument(format!(
            "need step > 0 and T ≥ 0, got step = {step}, T = {t_max}"
        )));
    }
    let xi0 = legendre_inverse(lag, x0, p0)?;
    let warm = std::cell::RefCell::new(xi0.clone());
    let rhs = |s: &[f64]| -> Result<Vec<f64>> {
        let (x, p) = s.split_at(n);
        let seed = warm.borrow().clone();
        let xi = legendre_inverse_from(lag, x, p, &seed).or_else(|_| legendre_inverse(lag, x, p))?;
        let jet = lag.lagrangian_jet(x, &xi, 1)?;
        let force = (0..n).map(|i| jet.partial_vars(&[i])).collect::<Result<Vec<f64>>>()?;
        *warm.borrow_mut() = xi.clone();
        Ok(xi.into_iter().chain(force).collect())
    };
    let mut path = PhasePath {
        ts: vec![0.0],
        xs: vec![x0.to_vec()],
        ps: vec![p0.to_vec()],
        hamiltonians: vec![energy_at(lag, x0, &xi0)?],
        exit: None,
    };
    let mut state: Vec<f64> = x0.iter().chain(p0).copied().collect();
    let steps = (t_max / step - 1e-9).ceil().max(0.0) as usize;
    let mut t = 0.0;
    for k in 0..steps {
        let target = if k + 1 == steps { t_max } else { (k + 1) as f64 * step };
        let advanced = rk4_step(&state, target - t, &rhs).and_then(|next| {
            let seed = warm.borrow().clone();
            let xi = legendre_inverse_from(lag, &next[..n], &next[n..], &seed)?;
            let h = energy_at(lag, &next[..n], &xi)?;
            Ok((next, h))
        });
        match advanced {
            Ok((next, h)) => {
                state = next;
                t = target;
                path.ts.push(t);
                path.xs.push(state[..n].to_vec());
                path.ps.push(state[n..].to_vec());
                path.hamiltonians.push(h);
            }
            Err(err) => {
                path.exit = Some(DomainExit {
                    tau: t,
                    reason: err.to_string(),
                });
                break;
            }
        }
    }
    Ok(path)
}

/// `{φ, H} = Σ ∂φ/∂x_i ∂H/∂p_i − ∂φ/∂p_i ∂H/∂x_i` for expressions over
/// the phase variables `x0.., p0..`.
pub fn poisson_bracket(phi: &Expr, ham: &Expr, x: &[f64], p: &[f64]) -> Result<f64> {
    let n = x.len();
    if p.len() != n {
        return Err(FinslerError::InvalidArgument("x and p lengths differ".into()));
    }
    let joint: Vec<f64> = x.iter().chain(p).copied().collect();
    let vars = Jet::variables(&joint, 1)?;
    let a = phi.eval(&vars)?;
    let b = ham.eval(&vars)?;
    let mut bracket = 0.0;
    for i in 0..n {
        bracket +=
            a.partial_vars(&[i])? * b.partial_vars(&[n + i])? - a.partial_vars(&[n + i])? * b.partial_vars(&[i])?;
    }
    Ok(bracket)
}

/// Phase-space variable names `x0.., p0..`.
pub fn phase_vars(n: usize) -> VarSet {
    VarSet::families(&["x", "p"], n)
}

/// `b = a/(a − 1)`, the conjugate exponent of `a > 1`.
pub fn conjugate_exponent(a: f64) -> Result<f64> {
    if a <= 1.0 || !a.is_finite() {
        return Err(FinslerError::InvalidArgument(format!("exponent {a} must exceed 1")));
    }
    Ok(a / (a - 1.0))
}

/// One row of the one-dimensional Legendre table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendreRow {
    pub xi: f64,
    pub p: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub involution_residual: f64,
}

/// `p = f′(ξ)`, `H(p) = −f(ξ) + pξ` and the involution residual
/// `|−H(p) + p H′(p) − f(ξ)|`, with `H′(p) = (dH/dξ)/(dp/dξ)` from jets.
pub fn legendre_1d(f: &Expr, samples: &[f64]) -> Result<Vec<LegendreRow>> {
    samples
        .iter()
        .enumerate()
        .map(|(index, &xi)| {
            let var = Jet::variable(0, xi, 1, 2)?;
            let fj = f.eval(std::slice::from_ref(&var))?;
            let curvature = fj.partial_vars(&[0, 0])?;
            if curvature.is_nan() || curvature <= 0.0 {
                return Err(FinslerError::InvalidArgument(format!(
                    "f is not strictly convex at sample {index} (ξ = {xi}, f″ = {curvature})"
                )));
            }
            let p_jet = fj.derivative(0)?;
            let h_jet = &(&p_jet * &var.truncate(1)?) - &fj.truncate(1)?;
            let p = p_jet.value();
            let h = h_jet.value();
            let dh_dp = h_jet.partial_vars(&[0])? / p_jet.partial_vars(&[0])?;
            Ok(LegendreRow {
                xi,
                p,
                h,
                involution_residual: (-h + p * dh_dp - fj.value()).abs(),
            })
        })
        .collect()
}

/// CSV with header `xi,p,H,involution_residual`.
pub fn legendre_table_csv(rows: &[LegendreRow]) -> String {
    let mut out = String::from("xi,p,H,involution_residual\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.xi, r.p, r.h, r.involution_residual
        ));
    }
    out
}

/// `dη` for the Hilbert form `η = −g_ij y^i dx^j` as a `2n × 2n` matrix in
/// the coordinates `(x, y)`: `Ω_ab = ∂_a η_b − ∂_b η_a`.
pub fn hilbert_differential(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Matrix> {
    let n = metric.dim();
    let f = metric.energy_jet(x, y, 2)?;
    // ∂_a η_j = −∂_a ∂F/∂y^j; the dy-components of η vanish.
    let d_eta = |a: usize, b: usize| -> f64 {
        if b < n {
            -f.partial_vars(&[a, n + b]).expect("order 2")
        } else {
            0.0
        }
    };
    Ok((0..2 * n)
        .map(|a| (0..2 * n).map(|b| d_eta(a, b) - d_eta(b, a)).collect())
        .collect())
}

/// Tolerance factor for the Hilbert-form identity.
pub const HILBERT_TOL: f64 = 1e-6;

/// Lower bound factor for `|det dη|`.
pub const HILBERT_NONDEGENERACY: f64 = 1e-8;

/// Checks `dη(𝔾, V) = dF(V)` for random probes `V`, where `𝔾 = (y, −2G)` is
/// the geodesic spray, and that `dη` is nondegenerate.
pub fn hilbert_spray_check(metric: &dyn Metric, x: &[f64], y: &[f64], probes: usize, seed: u64) -> Result<AuditReport> {
    let n = metric.dim();
    let omega = hilbert_differential(metric, x, y)?;
    let f = metric.energy_jet(x, y, 1)?;
    let df: Vec<f64> = (0..2 * n).map(|a| f.partial_vars(&[a])).collect::<Result<_>>()?;
    let g = spray_coefficients(metric, x, y)?;
    let spray: Vec<f64> = y.iter().copied().chain(g.iter().map(|v| -2.0 * v)).collect();
    let contracted: Vec<f64> = (0..2 * n)
        .map(|b| (0..2 * n).map(|a| spray[a] * omega[a][b]).sum())
        .collect();
    let mut sampler = PointSampler::new(seed);
    let mut checks = Vec::with_capacity(probes + 1);
    for _ in 0..probes {
        let v = sampler.gaussian(2 * n);
        let lhs = linalg::dot(&contracted, &v);
        let rhs = linalg::dot(&df, &v);
        let terms: Vec<f64> = contracted
            .iter()
            .chain(&df)
            .zip(v.iter().chain(&v))
            .map(|(a, b)| a * b)
            .collect();
        let scale = scale_of(terms.iter().chain([lhs, rhs].iter()));
        checks.push(Check::new(
            "hilbert.spray_identity",
            (lhs - rhs).abs(),
            HILBERT_TOL * scale,
            x,
            y,
        ));
    }
    let det = linalg::det(&omega).abs();
    checks.push(Check::at_least(
        "hilbert.nondegenerate",
        det,
        HILBERT_NONDEGENERACY * scale_of(omega.iter().flatten()),
        x,
        y,
    ));
    Ok(AuditReport::new(seed, probes, checks))
}
