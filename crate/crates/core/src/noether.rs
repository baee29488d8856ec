//! Noether first integrals of one-parameter transformation families,
//! Euler-Lagrange trajectories of general functionals and the 2-D
//! Weierstrass invariant.
//!
//! A functional integrand is a function of `(t, x, ẋ)`. Expressions name the
//! time `t`, positions `x0..` and velocities `y0..`.

use serde::Serialize;

use crate::audit::{AuditReport, Check};
use crate::error::{FinslerError, Result};
use crate::expr::{Expr, VarSet};
use crate::geodesic::{rk4_step, DomainExit};
use crate::jets::Jet;
use crate::linalg::{is_degenerate, solve_checked, DEGENERACY_REL};
use crate::metric::Metric;

/// Variable names of a functional on an `n`-dimensional configuration space:
/// `t, x0.., y0..`.
pub fn functional_vars(n: usize) -> VarSet {
    let mut names = vec!["t".to_string()];
    names.extend(VarSet::finsler(n).names().iter().cloned());
    VarSet::named(&names)
}

/// An integrand `F(t, x, ẋ)`.
pub trait Functional {
    fn dim(&self) -> usize;

    /// Jet of `F` over `1 + 2n` variables: `t` in slot 0, `x` in `1..=n`,
    /// `ẋ` in `n+1..=2n`.
    fn functional_jet(&self, t: f64, x: &[f64], v: &[f64], order: u32) -> Result<Jet>;
}

/// A functional given as an expression in `t, x0.., y0..`.
#[derive(Debug, Clone)]
pub struct ExprFunctional {
    expr: Expr,
    dim: usize,
}

impl ExprFunctional {
    pub fn parse(source: &str, dim: usize) -> Result<ExprFunctional> {
        Ok(ExprFunctional {
            expr: Expr::parse(source, &functional_vars(dim))?,
            dim,
        })
    }
}

impl Functional for ExprFunctional {
    fn dim(&self) -> usize {
        self.dim
    }

    fn functional_jet(&self, t: f64, x: &[f64], v: &[f64], order: u32) -> Result<Jet> {
        let point = state_vector(t, x, v);
        self.expr.eval(&Jet::variables(&point, order)?)
    }
}

/// The energy `F = ½L²` of a metric as an autonomous functional.
pub struct EnergyFunctional<'a>(pub &'a dyn Metric);

impl Functional for EnergyFunctional<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn functional_jet(&self, t: f64, x: &[f64], v: &[f64], order: u32) -> Result<Jet> {
        let n = self.dim();
        let energy = self.0.energy_jet(x, v, order)?;
        let outer = Jet::variables(&state_vector(t, x, v), order)?;
        energy.substitute(&outer[1..=2 * n])
    }
}

fn state_vector(t: f64, x: &[f64], v: &[f64]) -> Vec<f64> {
    std::iter::once(t)
        .chain(x.iter().copied())
        .chain(v.iter().copied())
        .collect()
}

/// Generators of a one-parameter family `t* = t + εφ`, `x*^i = x^i + εψ^i`,
/// as expressions in `t, x0.., y0..`.
#[derive(Debug, Clone)]
pub struct TransformationFamily {
    pub phi: Expr,
    pub psis: Vec<Expr>,
}

impl TransformationFamily {
    pub fn parse<S: AsRef<str>>(phi: &str, psis: &[S], dim: usize) -> Result<TransformationFamily> {
        if psis.len() != dim {
            return Err(FinslerError::InvalidArgument(format!(
                "need {dim} ψ generators, got {}",
                psis.len()
            )));
        }
        let vars = functional_vars(dim);
        Ok(TransformationFamily {
            phi: Expr::parse(phi, &vars)?,
            psis: psis
                .iter()
                .map(|s| Expr::parse(s.as_ref(), &vars))
                .collect::<Result<_>>()?,
        })
    }

    /// Time translation `φ = 1, ψ = 0`.
    pub fn time_translation(dim: usize) -> TransformationFamily {
        TransformationFamily {
            phi: Expr::number(1.0),
            psis: vec![Expr::number(0.0); dim],
        }
    }

    /// Translation of coordinate `axis`: `φ = 0, ψ = e_axis`.
    pub fn coordinate_translation(dim: usize, axis: usize) -> TransformationFamily {
        TransformationFamily {
            phi: Expr::number(0.0),
            psis: (0..dim)
                .map(|i| Expr::number(if i == axis { 1.0 } else { 0.0 }))
                .collect(),
        }
    }
}

/// The conserved quantity `Σ F_{ẋ^i} ψ^i + (F − Σ ẋ^i F_{ẋ^i}) φ` at a state.
pub fn noether_charge(
    functional: &dyn Functional,
    family: &TransformationFamily,
    t: f64,
    x: &[f64],
    v: &[f64],
) -> Result<f64> {
    let n = functional.dim();
    check_lengths(n, x, v)?;
    if family.psis.len() != n {
        return Err(FinslerError::InvalidArgument(format!(
            "need {n} ψ generators, got {}",
            family.psis.len()
        )));
    }
    let jet = functional.functional_jet(t, x, v, 1)?;
    let state = state_vector(t, x, v);
    let phi = family.phi.eval_f64(&state)?;
    let mut charge = 0.0;
    let mut euler = 0.0;
    for i in 0..n {
        let momentum = jet.partial_vars(&[1 + n + i])?;
        charge += momentum * family.psis[i].eval_f64(&state)?;
        euler += v[i] * momentum;
    }
    Ok(charge + (jet.value() - euler) * phi)
}

fn check_lengths(n: usize, x: &[f64], v: &[f64]) -> Result<()> {
    if x.len() != n || v.len() != n {
        return Err(FinslerError::InvalidArgument(format!(
            "state has lengths ({}, {}), expected {n}",
            x.len(),
            v.len()
        )));
    }
    Ok(())
}

/// Charge values along sampled states.
pub fn charge_series(
    functional: &dyn Functional,
    family: &TransformationFamily,
    ts: &[f64],
    xs: &[Vec<f64>],
    vs: &[Vec<f64>],
) -> Result<Vec<f64>> {
    ts.iter()
        .zip(xs)
        .zip(vs)
        .map(|((&t, x), v)| noether_charge(functional, family, t, x, v))
        .collect()
}

/// `max_k |Q_k − Q_0| / (1 + |Q_0|)`; zero for an empty series.
pub fn charge_drift(charges: &[f64]) -> f64 {
    let Some(&first) = charges.first() else {
        return 0.0;
    };
    charges
        .iter()
        .map(|q| (q - first).abs() / (1.0 + first.abs()))
        .fold(0.0, f64::max)
}

/// A sampled Euler-Lagrange solution `t ↦ (x, ẋ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElPath {
    pub ts: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub vs: Vec<Vec<f64>>,
    pub exit: Option<DomainExit>,
}

impl ElPath {
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn endpoint(&self) -> (&[f64], &[f64]) {
        let last = self.len() - 1;
        (&self.xs[last], &self.vs[last])
    }
}

/// Acceleration from the expanded Euler-Lagrange system
/// `F_{ẋẋ} ẍ = F_x − F_{tẋ} − F_{xẋ} ẋ`.
pub fn euler_lagrange_acceleration(functional: &dyn Functional, t: f64, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = functional.dim();
    check_lengths(n, x, v)?;
    let jet = functional.functional_jet(t, x, v, 2)?;
    let vel = |i: usize| 1 + n + i;
    let mut hessian = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            hessian[i][j] = jet.partial_vars(&[vel(i), vel(j)])?;
        }
        rhs[i] = jet.partial_vars(&[1 + i])? - jet.partial_vars(&[0, vel(i)])?;
        for j in 0..n {
            rhs[i] -= jet.partial_vars(&[1 + j, vel(i)])? * v[j];
        }
    }
    if is_degenerate(&hessian, DEGENERACY_REL) {
        return Err(FinslerError::DegenerateMetric(format!(
            "velocity Hessian of the functional is singular at t = {t}, x = {x:?}, ẋ = {v:?}"
        )));
    }
    solve_checked(&hessian, &rhs, "velocity Hessian")
}

/// Integrates the Euler-Lagrange system with RK4 from `(t0, x0, ẋ0)` over
/// `[t0, t0 + t_max]`. A failed step truncates the path and records the exit.
pub fn integrate_euler_lagrange(
    functional: &dyn Functional,
    t0: f64,
    x0: &[f64],
    v0: &[f64],
    t_max: f64,
    step: f64,
) -> Result<ElPath> {
    let n = functional.dim();
    check_lengths(n, x0, v0)?;
    if !(step > 0.0 && step.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(FinslerError::InvalidArgument(format!(
            "need step > 0 and t_max ≥ 0, got step = {step}, t_max = {t_max}"
        )));
    }
    // State layout: (t, x, ẋ), with t carried so non-autonomous F works.
    let rhs = |s: &[f64]| -> Result<Vec<f64>> {
        let (x, v) = s[1..].split_at(n);
        let acc = euler_lagrange_acceleration(functional, s[0], x, v)?;
        Ok(std::iter::once(1.0).chain(v.iter().copied()).chain(acc).collect())
    };
    // Validates the starting state.
    rhs(&state_vector(t0, x0, v0))?;
    let mut path = ElPath {
        ts: vec![t0],
        xs: vec![x0.to_vec()],
        vs: vec![v0.to_vec()],
        exit: None,
    };
    let mut state = state_vector(t0, x0, v0);
    let steps = (t_max / step - 1e-9).ceil().max(0.0) as usize;
    for k in 0..steps {
        let target = t0 + if k + 1 == steps { t_max } else { (k + 1) as f64 * step };
        let next = rk4_step(&state, target - state[0], &rhs).and_then(|next| {
            rhs(&next)?;
            Ok(next)
        });
        match next {
            Ok(next) => {
                state = next;
                state[0] = target;
                path.ts.push(target);
                path.xs.push(state[1..=n].to_vec());
                path.vs.push(state[n + 1..].to_vec());
            }
            Err(err) => {
                path.exit = Some(DomainExit {
                    tau: state[0],
                    reason: err.to_string(),
                });
                break;
            }
        }
    }
    Ok(path)
}

/// Drift report for one charge along a sampled path.
pub fn charge_report(
    name: &str,
    functional: &dyn Functional,
    family: &TransformationFamily,
    path: &ElPath,
    tol: f64,
) -> Result<AuditReport> {
    let charges = charge_series(functional, family, &path.ts, &path.xs, &path.vs)?;
    let drift = charge_drift(&charges);
    let (x, v) = path.endpoint();
    let check = Check::new(format!("noether.{name}"), drift, tol, x, v);
    Ok(AuditReport::new(0, path.len(), vec![check]))
}

/// Default relative tolerance of the Weierstrass identities.
pub const WEIERSTRASS_TOL: f64 = 1e-9;

/// The Weierstrass invariant of a 1-homogeneous `f(x, y, p, q)` together with
/// the residuals of its defining identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weierstrass {
    /// `W = f_pp / q²`.
    pub invariant: f64,
    /// Relative mismatch of `f_pp/q² = f_qq/p² = −f_pq/(pq)`.
    pub consistency_residual: f64,
    /// Relative mismatch of `W(2p, 2q) = W(p, q)/8`.
    pub scaling_residual: f64,
}

/// Variables of a Weierstrass integrand: `x, y, p, q`.
pub fn weierstrass_vars() -> VarSet {
    VarSet::named(&["x", "y", "p", "q"])
}

/// Evaluates the Weierstrass invariant at `state = (x, y, p, q)` after
/// auditing 1-homogeneity of `f` in `(p, q)` there.
pub fn weierstrass(f: &Expr, state: [f64; 4]) -> Result<Weierstrass> {
    let [x, y, p, q] = state;
    if p == 0.0 || q == 0.0 {
        return Err(FinslerError::InvalidArgument(format!(
            "Weierstrass invariant needs p·q ≠ 0, got p = {p}, q = {q}"
        )));
    }
    let at = |lambda: f64| -> Result<Jet> { f.eval(&Jet::variables(&[x, y, lambda * p, lambda * q], 2)?) };
    let base = at(1.0)?;
    let value = base.value();
    let scale = value.abs().max(f64::MIN_POSITIVE);
    let euler = p * base.partial_vars(&[2])? + q * base.partial_vars(&[3])? - value;
    let mut homogeneity = euler.abs() / scale;
    for lambda in [0.5, 2.0] {
        homogeneity = homogeneity.max((at(lambda)?.value() - lambda * value).abs() / (lambda * scale));
    }
    if homogeneity > WEIERSTRASS_TOL {
        return Err(FinslerError::InvalidArgument(format!(
            "f is not 1-homogeneous in (p, q): relative residual {homogeneity:.3e}"
        )));
    }

    let invariant_at = |jet: &Jet, lambda: f64| -> Result<[f64; 3]> {
        let (pl, ql) = (lambda * p, lambda * q);
        Ok([
            jet.partial_vars(&[2, 2])? / (ql * ql),
            jet.partial_vars(&[3, 3])? / (pl * pl),
            -jet.partial_vars(&[2, 3])? / (pl * ql),
        ])
    };
    let [w, from_qq, from_pq] = invariant_at(&base, 1.0)?;
    let magnitude = w.abs().max(from_qq.abs()).max(from_pq.abs());
    let relative = |a: f64, b: f64| {
        if magnitude == 0.0 {
            0.0
        } else {
            (a - b).abs() / magnitude
        }
    };
    let consistency_residual = relative(w, from_qq).max(relative(w, from_pq));
    let [doubled, ..] = invariant_at(&at(2.0)?, 2.0)?;
    let scaling_residual = relative(doubled, w / 8.0);
    Ok(Weierstrass {
        invariant: w,
        consistency_residual,
        scaling_residual,
    })
}
