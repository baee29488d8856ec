//! Change of coordinates: pulled-back metrics and the audit of the
//! transformation rules of the spray, the nonlinear connection and the
//! Finsler connection coefficients.

use crate::audit::{scale_of, AuditReport, Check};
use crate::error::{FinslerError, Result};
use crate::expr::Expr;
use crate::jets::Jet;
use crate::linalg::{self, Matrix};
use crate::metric::{check_point, Metric, SamplingDomain};
use crate::tensor::{connection_triple, spray_coefficients, ConnectionKind, Tensor3};

/// Maximum Newton iterations when inverting the forward map numerically.
const NEWTON_ITERATIONS: usize = 50;

/// Tolerance for the mutual-inverse precondition.
pub const INVERSE_TOL: f64 = 1e-8;

/// Tolerance factor for the transformation-rule residuals.
pub const RULE_TOL: f64 = 1e-4;

/// A coordinate change `x̃ = φ(x)` given by `n` expressions in `x0..`, with
/// an optional closed-form inverse `x = ψ(x̃)`, also in `x0..`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diffeomorphism {
    pub forward: Vec<Expr>,
    pub inverse: Option<Vec<Expr>>,
}

impl Diffeomorphism {
    pub fn dim(&self) -> usize {
        self.forward.len()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let bad_inverse = self.inverse.as_ref().is_some_and(|inv| inv.len() != n);
        if self.forward.len() != n || bad_inverse {
            return Err(FinslerError::InvalidArgument(format!(
                "coordinate change must have {n} components"
            )));
        }
        Ok(())
    }

    /// `φ` evaluated on jets.
    pub fn forward_jets(&self, vars: &[Jet]) -> Result<Vec<Jet>> {
        self.forward.iter().map(|e| e.eval(vars)).collect()
    }

    /// `φ(x)` with its Jacobian `X^r_i = ∂x̃^r/∂x^i`.
    fn forward_linear(&self, x: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        let phi = self.forward_jets(&Jet::variables(x, 1)?)?;
        let value = phi.iter().map(Jet::value).collect();
        let jac = phi
            .iter()
            .map(|p| (0..x.len()).map(|i| p.partial_vars(&[i])).collect())
            .collect::<Result<_>>()?;
        Ok((value, jac))
    }

    /// Solves `φ(x) = target` by Newton's method from `anchor`.
    fn solve_forward(&self, target: &[f64], anchor: &[f64]) -> Result<Vec<f64>> {
        let mut x = anchor.to_vec();
        let tol = 1e-14 * scale_of(target);
        let mut residual = f64::INFINITY;
        for _ in 0..NEWTON_ITERATIONS {
            let (value, jac) = self.forward_linear(&x)?;
            let r: Vec<f64> = value.iter().zip(target).map(|(a, b)| a - b).collect();
            residual = linalg::norm(&r);
            if residual <= tol {
                return Ok(x);
            }
            let step = linalg::solve_checked(&jac, &r, "coordinate Jacobian")?;
            x.iter_mut().zip(&step).for_each(|(xi, s)| *xi -= s);
        }
        if residual <= 1e3 * tol {
            return Ok(x);
        }
        Err(FinslerError::NonConvergence {
            iterations: NEWTON_ITERATIONS,
            residual,
        })
    }

    /// Jets of `ψ` at `x̃`, taken as functions of the leading `dim` entries of
    /// `vars`. Without a closed-form inverse the series is built by chord
    /// iterations on `φ(ψ) = x̃`, each fixing one more degree.
    pub fn inverse_jets(&self, vars: &[Jet], anchor: &[f64]) -> Result<Vec<Jet>> {
        let n = self.dim();
        if let Some(inv) = &self.inverse {
            return inv.iter().map(|e| e.eval(vars)).collect();
        }
        let target: Vec<f64> = vars[..n].iter().map(Jet::value).collect();
        let base = self.solve_forward(&target, anchor)?;
        let (_, jac) = self.forward_linear(&base)?;
        let jac_inv = linalg::inverse_checked(&jac, "coordinate Jacobian")?;
        let mut psi: Vec<Jet> = base.iter().map(|&b| vars[0].constant_like(b)).collect();
        for _ in 0..=vars[0].order() {
            let phi = self.forward_jets(&psi)?;
            let r: Vec<Jet> = phi.iter().zip(&vars[..n]).map(|(p, v)| p - v).collect();
            for (i, psi_i) in psi.iter_mut().enumerate() {
                for (j, rj) in r.iter().enumerate() {
                    *psi_i = &*psi_i - &rj.scale(jac_inv[i][j]);
                }
            }
        }
        // The constant terms carry the Newton solution exactly.
        for (p, &b) in psi.iter_mut().zip(&base) {
            *p = &*p + &p.constant_like(b - p.value());
        }
        Ok(psi)
    }
}

/// `L̃(x̃, ỹ) = L(ψ(x̃), Dψ(x̃) ỹ)`: the metric written in the new coordinates.
pub struct Pullback<'a> {
    base: &'a dyn Metric,
    diffeo: &'a Diffeomorphism,
    /// Starting guess for numeric inversion of the forward map.
    anchor: Vec<f64>,
}

impl<'a> Pullback<'a> {
    pub fn new(base: &'a dyn Metric, diffeo: &'a Diffeomorphism, anchor: &[f64]) -> Result<Pullback<'a>> {
        diffeo.check_dim(base.dim())?;
        Ok(Pullback {
            base,
            diffeo,
            anchor: anchor.to_vec(),
        })
    }
}

impl Metric for Pullback<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn energy_jet(&self, x: &[f64], y: &[f64], order: u32) -> Result<Jet> {
        let n = self.dim();
        check_point(x, y, n)?;
        let joint: Vec<f64> = x.iter().chain(y).copied().collect();
        let vars = Jet::variables(&joint, order + 1)?;
        let psi = self.diffeo.inverse_jets(&vars, &self.anchor)?;
        let mut inner = Vec::with_capacity(2 * n);
        for p in &psi {
            inner.push(p.truncate(order)?);
        }
        for p in &psi {
            let mut acc = vars[0].constant_like(0.0).truncate(order)?;
            for j in 0..n {
                acc = &acc + &(&p.derivative(j)? * &vars[n + j].truncate(order)?);
            }
            inner.push(acc);
        }
        let bx: Vec<f64> = inner[..n].iter().map(Jet::value).collect();
        let by: Vec<f64> = inner[n..].iter().map(Jet::value).collect();
        self.base.energy_jet(&bx, &by, order)?.substitute(&inner)
    }

    fn sampling_domain(&self) -> SamplingDomain {
        self.base.sampling_domain()
    }
}

/// Audits, at `(x, y)`, the transformation rules relating `(G, N, H, C)` of
/// `metric` to those of its pullback under `diffeo`:
///
/// * `G̃^r = X^r_i G^i − ½ φ^r_is y^i y^s`
/// * `X^j_l Ñ^r_j = X^r_i N^i_l − φ^r_li y^i`
/// * `X^l_i H^i_jk = φ^l_jk + X^r_j X^s_k H̃^l_rs`
/// * `C^i_jk = Y^i_p X^q_j X^r_k C̃^p_qr`
///
/// with `X = Dφ`, `Y = X⁻¹` and `φ^r_is` the second derivatives of `φ`.
pub fn coordinate_transform_audit(
    metric: &dyn Metric,
    diffeo: &Diffeomorphism,
    x: &[f64],
    y: &[f64],
) -> Result<AuditReport> {
    let n = metric.dim();
    check_point(x, y, n)?;
    diffeo.check_dim(n)?;
    let phi = diffeo.forward_jets(&Jet::variables(x, 2)?)?;
    let xt: Vec<f64> = phi.iter().map(Jet::value).collect();
    let jac: Matrix = phi
        .iter()
        .map(|p| (0..n).map(|i| p.partial_vars(&[i])).collect())
        .collect::<Result<_>>()?;
    if linalg::is_degenerate(&jac, linalg::DEGENERACY_REL) {
        return Err(FinslerError::SingularPoint(format!(
            "coordinate Jacobian is singular at {x:?}"
        )));
    }
    let jac_inv = linalg::inverse_checked(&jac, "coordinate Jacobian")?;
    let hess: Tensor3 = phi
        .iter()
        .map(|p| {
            (0..n)
                .map(|i| (0..n).map(|s| p.partial_vars(&[i, s])).collect())
                .collect()
        })
        .collect::<Result<_>>()?;
    if let Some(inv) = &diffeo.inverse {
        let back: Vec<f64> = inv.iter().map(|e| e.eval_f64(&xt)).collect::<Result<_>>()?;
        let gap = back.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > INVERSE_TOL * scale_of(x) {
            return Err(FinslerError::InvalidArgument(format!(
                "inverse map misses the point by {gap:e}"
            )));
        }
    }
    let yt = linalg::mat_vec(&jac, y);
    let pulled = Pullback::new(metric, diffeo, x)?;

    let g = spray_coefficients(metric, x, y)?;
    let g_t = spray_coefficients(&pulled, &xt, &yt)?;
    let old = connection_triple(metric, x, y, ConnectionKind::Cartan)?;
    let new = connection_triple(&pulled, &xt, &yt, ConnectionKind::Cartan)?;
    let sum = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>();

    let mut g_res = Vec::new();
    for r in 0..n {
        let hyy = sum(&|i| sum(&|s| hess[r][i][s] * y[i] * y[s]));
        g_res.push((
            g_t[r] - (sum(&|i| jac[r][i] * g[i]) - 0.5 * hyy),
            g_t[r].abs().max(hyy.abs()),
        ));
    }

    let mut n_res = Vec::new();
    for r in 0..n {
        for l in 0..n {
            let lhs = sum(&|j| jac[j][l] * new.n[r][j]);
            let rhs = sum(&|i| jac[r][i] * old.n[i][l]) - sum(&|i| hess[r][l][i] * y[i]);
            n_res.push((lhs - rhs, lhs.abs().max(rhs.abs())));
        }
    }

    let mut h_res = Vec::new();
    let mut c_res = Vec::new();
    for l in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lhs = sum(&|i| jac[l][i] * old.h[i][j][k]);
                let moved = sum(&|r| sum(&|s| jac[r][j] * jac[s][k] * new.h[l][r][s]));
                let rhs = hess[l][j][k] + moved;
                h_res.push((lhs - rhs, lhs.abs().max(rhs.abs())));

                let back = sum(&|p| sum(&|q| sum(&|r| jac_inv[l][p] * jac[q][j] * jac[r][k] * new.c[p][q][r])));
                let here = old.c[l][j][k];
                c_res.push((here - back, here.abs().max(back.abs())));
            }
        }
    }

    let check = |name: &str, res: &[(f64, f64)]| {
        let worst = res.iter().map(|(d, _)| d.abs()).fold(0.0, f64::max);
        let scale = scale_of(res.iter().map(|(_, s)| s));
        Check::new(name, worst, RULE_TOL * scale, x, y)
    };
    Ok(AuditReport::new(
        0,
        1,
        vec![
            check("transform.spray", &g_res),
            check("transform.nonlinear_connection", &n_res),
            check("transform.horizontal_coefficients", &h_res),
            check("transform.vertical_coefficients", &c_res),
        ],
    ))
}
