//! Tensor calculus of a Finsler function at a point `(x, y)`.
//!
//! Everything is read off one Taylor jet of the energy `F = ½L²` in the joint
//! variables `(x, y)`. Pure `y`-derivatives (fundamental tensor, Cartan
//! tensors) come straight from its coefficients; the spray is assembled as a
//! jet so that the nonlinear connection and the curvature are further jet
//! derivatives of it.

use serde::Serialize;

use crate::audit::{scale_of, PointSampler, MAX_RETRIES};
use crate::error::{FinslerError, Result};
use crate::expr::Expr;
use crate::jets::Jet;
use crate::linalg::{self, Matrix};
use crate::metric::{Metric, MetricKind, MetricSpec};

pub type Tensor3 = Vec<Vec<Vec<f64>>>;
pub type Tensor4 = Vec<Vec<Vec<Vec<f64>>>>;

/// Jet order needed for the complete tensor state (curvature needs five).
pub const FULL_ORDER: u32 = 5;

fn tensor3(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Tensor3 {
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| f(i, j, k)).collect()).collect())
        .collect()
}

fn tensor4(n: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Tensor4 {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| (0..n).map(|m| f(i, j, k, m)).collect()).collect())
                .collect()
        })
        .collect()
}

fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

/// Coordinate function as a jet; a plain constant at order zero.
fn coordinate_jet(slot: usize, value: f64, num_vars: usize, order: u32) -> Result<Jet> {
    if order == 0 {
        Jet::constant(value, num_vars, 0)
    } else {
        Jet::variable(slot, value, num_vars, order)
    }
}

/// Energy jet together with the fundamental tensor, its inverse and the spray
/// as jets of order `order − 2`.
pub struct SprayJets {
    pub n: usize,
    pub energy: Jet,
    pub g: Vec<Vec<Jet>>,
    pub g_inv: Vec<Vec<Jet>>,
    /// `G^i`
    pub spray: Vec<Jet>,
}

impl SprayJets {
    pub fn compute(metric: &dyn Metric, x: &[f64], y: &[f64], order: u32) -> Result<SprayJets> {
        if order < 2 {
            return Err(FinslerError::InsufficientOrder { requested: 2, order });
        }
        let n = metric.dim();
        let energy = metric.energy_jet(x, y, order)?;
        let fy: Vec<Jet> = (0..n).map(|i| energy.derivative(n + i)).collect::<Result<_>>()?;
        let mut g: Vec<Vec<Jet>> = vec![Vec::with_capacity(n); n];
        for i in 0..n {
            for j in 0..n {
                let entry = if j < i {
                    g[j][i].clone()
                } else {
                    fy[i].derivative(n + j)?
                };
                g[i].push(entry);
            }
        }
        let g_inv = linalg::invert_jets(&g)?;
        let low = order - 2;
        let ys: Vec<Jet> = (0..n)
            .map(|i| coordinate_jet(n + i, y[i], 2 * n, low))
            .collect::<Result<_>>()?;
        // G_j = ½ (∂_{x_i} ∂_{y_j} F · y^i − ∂_{x_j} F)
        let mut spray_low = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = energy.derivative(j)?.truncate(low)?.scale(-1.0);
            for (i, yi) in ys.iter().enumerate() {
                acc = &acc + &(&fy[j].derivative(i)? * yi);
            }
            spray_low.push(acc.scale(0.5));
        }
        let spray = (0..n)
            .map(|i| {
                let mut acc = g_inv[i][0].constant_like(0.0);
                for (j, gj) in spray_low.iter().enumerate() {
                    acc = &acc + &(&g_inv[i][j] * gj);
                }
                acc
            })
            .collect();
        Ok(SprayJets {
            n,
            energy,
            g,
            g_inv,
            spray,
        })
    }

    /// `N^i_j = ∂G^i/∂y^j` as jets.
    pub fn connection_jets(&self) -> Result<Vec<Vec<Jet>>> {
        let n = self.n;
        self.spray
            .iter()
            .map(|gi| (0..n).map(|j| gi.derivative(n + j)).collect())
            .collect()
    }

    pub fn spray_values(&self) -> Vec<f64> {
        self.spray.iter().map(Jet::value).collect()
    }

    pub fn g_values(&self) -> Matrix {
        matrix(self.n, |i, j| self.g[i][j].value())
    }

    /// `∂^vars F`, with `x_i` at slot `i` and `y_i` at slot `n + i`.
    fn energy_partial(&self, vars: &[usize]) -> f64 {
        self.energy
            .partial_vars(vars)
            .expect("energy jet order checked by caller")
    }
}

/// Horizontal curl `δN^m_k/δx^j − δN^m_j/δx^k` as jets one order below `nj`.
fn curvature_jets(n: usize, nj: &[Vec<Jet>]) -> Result<Vec<Vec<Vec<Jet>>>> {
    let lower = nj[0][0].order() - 1;
    // a[m][j][k] = ∂_{x_j} N^m_k − N^l_j ∂_{y_l} N^m_k
    let mut a: Vec<Vec<Vec<Jet>>> = Vec::with_capacity(n);
    for m in 0..n {
        let mut rows = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                let mut acc = nj[m][k].derivative(j)?;
                for l in 0..n {
                    let t = &nj[l][j].truncate(lower)? * &nj[m][k].derivative(n + l)?;
                    acc = &acc - &t;
                }
                row.push(acc);
            }
            rows.push(row);
        }
        a.push(rows);
    }
    Ok((0..n)
        .map(|m| {
            (0..n)
                .map(|j| (0..n).map(|k| &a[m][j][k] - &a[m][k][j]).collect())
                .collect()
        })
        .collect())
}

/// Every tensor of the calculus at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorState {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "F")]
    pub energy: f64,
    pub g: Matrix,
    pub g_inv: Matrix,
    pub y_low: Vec<f64>,
    pub l_low: Vec<f64>,
    pub l_up: Vec<f64>,
    pub h: Matrix,
    #[serde(rename = "C")]
    pub cartan: Tensor3,
    #[serde(rename = "C_mixed")]
    pub cartan_mixed: Tensor3,
    #[serde(rename = "C4")]
    pub cartan_derivative: Tensor4,
    pub gamma_low: Tensor3,
    pub gamma_up: Tensor3,
    #[serde(rename = "G")]
    pub spray: Vec<f64>,
    #[serde(rename = "N")]
    pub connection: Matrix,
    pub chern_rund: Tensor3,
    #[serde(rename = "R2")]
    pub curvature2: Tensor3,
    #[serde(rename = "R3")]
    pub curvature3: Tensor4,
}

impl TensorState {
    pub fn compute(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<TensorState> {
        let sj = SprayJets::compute(metric, x, y, FULL_ORDER)?;
        let n = sj.n;
        let yv = |i: usize| n + i;
        let energy = sj.energy.value();
        let length = (2.0 * energy).sqrt();
        let g = matrix(n, |i, j| sj.energy_partial(&[yv(i), yv(j)]));
        let g_inv = linalg::inverse_checked(&g, "fundamental tensor")?;
        let y_low = linalg::mat_vec(&g, y);
        let l_low: Vec<f64> = y_low.iter().map(|v| v / length).collect();
        let l_up: Vec<f64> = y.iter().map(|v| v / length).collect();
        let h = matrix(n, |i, j| g[i][j] - l_low[i] * l_low[j]);
        let cartan = tensor3(n, |i, j, k| 0.5 * sj.energy_partial(&[yv(i), yv(j), yv(k)]));
        let cartan_mixed = raise_first(&g_inv, &cartan);
        let cartan_derivative = tensor4(n, |i, j, k, m| 0.5 * sj.energy_partial(&[yv(i), yv(j), yv(k), yv(m)]));
        let dg_dx = tensor3(n, |k, i, j| sj.energy_partial(&[k, yv(i), yv(j)]));
        let gamma_low = tensor3(n, |i, j, k| 0.5 * (dg_dx[k][i][j] + dg_dx[j][i][k] - dg_dx[i][j][k]));
        let gamma_up = raise_first(&g_inv, &gamma_low);
        let spray = sj.spray_values();
        let nj = sj.connection_jets()?;
        let connection = matrix(n, |i, j| nj[i][j].value());
        let chern_rund = chern_rund_from(n, &g_inv, &dg_dx, &cartan, &connection);
        let r2 = curvature_jets(n, &nj)?;
        let curvature2 = tensor3(n, |m, j, k| r2[m][j][k].value());
        let mut curvature3 = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for (m, r2m) in r2.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        curvature3[m][i][j][k] = r2m[j][k].partial_vars(&[n + i])?;
                    }
                }
            }
        }
        let state = TensorState {
            length,
            energy,
            g,
            g_inv,
            y_low,
            l_low,
            l_up,
            h,
            cartan,
            cartan_mixed,
            cartan_derivative,
            gamma_low,
            gamma_up,
            spray,
            connection,
            chern_rund,
            curvature2,
            curvature3,
        };
        if !state.all_finite() {
            return Err(FinslerError::NumericalInstability("non-finite tensor entries".into()));
        }
        Ok(state)
    }

    fn all_finite(&self) -> bool {
        let flat3 = |t: &Tensor3| t.iter().flatten().flatten().all(|v| v.is_finite());
        let flat4 = |t: &Tensor4| t.iter().flatten().flatten().flatten().all(|v| v.is_finite());
        let flat2 = |t: &Matrix| t.iter().flatten().all(|v| v.is_finite());
        self.length.is_finite()
            && flat2(&self.g)
            && flat2(&self.g_inv)
            && flat2(&self.h)
            && flat2(&self.connection)
            && flat3(&self.cartan)
            && flat3(&self.gamma_up)
            && flat3(&self.chern_rund)
            && flat3(&self.curvature2)
            && flat4(&self.cartan_derivative)
            && flat4(&self.curvature3)
            && self.spray.iter().all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tensor serialization cannot fail")
    }
}

/// `T^i_jk = g^{il} T_ljk`
fn raise_first(g_inv: &Matrix, t: &Tensor3) -> Tensor3 {
    let n = g_inv.len();
    tensor3(n, |i, j, k| (0..n).map(|l| g_inv[i][l] * t[l][j][k]).sum())
}

/// Chern-Rund coefficients from `∂g/∂x` (`dg_dx[k][i][j] = ∂_k g_ij`), the
/// Cartan tensor and the nonlinear connection.
fn chern_rund_from(n: usize, g_inv: &Matrix, dg_dx: &Tensor3, cartan: &Tensor3, nl: &Matrix) -> Tensor3 {
    // δg_ij/δx^k = ∂_k g_ij − N^l_k ∂g_ij/∂y^l = ∂_k g_ij − 2 N^l_k C_lij
    let delta = tensor3(n, |k, i, j| {
        dg_dx[k][i][j] - 2.0 * (0..n).map(|l| nl[l][k] * cartan[l][i][j]).sum::<f64>()
    });
    let lowered = tensor3(n, |r, j, k| 0.5 * (delta[j][r][k] + delta[k][r][j] - delta[r][j][k]));
    raise_first(g_inv, &lowered)
}

/// `g_ij = ½ ∂²L²/∂y^i∂y^j`, rejecting degenerate points.
pub fn fundamental_tensor(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Matrix> {
    let n = metric.dim();
    let f = metric.energy_jet(x, y, 2)?;
    let g = matrix(n, |i, j| f.partial_vars(&[n + i, n + j]).expect("order 2"));
    if linalg::is_degenerate(&g, linalg::DEGENERACY_REL) {
        return Err(FinslerError::DegenerateMetric(format!(
            "det g = {:e} at x = {x:?}, y = {y:?}",
            linalg::det(&g)
        )));
    }
    Ok(g)
}

/// Normalized quantities of an m-th root metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MthRootTensors {
    pub m: u32,
    pub length: f64,
    /// `a_i = a_{ij…k} y^j … y^k / L^{m−1}`
    pub a_i: Vec<f64>,
    /// `a_ij = a_{ijk…} y^k … / L^{m−2}`
    pub a_ij: Matrix,
    /// `a_{ijk…} y^k …` without the `L` normalization.
    pub contracted: Matrix,
}

pub fn mth_root_tensors(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<MthRootTensors> {
    let MetricKind::MthRoot { m, .. } = spec.kind else {
        return Err(FinslerError::InvalidArgument("not an m-th root metric".into()));
    };
    let n = spec.dim;
    let vars = crate::metric::point_jets(x, y, n, 2)?;
    let power = spec.mth_power(&vars)?;
    let p = power.value();
    if p <= 0.0 || !p.is_finite() {
        return Err(FinslerError::OutsideDomain(format!("L^{m} = {p} is not positive")));
    }
    let mf = m as f64;
    let length = p.powf(1.0 / mf);
    let a_i = (0..n)
        .map(|i| power.partial_vars(&[n + i]).map(|d| d / mf / length.powi(m as i32 - 1)))
        .collect::<Result<_>>()?;
    let contracted = matrix(n, |i, j| {
        power.partial_vars(&[n + i, n + j]).expect("order 2") / (mf * (mf - 1.0))
    });
    let a_ij = matrix(n, |i, j| contracted[i][j] / length.powi(m as i32 - 2));
    Ok(MthRootTensors {
        m,
        length,
        a_i,
        a_ij,
        contracted,
    })
}

/// Lowered direction and unit vectors and the angular metric.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVectors {
    pub y_low: Vec<f64>,
    pub l_low: Vec<f64>,
    pub l_up: Vec<f64>,
    pub h: Matrix,
}

pub fn unit_and_angular(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<UnitVectors> {
    let g = fundamental_tensor(metric, x, y)?;
    let length = metric.length(x, y)?;
    let y_low = linalg::mat_vec(&g, y);
    let l_low: Vec<f64> = y_low.iter().map(|v| v / length).collect();
    let l_up = y.iter().map(|v| v / length).collect();
    let h = matrix(g.len(), |i, j| g[i][j] - l_low[i] * l_low[j]);
    Ok(UnitVectors { y_low, l_low, l_up, h })
}

/// `(C_ijk, C^i_jk, C_ijkm)`.
pub fn cartan_tensor(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<(Tensor3, Tensor3, Tensor4)> {
    let n = metric.dim();
    let f = metric.energy_jet(x, y, 4)?;
    let part = |v: &[usize]| f.partial_vars(v).expect("order 4");
    let g = matrix(n, |i, j| part(&[n + i, n + j]));
    let g_inv = linalg::inverse_checked(&g, "fundamental tensor")?;
    let c = tensor3(n, |i, j, k| 0.5 * part(&[n + i, n + j, n + k]));
    let c4 = tensor4(n, |i, j, k, m| 0.5 * part(&[n + i, n + j, n + k, n + m]));
    let mixed = raise_first(&g_inv, &c);
    Ok((c, mixed, c4))
}

/// Christoffel-type symbols of `g(x, y)` and the spray coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Spray {
    pub gamma_low: Tensor3,
    pub gamma_up: Tensor3,
    /// `G^i = g^{ij} G_j`
    pub spray: Vec<f64>,
    /// `½ γ^i_jk y^j y^k`, the same quantity assembled the other way.
    pub spray_from_gamma: Vec<f64>,
}

pub fn spray(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Spray> {
    let sj = SprayJets::compute(metric, x, y, 3)?;
    let n = sj.n;
    let g = sj.g_values();
    let g_inv = linalg::inverse_checked(&g, "fundamental tensor")?;
    let dg_dx = tensor3(n, |k, i, j| sj.energy_partial(&[k, n + i, n + j]));
    let gamma_low = tensor3(n, |i, j, k| 0.5 * (dg_dx[k][i][j] + dg_dx[j][i][k] - dg_dx[i][j][k]));
    let gamma_up = raise_first(&g_inv, &gamma_low);
    let spray_from_gamma = (0..n)
        .map(|i| {
            0.5 * (0..n)
                .flat_map(|j| (0..n).map(move |k| (j, k)))
                .map(|(j, k)| gamma_up[i][j][k] * y[j] * y[k])
                .sum::<f64>()
        })
        .collect();
    Ok(Spray {
        gamma_low,
        gamma_up,
        spray: sj.spray_values(),
        spray_from_gamma,
    })
}

/// Spray coefficients `G^i` only (cheapest path, used by integrators).
pub fn spray_coefficients(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(SprayJets::compute(metric, x, y, 2)?.spray_values())
}

/// `N^i_j = ∂G^i/∂y^j`.
pub fn nonlinear_connection(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Matrix> {
    let sj = SprayJets::compute(metric, x, y, 3)?;
    let nj = sj.connection_jets()?;
    Ok(matrix(sj.n, |i, j| nj[i][j].value()))
}

/// Berwald coefficients `G^i_jk = ∂²G^i/∂y^j∂y^k`.
pub fn berwald_coefficients(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let sj = SprayJets::compute(metric, x, y, 4)?;
    let n = sj.n;
    let mut out = vec![vec![vec![0.0; n]; n]; n];
    for (i, gi) in sj.spray.iter().enumerate() {
        for j in 0..n {
            for k in j..n {
                let v = gi.partial_vars(&[n + j, n + k])?;
                out[i][j][k] = v;
                out[i][k][j] = v;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionKind {
    ChernRund,
    Cartan,
}

/// Finsler connection `(N, H, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionTriple {
    pub kind: ConnectionKind,
    pub n: Matrix,
    pub h: Tensor3,
    pub c: Tensor3,
}

pub fn connection_triple(metric: &dyn Metric, x: &[f64], y: &[f64], kind: ConnectionKind) -> Result<ConnectionTriple> {
    let sj = SprayJets::compute(metric, x, y, 3)?;
    let n = sj.n;
    let g = sj.g_values();
    let g_inv = linalg::inverse_checked(&g, "fundamental tensor")?;
    let nj = sj.connection_jets()?;
    let nl = matrix(n, |i, j| nj[i][j].value());
    let dg_dx = tensor3(n, |k, i, j| sj.energy_partial(&[k, n + i, n + j]));
    let cartan = tensor3(n, |i, j, k| 0.5 * sj.energy_partial(&[n + i, n + j, n + k]));
    let h = chern_rund_from(n, &g_inv, &dg_dx, &cartan, &nl);
    let c = match kind {
        ConnectionKind::ChernRund => vec![vec![vec![0.0; n]; n]; n],
        ConnectionKind::Cartan => raise_first(&g_inv, &cartan),
    };
    Ok(ConnectionTriple { kind, n: nl, h, c })
}

/// `R^m_jk` alone, from a fourth-order jet.
pub fn curvature2(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let sj = SprayJets::compute(metric, x, y, 4)?;
    let n = sj.n;
    let r2 = curvature_jets(n, &sj.connection_jets()?)?;
    Ok(tensor3(n, |m, j, k| r2[m][j][k].value()))
}

/// `∂R^m_jk/∂y^i` by central differences of [`curvature2`], Richardson
/// extrapolated once.
pub fn curvature3_finite_difference(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<Tensor4> {
    let n = metric.dim();
    let mut out = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        let h = f64::EPSILON.cbrt() * (1.0 + y[i].abs());
        let central = |step: f64| -> Result<Tensor3> {
            let mut up = y.to_vec();
            let mut dn = y.to_vec();
            up[i] += step;
            dn[i] -= step;
            let a = curvature2(metric, x, &up)?;
            let b = curvature2(metric, x, &dn)?;
            Ok(tensor3(n, |m, j, k| (a[m][j][k] - b[m][j][k]) / (2.0 * step)))
        };
        let coarse = central(h)?;
        let fine = central(h / 2.0)?;
        for m in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[m][i][j][k] = (4.0 * fine[m][j][k] - coarse[m][j][k]) / 3.0;
                }
            }
        }
    }
    Ok(out)
}

/// Relative disagreement between jet and finite-difference `R^m_ijk` above
/// which [`curvature`] reports numerical instability.
pub const CURVATURE_CROSSCHECK_TOL: f64 = 1e-2;

/// `(R^m_jk, R^m_ijk)`; the `y`-derivative is cross-checked against finite
/// differences of `R^m_jk`.
pub fn curvature(metric: &dyn Metric, x: &[f64], y: &[f64]) -> Result<(Tensor3, Tensor4)> {
    let sj = SprayJets::compute(metric, x, y, FULL_ORDER)?;
    let n = sj.n;
    let r2 = curvature_jets(n, &sj.connection_jets()?)?;
    let values = tensor3(n, |m, j, k| r2[m][j][k].value());
    let mut r3 = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for (m, r2m) in r2.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    r3[m][i][j][k] = r2m[j][k].partial_vars(&[n + i])?;
                }
            }
        }
    }
    let fd = curvature3_finite_difference(metric, x, y)?;
    let flat = |t: &Tensor4| t.iter().flatten().flatten().flatten().copied().collect::<Vec<f64>>();
    let (jet_flat, fd_flat) = (flat(&r3), flat(&fd));
    let scale = scale_of(&jet_flat);
    let worst = jet_flat
        .iter()
        .zip(&fd_flat)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if worst > CURVATURE_CROSSCHECK_TOL * scale {
        return Err(FinslerError::NumericalInstability(format!(
            "curvature jet and finite-difference paths disagree by {worst:e}"
        )));
    }
    Ok((values, r3))
}

/// `D_y(X)^j = y^k ∂X^j/∂x^k + N^j_i(y) X^i` for a vector field given by `n`
/// expressions in `x0..x{n-1}`.
pub fn covariant_derivative(metric: &dyn Metric, x: &[f64], y: &[f64], field: &[Expr]) -> Result<Vec<f64>> {
    let n = metric.dim();
    if field.len() != n {
        return Err(FinslerError::InvalidArgument(format!(
            "vector field has {} components, dimension is {n}",
            field.len()
        )));
    }
    let nl = nonlinear_connection(metric, x, y)?;
    let xs = Jet::variables(x, 1)?;
    let comps: Vec<Jet> = field.iter().map(|e| e.eval(&xs)).collect::<Result<_>>()?;
    (0..n)
        .map(|j| {
            let mut v = 0.0;
            for k in 0..n {
                v += y[k] * comps[j].partial_vars(&[k])?;
            }
            for (i, c) in comps.iter().enumerate() {
                v += nl[j][i] * c.value();
            }
            Ok(v)
        })
        .collect()
}

/// A point of the indicatrix `{L(x, ·) = 1}` with the osculating residual
/// `|g_ij(x, y) y^i y^j − 1|`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatrixSample {
    pub y: Vec<f64>,
    pub length: f64,
    pub residual: f64,
}

pub fn indicatrix(metric: &dyn Metric, x: &[f64], samples: usize, seed: u64) -> Result<Vec<IndicatrixSample>> {
    if samples == 0 {
        return Err(FinslerError::InvalidArgument("samples must be at least 1".into()));
    }
    let mut sampler = PointSampler::new(seed);
    let domain = metric.sampling_domain();
    (0..samples)
        .map(|_| {
            for _ in 0..MAX_RETRIES {
                let u = sampler.uniform(&domain.y);
                let Ok(l) = metric.length(x, &u) else { continue };
                let y: Vec<f64> = u.iter().map(|v| v / l).collect();
                let Ok(g) = fundamental_tensor(metric, x, &y) else {
                    continue;
                };
                let quad = linalg::dot(&y, &linalg::mat_vec(&g, &y));
                return Ok(IndicatrixSample {
                    length: metric.length(x, &y)?,
                    residual: (quad - 1.0).abs(),
                    y,
                });
            }
            Err(FinslerError::SamplingExhausted(format!(
                "no admissible direction at x = {x:?} after {MAX_RETRIES} draws"
            )))
        })
        .collect()
}
