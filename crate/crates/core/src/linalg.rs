//! Small dense linear algebra on row-major `Vec<Vec<f64>>` matrices: LU and
//! symmetric eigenvalues backed by nalgebra, plus Gauss-Jordan inversion of
//! matrices of jets.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{FinslerError, Result};
use crate::jets::Jet;

pub type Matrix = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn mat_vec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let m = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &Matrix) -> Matrix {
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn to_dmatrix(a: &Matrix) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, a.first().map_or(0, Vec::len), |i, j| a[i][j])
}

fn from_dmatrix(m: &DMatrix<f64>) -> Matrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu(LU<f64, Dyn, Dyn>);

impl Lu {
    /// Factorizes `a`; fails only on an exactly singular or non-finite matrix.
    pub fn new(a: &Matrix) -> Result<Lu> {
        let n = a.len();
        if a.iter().any(|r| r.len() != n) {
            return Err(FinslerError::InvalidArgument("matrix is not square".into()));
        }
        if a.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FinslerError::DegenerateMetric("non-finite matrix entry".into()));
        }
        let lu = to_dmatrix(a).lu();
        if !lu.is_invertible() {
            return Err(FinslerError::DegenerateMetric("zero pivot".into()));
        }
        Ok(Lu(lu))
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let x = self
            .0
            .solve(&DVector::from_column_slice(b))
            .expect("factorization checked invertible");
        x.iter().copied().collect()
    }

    pub fn inverse(&self) -> Matrix {
        from_dmatrix(&self.0.try_inverse().expect("factorization checked invertible"))
    }
}

/// Determinant; zero for exactly singular matrices.
pub fn det(a: &Matrix) -> f64 {
    Lu::new(a).map_or(0.0, |lu| lu.det())
}

/// True when `|det a| < rel · (max|a_ij|)^n`.
pub fn is_degenerate(a: &Matrix, rel: f64) -> bool {
    let scale = max_abs(a);
    if scale == 0.0 {
        return true;
    }
    det(a).abs() < rel * scale.powi(a.len() as i32)
}

/// Relative threshold below which a fundamental tensor counts as degenerate.
pub const DEGENERACY_REL: f64 = 1e-12;

/// Inverts a matrix, rejecting degenerate ones per [`DEGENERACY_REL`].
pub fn inverse_checked(a: &Matrix, what: &str) -> Result<Matrix> {
    if is_degenerate(a, DEGENERACY_REL) {
        return Err(FinslerError::DegenerateMetric(format!(
            "{what} is singular (det {:e})",
            det(a)
        )));
    }
    Ok(Lu::new(a)?.inverse())
}

pub fn solve_checked(a: &Matrix, b: &[f64], what: &str) -> Result<Vec<f64>> {
    if is_degenerate(a, DEGENERACY_REL) {
        return Err(FinslerError::DegenerateMetric(format!(
            "{what} is singular (det {:e})",
            det(a)
        )));
    }
    Ok(Lu::new(a)?.solve(b))
}

/// Inverse of a matrix of jets by Gauss-Jordan elimination, pivoting on the
/// constant terms. The result is the jet of the inverse matrix function.
pub fn invert_jets(a: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = a.len();
    let values: Matrix = a.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
    if is_degenerate(&values, DEGENERACY_REL) {
        return Err(FinslerError::DegenerateMetric(format!(
            "matrix is singular (det {:e})",
            det(&values)
        )));
    }
    let proto = &a[0][0];
    let mut left: Vec<Vec<Jet>> = a.to_vec();
    let mut right: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| proto.constant_like(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| left[i][k].value().abs().total_cmp(&left[j][k].value().abs()))
            .expect("non-empty pivot range");
        left.swap(p, k);
        right.swap(p, k);
        let pivot_inv = left[k][k].recip()?;
        for j in 0..n {
            left[k][j] = &left[k][j] * &pivot_inv;
            right[k][j] = &right[k][j] * &pivot_inv;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let factor = left[i][k].clone();
            for j in 0..n {
                let l = &left[k][j] * &factor;
                left[i][j] = &left[i][j] - &l;
                let r = &right[k][j] * &factor;
                right[i][j] = &right[i][j] - &r;
            }
        }
    }
    Ok(right)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let mut eig: Vec<f64> = to_dmatrix(a).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Singular values of a symmetric matrix, ascending.
pub fn symmetric_singular_values(a: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = symmetric_eigenvalues(a).into_iter().map(f64::abs).collect();
    s.sort_by(f64::total_cmp);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lu_solve_and_det() {
        let a = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]];
        let lu = Lu::new(&a).unwrap();
        // cofactor expansion along the first row
        let by_hand = 0.0 * (1.0 * 1.0 - 0.0) - 2.0 * (1.0 * 1.0 - 0.0 * 3.0) + 1.0 * (0.0 - 3.0);
        assert_relative_eq!(lu.det(), by_hand, epsilon = 1e-14);
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        let back = mat_vec(&a, &x);
        for (b, want) in back.iter().zip([3.0, 2.0, 4.0]) {
            assert_relative_eq!(*b, want, epsilon = 1e-14);
        }
        let prod = mat_mul(&a, &lu.inverse());
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(prod[i][j], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn degeneracy() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(is_degenerate(&a, DEGENERACY_REL));
        assert!(inverse_checked(&a, "g").is_err());
        assert!(!is_degenerate(&identity(3), DEGENERACY_REL));
    }

    #[test]
    fn jet_matrix_inverse_matches_derivative_of_inverse() {
        // A(t) = [[1+t, t], [0, 2]]; d/dt A⁻¹ = −A⁻¹ A' A⁻¹
        let t = Jet::variable(0, 0.5, 1, 2).unwrap();
        let a = vec![
            vec![t.add_scalar(1.0), t.clone()],
            vec![t.constant_like(0.0), t.constant_like(2.0)],
        ];
        let inv = invert_jets(&a).unwrap();
        let a0 = vec![vec![1.5, 0.5], vec![0.0, 2.0]];
        let a0_inv = Lu::new(&a0).unwrap().inverse();
        let da = vec![vec![1.0, 1.0], vec![0.0, 0.0]];
        let d_inv = mat_mul(&mat_mul(&a0_inv, &da), &a0_inv);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(inv[i][j].value(), a0_inv[i][j], epsilon = 1e-14);
                assert_relative_eq!(inv[i][j].partial_vars(&[0]).unwrap(), -d_inv[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn symmetric_eigenvalues_of_block_matrix() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, -5.0]];
        let e = symmetric_eigenvalues(&a);
        assert_relative_eq!(e[0], -5.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(e[2], 3.0, epsilon = 1e-12);
        let s = symmetric_singular_values(&a);
        assert_relative_eq!(s[2], 5.0, epsilon = 1e-12);
    }
}
