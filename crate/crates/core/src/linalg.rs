//! Dense floating-point helpers: one-sided Jacobi singular values, compound
//! matrices, Haar-random orthogonal matrices and JSON matrix conversion.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Singular values in non-increasing order by one-sided (Hestenes) Jacobi
/// rotations on the columns.
///
/// The matrix is pre-scaled by its largest entry so squared column norms
/// cannot overflow; the scale is restored on output.
pub fn jacobi_singular_values(a: &Matrix) -> Vec<f64> {
    let scale = max_abs(a);
    if scale == 0.0 || !scale.is_finite() {
        return vec![if scale.is_finite() { 0.0 } else { f64::NAN }; a.ncols()];
    }
    let mut u = a / scale;
    let (rows, n) = u.shape();
    for _ in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..rows {
                    let (x, y) = (u[(k, i)], u[(k, j)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let (x, y) = (u[(k, i)], u[(k, j)]);
                    u[(k, i)] = c * x - s * y;
                    u[(k, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| {
            let col = u.column(j);
            let m = col.amax();
            if m == 0.0 {
                0.0
            } else {
                (col / m).norm() * m * scale
            }
        })
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn top_singular_value(a: &Matrix) -> f64 {
    jacobi_singular_values(a)[0]
}

/// The `i`-element subsets of `0..n` in lexicographic order.
pub fn index_sets(n: usize, i: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(i).collect()
}

/// Matrix of `Λ^i g` in the basis `e_I = e_{i_1} ∧ … ∧ e_{i_k}`, index sets in
/// lexicographic order: entry `(I, J)` is the minor of `g` on rows `I`,
/// columns `J`.
pub fn compound_matrix(g: &Matrix, i: usize) -> Result<Matrix> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::DimensionMismatch { left: n, right: g.ncols() });
    }
    if i == 0 || i >= n {
        return Err(Error::BadIndex { index: i, dim: n });
    }
    let sets = index_sets(n, i);
    let d = sets.len();
    let mut out = Matrix::zeros(d, d);
    for (r, rows) in sets.iter().enumerate() {
        for (c, cols) in sets.iter().enumerate() {
            let sub = Matrix::from_fn(i, i, |a, b| g[(rows[a], cols[b])]);
            out[(r, c)] = sub.determinant();
        }
    }
    Ok(out)
}

/// A Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal moved into `Q`.
pub fn haar_orthogonal<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `ln ‖g‖` for the operator norm.
pub fn log_op_norm(g: &Matrix) -> f64 {
    top_singular_value(g).ln()
}

pub fn inverse(g: &Matrix) -> Result<Matrix> {
    g.clone().try_inverse().ok_or(Error::SingularInput)
}

pub fn to_rows(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { left: m, right: bad.len() });
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn from_square_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let a = from_rows(rows)?;
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: a.ncols() });
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_on_shear() {
        let g = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let s = jacobi_singular_values(&g);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((s[0] - phi).abs() < 1e-14);
        assert!((s[1] - 1.0 / phi).abs() < 1e-14);
    }

    #[test]
    fn jacobi_keeps_relative_accuracy_on_graded_diagonal() {
        let g = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1e150, 1.0, 1e-150]));
        let s = jacobi_singular_values(&g);
        assert!((s[2] / 1e-150 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn second_compound_of_diagonal() {
        let g = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0, 5.0]));
        let c = compound_matrix(&g, 2).unwrap();
        assert_eq!(c, Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![6.0, 10.0, 15.0])));
        assert_eq!(compound_matrix(&g, 1).unwrap(), g);
        assert!(matches!(compound_matrix(&g, 3), Err(Error::BadIndex { index: 3, dim: 3 })));
    }

    #[test]
    fn haar_is_orthogonal() {
        let mut rng = crate::seed::substream(1, "t", 0);
        let q = haar_orthogonal(5, &mut rng);
        assert!((q.transpose() * &q - Matrix::identity(5, 5)).amax() < 1e-12);
    }
}
