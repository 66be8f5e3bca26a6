use serde::{Deserialize, Serialize};

use super::{sup_distance, sup_norm, Tower};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Largest power accepted by [`growth_probe`].
pub const MAX_GROWTH_POWER: usize = 60;

/// Budget for `p_max · (ln ‖g‖ + ln ‖g⁻¹‖)`, which bounds the log-size of
/// the entries formed along the way.
const LOG_SIZE_BUDGET: f64 = 700.0;

/// Sup-norm distance from `x` to the `ι`-fixed subspace
/// `{x_i = −x_{n+1−i}}` of the `SL(n)` chamber span.
pub fn b_plus_distance(x: &[f64]) -> f64 {
    let n = x.len();
    let mut d = (0..n / 2).map(|i| (x[i] + x[n - 1 - i]).abs() / 2.0).fold(0.0, f64::max);
    if n % 2 == 1 {
        d = d.max(x[n / 2].abs());
    }
    d
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    pub p_max: usize,
    /// `differences[p − 1] = ‖μ(gᵖ f g⁻ᵖ) − μ(gᵖ f′ g⁻ᵖ)‖_∞`.
    pub differences: Vec<f64>,
    pub sup_difference: f64,
    /// `μ(gᵖ f g⁻ᵖ)` for `p = 1..=p_max`.
    pub mu_f: Vec<Vec<f64>>,
    /// Distance from `μ(gᵖ f g⁻ᵖ)` to the span of `B⁺`.
    pub b_plus_distance: Vec<f64>,
    /// `‖μ(gᵖ f g⁻ᵖ)‖_∞`.
    pub mu_norm: Vec<f64>,
}

/// Compares `μ(gᵖ f g⁻ᵖ)` with `μ(gᵖ f′ g⁻ᵖ)` for `p = 1..=p_max`.
pub fn growth_probe(g: &Matrix, f: &Matrix, f_prime: &Matrix, p_max: usize) -> Result<GrowthReport> {
    let n = g.nrows();
    for m in [f, f_prime] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch { left: n, right: m.nrows() });
        }
    }
    let tg = Tower::from_matrix(g)?;
    let tg_inv = Tower::from_inverse_of(g)?;
    let log_size = p_max as f64 * (tg.log_top_singular_values()[1] + tg_inv.log_top_singular_values()[1]);
    if p_max > MAX_GROWTH_POWER || log_size > LOG_SIZE_BUDGET {
        return Err(Error::OverflowRisk(format!(
            "p_max = {p_max} with ln‖g‖ + ln‖g⁻¹‖ = {:.3} (limits: p_max ≤ {MAX_GROWTH_POWER}, product ≤ {LOG_SIZE_BUDGET})",
            log_size / p_max.max(1) as f64
        )));
    }
    let tf = Tower::from_matrix(f)?;
    let tf2 = Tower::from_matrix(f_prime)?;
    let mut left = Tower::identity(n);
    let mut right = Tower::identity(n);
    let mut report = GrowthReport {
        p_max,
        differences: Vec::new(),
        sup_difference: 0.0,
        mu_f: Vec::new(),
        b_plus_distance: Vec::new(),
        mu_norm: Vec::new(),
    };
    for _ in 0..p_max {
        left = left.mul(&tg);
        right = tg_inv.mul(&right);
        let a = left.mul(&tf).mul(&right).mu();
        let b = left.mul(&tf2).mul(&right).mu();
        let diff = sup_distance(&a, &b);
        report.sup_difference = report.sup_difference.max(diff);
        report.differences.push(diff);
        report.b_plus_distance.push(b_plus_distance(&a));
        report.mu_norm.push(sup_norm(&a));
        report.mu_f.push(a);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_conjugands_give_zero() {
        let g = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1f64.exp(), (-1f64).exp()]));
        let f = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 2.0]);
        let r = growth_probe(&g, &f, &f, 20).unwrap();
        assert!(r.differences.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn overflow_guard() {
        let g = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![10f64.exp(), (-10f64).exp()]));
        let f = Matrix::identity(2, 2);
        assert!(matches!(growth_probe(&g, &f, &f, 61), Err(Error::OverflowRisk(_))));
        assert!(matches!(growth_probe(&g, &f, &f, 40), Err(Error::OverflowRisk(_))));
    }

    #[test]
    fn distance_to_fixed_line() {
        assert_eq!(b_plus_distance(&[2.0, 0.5, -3.0]), 0.5);
        assert_eq!(b_plus_distance(&[3.0, -3.0]), 0.0);
    }
}
