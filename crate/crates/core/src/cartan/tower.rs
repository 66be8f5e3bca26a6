use crate::error::{Error, Result};
use nalgebra::DVector;

use crate::linalg::{compound_matrix, index_sets, max_abs, top_singular_value, Matrix};

/// A matrix `g ∈ GL(n, R)` carried through all its exterior powers
/// `Λ^1 g, …, Λ^{n−1} g`, each stored as a normalized matrix times `e^scale`,
/// together with `ln |det g|`.
///
/// Products of towers never overflow, and the Cartan projection of a long
/// product is read off the top singular values of the exterior powers:
/// `σ_1(Λ^i g) = σ_1(g) ⋯ σ_i(g)`.
#[derive(Clone, Debug)]
pub struct Tower {
    n: usize,
    powers: Vec<Matrix>,
    log_scales: Vec<f64>,
    log_det: f64,
}

fn renormalize(m: &mut Matrix) -> f64 {
    let s = max_abs(m);
    if s > 0.0 && s.is_finite() {
        *m /= s;
        s.ln()
    } else {
        0.0
    }
}

/// `g = U diag(e^{ℓ}) Vᵀ` as `(U, ℓ, Vᵀ)`.
fn log_svd(g: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::DimensionMismatch { left: n, right: g.ncols() });
    }
    let mut base = g.clone();
    let s = max_abs(&base);
    if s == 0.0 || !s.is_finite() {
        return Err(Error::SingularInput);
    }
    base /= s;
    let svd = base.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
    if svd.singular_values.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::SingularInput);
    }
    let log_sigma = svd.singular_values.iter().map(|x| x.ln() + s.ln()).collect();
    Ok((u, log_sigma, v_t))
}

impl Tower {
    pub fn identity(n: usize) -> Tower {
        let powers = (1..n).map(|i| {
            let d = index_sets(n, i).len();
            Matrix::identity(d, d)
        });
        Tower { n, powers: powers.collect(), log_scales: vec![0.0; n.saturating_sub(1)], log_det: 0.0 }
    }

    /// Exterior powers through the singular value decomposition
    /// `Λ^i g = Λ^i U · Λ^i Σ · Λ^i Vᵀ`, which keeps the leading part of every
    /// `Λ^i g` accurate even when `g` is badly conditioned.
    pub fn from_matrix(g: &Matrix) -> Result<Tower> {
        let (u, log_sigma, v_t) = log_svd(g)?;
        Tower::from_parts(&u, &log_sigma, &v_t)
    }

    /// The tower of `g⁻¹ = V Σ⁻¹ Uᵀ`, without forming `g⁻¹` by elimination.
    pub fn from_inverse_of(g: &Matrix) -> Result<Tower> {
        let (u, log_sigma, v_t) = log_svd(g)?;
        let neg: Vec<f64> = log_sigma.iter().map(|x| -x).collect();
        Tower::from_parts(&v_t.transpose(), &neg, &u.transpose())
    }

    fn from_parts(u: &Matrix, log_sigma: &[f64], v_t: &Matrix) -> Result<Tower> {
        let n = log_sigma.len();
        let mut powers = Vec::with_capacity(n.saturating_sub(1));
        let mut log_scales = Vec::with_capacity(n.saturating_sub(1));
        for i in 1..n {
            let sets = index_sets(n, i);
            let logs: Vec<f64> = sets.iter().map(|set| set.iter().map(|&k| log_sigma[k]).sum()).collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let diag = DVector::from_iterator(logs.len(), logs.iter().map(|l| (l - top).exp()));
            let mut c = compound_matrix(u, i)? * Matrix::from_diagonal(&diag) * compound_matrix(v_t, i)?;
            let ls = renormalize(&mut c) + top;
            powers.push(c);
            log_scales.push(ls);
        }
        Ok(Tower { n, powers, log_scales, log_det: log_sigma.iter().sum() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `Λ^i` as (normalized matrix, log scale).
    pub fn power(&self, i: usize) -> (&Matrix, f64) {
        (&self.powers[i - 1], self.log_scales[i - 1])
    }

    /// The matrix itself, as (normalized matrix, log scale).
    pub fn base(&self) -> (&Matrix, f64) {
        self.power(1)
    }

    /// `self · other`.
    pub fn mul(&self, other: &Tower) -> Tower {
        let mut powers = Vec::with_capacity(self.powers.len());
        let mut log_scales = Vec::with_capacity(self.powers.len());
        for k in 0..self.powers.len() {
            let mut p = &self.powers[k] * &other.powers[k];
            let s = renormalize(&mut p);
            powers.push(p);
            log_scales.push(self.log_scales[k] + other.log_scales[k] + s);
        }
        Tower { n: self.n, powers, log_scales, log_det: self.log_det + other.log_det }
    }

    pub fn pow(&self, m: u64) -> Tower {
        let mut result = Tower::identity(self.n);
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// `ln σ_1(Λ^i g)` for `i = 0..=n`, with the conventions `Λ^0 = 1` and
    /// `Λ^n = det`.
    pub fn log_top_singular_values(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for k in 0..self.powers.len() {
            out.push(top_singular_value(&self.powers[k]).ln() + self.log_scales[k]);
        }
        out.push(self.log_det);
        out
    }

    /// Log singular values of `|det g|^{−1/n} g`, non-increasing.
    pub fn mu(&self) -> Vec<f64> {
        let s = self.log_top_singular_values();
        let shift = self.log_det / self.n as f64;
        let mut mu: Vec<f64> = s.windows(2).map(|w| w[1] - w[0] - shift).collect();
        mu.sort_by(|a, b| b.total_cmp(a));
        mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn powers_of_diagonal() {
        let g = Matrix::from_diagonal(&DVector::from_vec(vec![2f64.exp(), 1.0, (-2f64).exp()]));
        let t = Tower::from_matrix(&g).unwrap().pow(100);
        let mu = t.mu();
        assert!((mu[0] - 200.0).abs() < 1e-9);
        assert!(mu[1].abs() < 1e-9);
        assert!((mu[2] + 200.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_tower_of_conditioned_matrix() {
        // Λ³(g⁻¹) of a 4×4 matrix with condition number e^24
        let h = crate::linalg::haar_orthogonal(4, &mut crate::seed::substream(3, "test", 0));
        let x = [12.0, 4.0, -4.0, -12.0];
        let g = &h * Matrix::from_diagonal(&DVector::from_iterator(4, x.iter().map(|v: &f64| v.exp()))) * h.transpose();
        let mu = Tower::from_inverse_of(&g).unwrap().mu();
        for (a, b) in mu.iter().zip([12.0, 4.0, -4.0, -12.0]) {
            assert!((a - b).abs() < 1e-6, "{mu:?}");
        }
        let t = Tower::from_inverse_of(&g).unwrap();
        let (c, _) = t.power(3);
        let ev: Vec<f64> = c.complex_eigenvalues().iter().map(|z| z.norm()).collect();
        let mut ev = ev;
        ev.sort_by(|a, b| b.total_cmp(a));
        assert!((ev[1] / ev[0] - (-8f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn product_matches_direct_computation() {
        let a = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.5, 1.0, 0.3, 0.0, -1.0, 1.5]);
        let b = Matrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 1.0, 1.0, 1.0]);
        let direct = Tower::from_matrix(&(&a * &b)).unwrap().mu();
        let product = Tower::from_matrix(&a).unwrap().mul(&Tower::from_matrix(&b).unwrap()).mu();
        for (x, y) in direct.iter().zip(&product) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
