//! The projective metric, proximal maps and sampled ε-proximality
//! certificates, exterior powers, and product estimates for proximal maps.

mod certificate;
mod product;

pub use certificate::{
    certify_with_data, eps_proximal_certificate, guess_check, ContainmentCheck, EpsCertificate, GuessReport,
    LipschitzCheck, Verdict, DEFAULT_SAMPLES, SAFETY_FACTOR,
};
pub use product::{product_bound_check, ProductReport};

pub use crate::linalg::compound_matrix;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relative tolerance separating the two largest eigenvalue moduli.
pub const DEFAULT_GAP_TOL: f64 = 1e-6;

fn canonical(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::PreconditionFailed("a projective point needs a finite nonzero vector".into()));
    }
    let sign = v.iter().find(|x| **x != 0.0).map_or(1.0, |x| x.signum());
    for x in v.iter_mut() {
        *x *= sign / norm;
    }
    Ok(v)
}

/// A point of `P(R^D)`, stored as a unit vector whose first nonzero
/// coordinate is positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    pub rep: Vec<f64>,
}

impl ProjPoint {
    pub fn new(v: Vec<f64>) -> Result<ProjPoint> {
        Ok(ProjPoint { rep: canonical(v)? })
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }

    /// The line through `g · rep`.
    pub fn image(&self, g: &Matrix) -> Result<ProjPoint> {
        let v = g * DVector::from_column_slice(&self.rep);
        ProjPoint::new(v.iter().copied().collect())
    }
}

/// A hyperplane of `P(R^D)`, stored by its unit normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjHyperplane {
    pub normal: Vec<f64>,
}

impl ProjHyperplane {
    pub fn from_normal(v: Vec<f64>) -> Result<ProjHyperplane> {
        Ok(ProjHyperplane { normal: canonical(v)? })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `min ‖v₁ ± v₂‖ = √(2 − 2|⟨v₁, v₂⟩|)`, evaluated as a difference norm to
/// avoid cancellation for nearby points.
pub fn proj_distance(x1: &ProjPoint, x2: &ProjPoint) -> Result<f64> {
    if x1.dim() != x2.dim() {
        return Err(Error::DimensionMismatch { left: x1.dim(), right: x2.dim() });
    }
    Ok(unit_distance(&x1.rep, &x2.rep))
}

pub(crate) fn unit_distance(a: &[f64], b: &[f64]) -> f64 {
    let s = if dot(a, b) < 0.0 { -1.0 } else { 1.0 };
    a.iter().zip(b).map(|(x, y)| (x - s * y).powi(2)).sum::<f64>().sqrt()
}

/// `δ(x, H) = √(2 − 2√(1 − c²))` with `c = ⟨v, n⟩`, written as
/// `|c| √(2 / (1 + √(1 − c²)))`.
pub fn delta_to_hyperplane(x: &ProjPoint, h: &ProjHyperplane) -> Result<f64> {
    if x.dim() != h.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: h.dim() });
    }
    Ok(delta_from_cosine(dot(&x.rep, &h.normal)))
}

pub(crate) fn delta_from_cosine(c: f64) -> f64 {
    let c = c.abs().min(1.0);
    c * (2.0 / (1.0 + (1.0 - c * c).sqrt())).sqrt()
}

/// `|⟨v, n⟩|` at which `δ(x, H) = ε`.
pub(crate) fn cosine_for_delta(eps: f64) -> f64 {
    let s = 1.0 - eps * eps / 2.0;
    (1.0 - s * s).max(0.0).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProximalData {
    /// Modulus of the dominant eigenvalue.
    pub lambda1: f64,
    pub attracting: ProjPoint,
    pub repelling: ProjHyperplane,
    /// `|α₂| / |α₁|`.
    pub gap: f64,
    /// `δ(x⁺, X^<)`.
    pub margin: f64,
}

fn null_vector(a: &Matrix) -> Vec<f64> {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("non-empty matrix");
    v_t.row(k).iter().copied().collect()
}

/// Eigendata of `g` when its dominant eigenvalue is simple and strictly
/// dominant at relative tolerance `gap_tol`; `None` otherwise.
pub fn proximal_data(g: &Matrix, gap_tol: f64) -> Result<Option<ProximalData>> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::DimensionMismatch { left: n, right: g.ncols() });
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularInput);
    }
    let mut eig: Vec<_> = g.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let lambda1 = eig[0].norm();
    if lambda1 == 0.0 {
        return Err(Error::SingularInput);
    }
    let gap = if n > 1 { eig[1].norm() / lambda1 } else { 0.0 };
    if gap >= 1.0 - gap_tol || eig[0].im.abs() > gap_tol * lambda1 {
        return Ok(None);
    }
    let alpha = eig[0].re;
    let shift = Matrix::identity(n, n) * alpha;
    let attracting = ProjPoint::new(null_vector(&(g - &shift)))?;
    let repelling = ProjHyperplane::from_normal(null_vector(&(g.transpose() - &shift)))?;
    let margin = delta_to_hyperplane(&attracting, &repelling)?;
    Ok(Some(ProximalData { lambda1, attracting, repelling, gap, margin }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> ProjPoint {
        ProjPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distances() {
        assert_eq!(proj_distance(&p(&[1.0, 2.0]), &p(&[1.0, 2.0])).unwrap(), 0.0);
        assert!((proj_distance(&p(&[1.0, 0.0]), &p(&[0.0, 3.0])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(proj_distance(&p(&[1.0, -2.0]), &p(&[-1.0, 2.0])).unwrap(), 0.0);
        assert!(matches!(proj_distance(&p(&[1.0]), &p(&[1.0, 0.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hyperplane_distances() {
        let h = ProjHyperplane::from_normal(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(delta_to_hyperplane(&p(&[1.0, 1.0, 0.0]), &h).unwrap(), 0.0);
        assert!((delta_to_hyperplane(&p(&[0.0, 0.0, 1.0]), &h).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let x = p(&[3f64.sqrt() / 2.0, 0.0, 0.5]);
        assert!((delta_to_hyperplane(&x, &h).unwrap() - (2.0 - 3f64.sqrt()).sqrt()).abs() < 1e-15);
        assert!((delta_from_cosine(cosine_for_delta(0.1)) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn proximal_examples() {
        let d = Matrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let pd = proximal_data(&d, DEFAULT_GAP_TOL).unwrap().unwrap();
        assert_eq!(pd.lambda1, 3.0);
        assert_eq!(pd.attracting.rep, vec![1.0, 0.0]);
        assert_eq!(pd.repelling.normal, vec![1.0, 0.0]);
        assert!((pd.margin - 2f64.sqrt()).abs() < 1e-15);
        let rot = Matrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        assert!(proximal_data(&rot, DEFAULT_GAP_TOL).unwrap().is_none());
        let jordan = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(proximal_data(&jordan, DEFAULT_GAP_TOL).unwrap().is_none());
    }

    #[test]
    fn eigendata_is_invariant() {
        let g = Matrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 0.2, 1.0, 0.3, 0.1, -0.4, 0.5]);
        let pd = proximal_data(&g, DEFAULT_GAP_TOL).unwrap().unwrap();
        assert!(proj_distance(&pd.attracting.image(&g).unwrap(), &pd.attracting).unwrap() < 1e-9);
        let n = ProjPoint::new(pd.repelling.normal.clone()).unwrap();
        assert!(proj_distance(&n.image(&g.transpose()).unwrap(), &n).unwrap() < 1e-9);
    }
}
