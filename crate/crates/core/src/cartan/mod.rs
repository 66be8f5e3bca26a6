//! Cartan and Lyapunov projections of `SL(n, R)`, distance functions to
//! `μ(H)`, and the word-ball and growth probes built on them.

mod margin;
mod probe;
mod tower;
mod words;

pub use margin::{mu_margin, MarginFn};
pub use probe::{b_plus_distance, growth_probe, GrowthReport, MAX_GROWTH_POWER};
pub use tower::Tower;
pub use words::{
    census, census_of, enumerate_words, format_word, margin_profile, word_count, Census, MarginProfile, Mode,
    WordAlphabet, DEFAULT_WORD_BUDGET,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_singular_values, Matrix};

/// A point of `R^n` in logarithmic coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogVector {
    pub coords: Vec<f64>,
    /// Whether the coordinates are known to be non-increasing.
    pub sorted: bool,
    /// `ln |det g| / n`, subtracted from every coordinate so they sum to zero.
    pub normalization: f64,
}

impl LogVector {
    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.coords)
    }
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

/// Opposition involution of `SL(n)` in log coordinates: reverse and negate.
pub fn iota_sl(x: &[f64]) -> Vec<f64> {
    x.iter().rev().map(|v| -v).collect()
}

/// Singular values `σ_1 ≥ … ≥ σ_n > 0`.
pub fn singular_values(g: &Matrix) -> Result<Vec<f64>> {
    if g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch { left: g.nrows(), right: g.ncols() });
    }
    let s = jacobi_singular_values(g);
    let (first, last) = (s[0], s[s.len() - 1]);
    if !first.is_finite() || last <= 0.0 || last <= first * 1e-300 {
        return Err(Error::SingularInput);
    }
    Ok(s)
}

/// `μ(g) = (ln σ_1, …, ln σ_n)` of `|det g|^{−1/n} g`.
pub fn cartan_projection(g: &Matrix) -> Result<LogVector> {
    let s = singular_values(g)?;
    let logs: Vec<f64> = s.iter().map(|x| x.ln()).collect();
    let normalization = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(LogVector { coords: logs.iter().map(|x| x - normalization).collect(), sorted: true, normalization })
}

/// `λ(g)`: logs of the eigenvalue moduli of `|det g|^{−1/n} g`, non-increasing.
pub fn lyapunov_projection(g: &Matrix) -> Result<LogVector> {
    if g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch { left: g.nrows(), right: g.ncols() });
    }
    let eig = g.complex_eigenvalues();
    let mut logs: Vec<f64> = eig.iter().map(|z| z.norm().ln()).collect();
    if logs.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularInput);
    }
    logs.sort_by(|a, b| b.total_cmp(a));
    let normalization = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(LogVector { coords: logs.iter().map(|x| x - normalization).collect(), sorted: true, normalization })
}
