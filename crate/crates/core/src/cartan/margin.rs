use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lower bound for the sup-norm distance from a log vector to `log μ(H)`,
/// one variant per special-linear family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginFn {
    /// `H = SL(m) × I_{n−m}`: `μ(H)` has `n − m` zero coordinates, contiguous
    /// once sorted.
    SlmTimesIdentity { n: usize, m: usize },
    /// `H = SL(p) × SL(n−p)`: some `p` coordinates sum to zero.
    SlpTimesSlnp { n: usize, p: usize },
    /// `H = Sp(m)`: `x_i = −x_{2m+1−i}`.
    Symplectic { m: usize },
    /// `H = SO(p, q)` with `d = min(p, q)`: `x_i = −x_{n+1−i}` for `i ≤ d`, the
    /// middle coordinates vanish.
    Orthogonal { n: usize, d: usize },
}

impl MarginFn {
    pub fn dim(&self) -> usize {
        match *self {
            MarginFn::SlmTimesIdentity { n, .. }
            | MarginFn::SlpTimesSlnp { n, .. }
            | MarginFn::Orthogonal { n, .. } => n,
            MarginFn::Symplectic { m } => 2 * m,
        }
    }
}

fn paired(x: &[f64], d: usize) -> f64 {
    let n = x.len();
    (0..d).map(|i| (x[i] + x[n - 1 - i]).abs() / 2.0).fold(0.0, f64::max)
}

/// Evaluates `margin` at `x`.
pub fn mu_margin(x: &[f64], margin: &MarginFn) -> Result<f64> {
    let n = margin.dim();
    if x.len() != n {
        return Err(Error::KindMismatch(format!("{margin:?} expects {n} coordinates, got {}", x.len())));
    }
    let value = match *margin {
        MarginFn::SlmTimesIdentity { n, m } => {
            let w = n - m;
            (0..=n - w).map(|i| x[i..i + w].iter().fold(0.0f64, |a, v| a.max(v.abs()))).fold(f64::INFINITY, f64::min)
        }
        MarginFn::SlpTimesSlnp { p, .. } => (0..n)
            .combinations(p)
            .map(|s| s.iter().map(|&j| x[j]).sum::<f64>().abs() / p as f64)
            .fold(f64::INFINITY, f64::min),
        MarginFn::Symplectic { m } => paired(x, m),
        MarginFn::Orthogonal { n, d } => {
            let middle = x[d..n - d].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            paired(x, d).max(middle)
        }
    };
    Ok(value)
}
