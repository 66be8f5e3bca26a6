//! Exact rational linear algebra: reduced row-echelon forms, kernels and
//! canonical subspaces of `Q^d`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Row-reduces `rows` in place to reduced row-echelon form and returns the
/// pivot columns. Zero rows are dropped.
pub fn rref(rows: &mut Vec<Vec<Q>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank(rows: &[Vec<Q>], ncols: usize) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, ncols).len()
}

/// Basis of `{x : e·x = 0 for every row e}`.
pub fn kernel(equations: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let mut m = equations.to_vec();
    let pivots = rref(&mut m, ncols);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Q::zero(); ncols];
        v[free] = Q::one();
        for (row, &pc) in m.iter().zip(&pivots) {
            v[pc] = -row[free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Scales a rational vector to the primitive integer vector on the same ray.
pub fn primitive_integer(v: &[Q]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// A linear subspace of `Q^ambient`, stored by its reduced row-echelon basis.
///
/// The echelon form is canonical, so two equal subspaces compare equal.
/// A primitive integer basis of the annihilator is cached for fast
/// membership tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceQ {
    ambient: usize,
    basis: Vec<Vec<Q>>,
    annihilator: Vec<Vec<BigInt>>,
}

impl SubspaceQ {
    pub fn span(ambient: usize, vectors: &[Vec<Q>]) -> SubspaceQ {
        let mut basis: Vec<Vec<Q>> = vectors.to_vec();
        assert!(basis.iter().all(|v| v.len() == ambient), "vector length must equal ambient dimension");
        rref(&mut basis, ambient);
        let annihilator = kernel(&basis, ambient).iter().map(|v| primitive_integer(v)).collect();
        SubspaceQ { ambient, basis, annihilator }
    }

    /// `{x : e·x = 0 for all equations e}`.
    pub fn from_equations(ambient: usize, equations: &[Vec<Q>]) -> SubspaceQ {
        SubspaceQ::span(ambient, &kernel(equations, ambient))
    }

    pub fn zero(ambient: usize) -> SubspaceQ {
        SubspaceQ::span(ambient, &[])
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Q>] {
        &self.basis
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        // denominators are irrelevant to a homogeneous test
        let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
        self.contains_integer(&ints)
    }

    pub fn contains_integer(&self, v: &[BigInt]) -> bool {
        self.annihilator.iter().all(|c| c.iter().zip(v).fold(BigInt::zero(), |acc, (a, b)| acc + a * b).is_zero())
    }

    pub fn is_subspace_of(&self, other: &SubspaceQ) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }

    pub fn sum(&self, other: &SubspaceQ) -> SubspaceQ {
        let mut all = self.basis.clone();
        all.extend(other.basis.iter().cloned());
        SubspaceQ::span(self.ambient, &all)
    }

    pub fn intersection_dim(&self, other: &SubspaceQ) -> usize {
        self.dim() + other.dim() - self.sum(other).dim()
    }

    /// Image under a linear map given as a square rational matrix.
    pub fn image(&self, matrix: &[Vec<Q>]) -> SubspaceQ {
        let imgs: Vec<Vec<Q>> = self.basis.iter().map(|v| matrix.iter().map(|row| dot(row, v)).collect()).collect();
        SubspaceQ::span(self.ambient, &imgs)
    }
}

/// Serializes rationals as strings: `"p/q"`, or `"p"` for integers.
pub mod serde_q {
    use super::*;
    use std::str::FromStr;

    pub fn to_string(x: &Q) -> String {
        x.to_string()
    }

    pub fn parse(s: &str) -> Result<Q, String> {
        Q::from_str(s.trim()).map_err(|e| format!("bad rational {s:?}: {e}"))
    }

    pub fn serialize_vec<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(to_string).collect::<Vec<_>>().serialize(s)
    }

    pub fn serialize_mat<S: Serializer>(m: &[Vec<Q>], s: S) -> Result<S::Ok, S::Error> {
        m.iter().map(|r| r.iter().map(to_string).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter().map(|x| parse(x)).collect::<Result<Vec<_>, _>>().map_err(serde::de::Error::custom)
    }

    pub fn deserialize_mat<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Q>>, D::Error> {
        let raw: Vec<Vec<String>> = Vec::deserialize(d)?;
        raw.iter()
            .map(|r| r.iter().map(|x| parse(x)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for SubspaceQ {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            ambient: usize,
            dim: usize,
            #[serde(serialize_with = "serde_q::serialize_mat")]
            basis: &'a [Vec<Q>],
        }
        Wire { ambient: self.ambient, dim: self.dim(), basis: &self.basis }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubspaceQ {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            ambient: usize,
            #[serde(deserialize_with = "serde_q::deserialize_mat")]
            basis: Vec<Vec<Q>>,
        }
        let w = Wire::deserialize(d)?;
        if w.basis.iter().any(|r| r.len() != w.ambient) {
            return Err(serde::de::Error::custom("basis row length differs from ambient dimension"));
        }
        Ok(SubspaceQ::span(w.ambient, &w.basis))
    }
}

pub fn is_positive(x: &Q) -> bool {
    x.is_positive()
}
