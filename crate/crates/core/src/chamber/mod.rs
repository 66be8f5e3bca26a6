//! Exact root-system combinatorics for the encoded families: Weyl groups,
//! the longest element, the opposition involution, the fixed cone `B⁺` and the
//! existence decision.
//!
//! Everything here is rational arithmetic; no floating point is involved in
//! a decision.

mod family;
mod weyl;

pub use family::{
    build_pair_spec, catalog, catalog_families, expected_negative, CatalogRow, Family, PairSpec, FAMILY_TAGS,
};
pub use weyl::{SignedPermutation, WeylElement, WeylGroup};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{dot, primitive_integer, q, q_frac, serde_q, SubspaceQ, Q};

/// Largest rank enumerated by default (`|W(B_7)| = 645120`).
pub const DEFAULT_RANK_CAP: usize = 7;

/// The reduced root systems that occur for the encoded families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RootSystemType {
    /// `A_r`, realized on `{x ∈ R^{r+1} : Σx = 0}`.
    A(usize),
    B(usize),
    /// `D_m` for `m ≥ 2`.
    D(usize),
}

impl RootSystemType {
    pub fn rank(self) -> usize {
        match self {
            RootSystemType::A(r) | RootSystemType::B(r) | RootSystemType::D(r) => r,
        }
    }

    pub fn ambient_dim(self) -> usize {
        match self {
            RootSystemType::A(r) => r + 1,
            RootSystemType::B(m) | RootSystemType::D(m) => m,
        }
    }

    pub fn label(self) -> String {
        match self {
            RootSystemType::A(r) => format!("A{r}"),
            RootSystemType::B(m) => format!("B{m}"),
            RootSystemType::D(m) => format!("D{m}"),
        }
    }

    /// Order of the Weyl group by the classical formula.
    pub fn weyl_order(self) -> u64 {
        let fact = |k: usize| (1..=k as u64).product::<u64>();
        match self {
            RootSystemType::A(r) => fact(r + 1),
            RootSystemType::B(m) => (1u64 << m) * fact(m),
            RootSystemType::D(m) => (1u64 << (m - 1)) * fact(m),
        }
    }
}

impl Serialize for RootSystemType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// A restricted root system in standard coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChamberData {
    pub root_type: RootSystemType,
    pub simple_roots: Vec<Vec<Q>>,
    pub positive_roots: Vec<Vec<Q>>,
    pub weyl_generators: Vec<SignedPermutation>,
    pub trace_constraint: Option<Vec<Q>>,
}

fn unit(d: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); d];
    v[i] = q(1);
    v
}

fn combo(d: usize, i: usize, si: i64, j: usize, sj: i64) -> Vec<Q> {
    let mut v = vec![Q::zero(); d];
    v[i] = q(si);
    v[j] = q(sj);
    v
}

impl ChamberData {
    pub fn new(root_type: RootSystemType) -> Result<ChamberData> {
        let d = root_type.ambient_dim();
        let mut simple = Vec::new();
        let mut positive = Vec::new();
        let mut gens = Vec::new();
        match root_type {
            RootSystemType::A(r) => {
                if r == 0 {
                    return Err(Error::BadParameters("A_0 has no roots".into()));
                }
                for i in 0..d - 1 {
                    simple.push(combo(d, i, 1, i + 1, -1));
                    gens.push(SignedPermutation::swap(d, i, i + 1));
                }
                for i in 0..d {
                    for j in i + 1..d {
                        positive.push(combo(d, i, 1, j, -1));
                    }
                }
            }
            RootSystemType::B(m) => {
                if m == 0 {
                    return Err(Error::BadParameters("B_0 has no roots".into()));
                }
                for i in 0..m - 1 {
                    simple.push(combo(d, i, 1, i + 1, -1));
                    gens.push(SignedPermutation::swap(d, i, i + 1));
                }
                simple.push(unit(d, m - 1));
                gens.push(SignedPermutation::negate(d, m - 1));
                for i in 0..m {
                    for j in i + 1..m {
                        positive.push(combo(d, i, 1, j, -1));
                        positive.push(combo(d, i, 1, j, 1));
                    }
                    positive.push(unit(d, i));
                }
            }
            RootSystemType::D(m) => {
                if m < 2 {
                    return Err(Error::BadParameters(format!("D_{m} is not a root system of rank {m}")));
                }
                for i in 0..m - 1 {
                    simple.push(combo(d, i, 1, i + 1, -1));
                    gens.push(SignedPermutation::swap(d, i, i + 1));
                }
                simple.push(combo(d, m - 2, 1, m - 1, 1));
                gens.push(SignedPermutation::swap_negate(d, m - 2, m - 1));
                for i in 0..m {
                    for j in i + 1..m {
                        positive.push(combo(d, i, 1, j, -1));
                        positive.push(combo(d, i, 1, j, 1));
                    }
                }
            }
        }
        let trace_constraint = matches!(root_type, RootSystemType::A(_)).then(|| vec![q(1); d]);
        Ok(ChamberData {
            root_type,
            simple_roots: simple,
            positive_roots: positive,
            weyl_generators: gens,
            trace_constraint,
        })
    }

    /// Chamber of `SL(n, R)`: type `A_{n−1}`.
    pub fn sl(n: usize) -> Result<ChamberData> {
        if n < 2 {
            return Err(Error::BadParameters(format!("SL({n}) has rank 0")));
        }
        ChamberData::new(RootSystemType::A(n - 1))
    }

    pub fn rank(&self) -> usize {
        self.root_type.rank()
    }

    pub fn ambient_dim(&self) -> usize {
        self.root_type.ambient_dim()
    }

    pub fn label(&self) -> String {
        self.root_type.label()
    }

    /// The linear span of the chamber (`Σx = 0` for type A, everything otherwise).
    pub fn span(&self) -> SubspaceQ {
        match &self.trace_constraint {
            Some(t) => SubspaceQ::from_equations(self.ambient_dim(), std::slice::from_ref(t)),
            None => SubspaceQ::from_equations(self.ambient_dim(), &[]),
        }
    }

    /// A fixed rational point of the open chamber: `(n−1, n−3, …, −(n−1))` for
    /// type A and `(m, m−1, …, 1)` for types B and D.
    pub fn interior_point(&self) -> Vec<Q> {
        let d = self.ambient_dim();
        match self.root_type {
            RootSystemType::A(_) => (0..d).map(|i| q(d as i64 - 1 - 2 * i as i64)).collect(),
            _ => (0..d).map(|i| q((d - i) as i64)).collect(),
        }
    }

    fn on_span(&self, x: &[Q]) -> bool {
        self.trace_constraint.as_ref().is_none_or(|t| dot(t, x).is_zero())
    }

    /// Closed chamber membership.
    pub fn contains(&self, x: &[Q]) -> bool {
        self.on_span(x) && self.simple_roots.iter().all(|a| !dot(a, x).is_negative())
    }

    /// Open chamber membership.
    pub fn contains_open(&self, x: &[Q]) -> bool {
        self.on_span(x) && self.simple_roots.iter().all(|a| dot(a, x).is_positive())
    }

    /// Open chamber membership for a floating-point vector, with every simple
    /// root value required to exceed `tol` (the trace constraint is not checked).
    pub fn contains_open_f64(&self, x: &[f64], tol: f64) -> bool {
        self.simple_roots.iter().all(|a| {
            let v: f64 = a.iter().zip(x).map(|(c, xi)| crate::rational::q_to_f64(c) * xi).sum();
            v > tol
        })
    }
}

impl Serialize for ChamberData {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        struct Mat<'a>(&'a [Vec<Q>]);
        impl Serialize for Mat<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                serde_q::serialize_mat(self.0, s)
            }
        }
        struct Mats(Vec<Vec<Vec<Q>>>);
        impl Serialize for Mats {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_seq(self.0.iter().map(|m| Mat(m)))
            }
        }
        let mut st = s.serialize_struct("ChamberData", 7)?;
        st.serialize_field("type_label", &self.root_type)?;
        st.serialize_field("ambient_dim", &self.ambient_dim())?;
        st.serialize_field("rank", &self.rank())?;
        st.serialize_field("simple_roots", &Mat(&self.simple_roots))?;
        st.serialize_field("positive_roots", &Mat(&self.positive_roots))?;
        st.serialize_field("weyl_generators", &Mats(self.weyl_generators.iter().map(|g| g.matrix()).collect()))?;
        st.serialize_field(
            "trace_constraint",
            &self.trace_constraint.as_ref().map(|t| t.iter().map(serde_q::to_string).collect::<Vec<_>>()),
        )?;
        st.end()
    }
}

/// Enumerates the Weyl group with the default rank cap.
pub fn enumerate_weyl(chamber: &ChamberData) -> Result<WeylGroup> {
    enumerate_weyl_capped(chamber, DEFAULT_RANK_CAP)
}

pub fn enumerate_weyl_capped(chamber: &ChamberData, rank_cap: usize) -> Result<WeylGroup> {
    if chamber.rank() > rank_cap {
        return Err(Error::RankCapExceeded { rank: chamber.rank(), cap: rank_cap });
    }
    Ok(WeylGroup::generate(&chamber.weyl_generators, chamber.ambient_dim()))
}

/// The unique Weyl element sending the chamber to its negative, found by scan.
pub fn longest_element(chamber: &ChamberData, weyl: &WeylGroup) -> Result<WeylElement> {
    let c = chamber.interior_point();
    let minus_c: Vec<Q> = c.iter().map(|x| -x).collect();
    let hits: Vec<usize> = (0..weyl.len())
        .into_par_iter()
        .filter(|&i| {
            let image = weyl.matrices()[i].apply(&minus_c);
            chamber.contains_open(&image)
        })
        .collect();
    match hits.as_slice() {
        [i] => Ok(weyl.element(*i)),
        _ => Err(Error::NotFound),
    }
}

/// `ι = −w₀` in logarithmic coordinates.
pub fn opposition_involution(w0: &WeylElement) -> SignedPermutation {
    w0.matrix.negated()
}

/// `E^ι`, the fixed space of `ι` inside the span of the chamber; it is the
/// linear span of `B⁺`.
pub fn b_plus_span(iota: &SignedPermutation, chamber: &ChamberData) -> SubspaceQ {
    let d = chamber.ambient_dim();
    let m = iota.matrix();
    let mut equations: Vec<Vec<Q>> =
        (0..d).map(|i| (0..d).map(|j| if i == j { &m[i][j] - q(1) } else { m[i][j].clone() }).collect()).collect();
    if let Some(t) = &chamber.trace_constraint {
        equations.push(t.clone());
    }
    let c = chamber.interior_point();
    let (b, _) = b_plus_decomposition(&c, iota);
    assert!(chamber.contains_open(&b), "ι does not preserve the chamber");
    SubspaceQ::from_equations(d, &equations)
}

/// First Weyl element (in enumeration order) with `E^ι ⊆ w·V_H`.
pub fn contains_b_plus(e_iota: &SubspaceQ, v_h: &SubspaceQ, weyl: &WeylGroup) -> Option<WeylElement> {
    if e_iota.dim() > v_h.dim() {
        return None;
    }
    let basis: Vec<_> = e_iota.basis().iter().map(|v| primitive_integer(v)).collect();
    // E^ι ⊆ w·V_H  ⟺  w⁻¹·e ∈ V_H for every basis vector e
    weyl.position_first(|w| {
        let inv = w.inverse();
        basis.iter().all(|e| v_h.contains_integer(&inv.apply(e)))
    })
    .map(|i| weyl.element(i))
}

/// True iff `v1 ∩ w·v2 = {0}` for every Weyl element `w`.
pub fn kobayashi_proper(v1: &SubspaceQ, v2: &SubspaceQ, weyl: &WeylGroup) -> bool {
    if v1.dim() == 0 || v2.dim() == 0 {
        return true;
    }
    if v1.dim() + v2.dim() > v1.ambient() {
        return false;
    }
    weyl.matrices().par_iter().all(|w| {
        let image: Vec<Vec<Q>> = v2.basis().iter().map(|b| w.apply(b)).collect();
        v1.intersection_dim(&SubspaceQ::span(v1.ambient(), &image)) == 0
    })
}

/// Splits `x` into its `ι`-even part `b = (x + ιx)/2` and `ι`-odd part
/// `m = (x − ιx)/2`.
pub fn b_plus_decomposition(x: &[Q], iota: &SignedPermutation) -> (Vec<Q>, Vec<Q>) {
    let ix = iota.apply(x);
    let half = q_frac(1, 2);
    let b = x.iter().zip(&ix).map(|(a, c)| (a + c) * &half).collect();
    let m = x.iter().zip(&ix).map(|(a, c)| (a - c) * &half).collect();
    (b, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    /// Equal real ranks: only finite groups act properly.
    NoInfiniteDiscrete,
    /// Some Weyl conjugate of `log A_H` contains `B⁺`.
    OnlyVirtuallyAbelian,
    ExistsFreeZariskiDense,
}

impl Outcome {
    pub fn is_negative(self) -> bool {
        self != Outcome::ExistsFreeZariskiDense
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Decision {
    pub outcome: Outcome,
    pub witness_w: Option<WeylElement>,
    pub no_compact_quotient: bool,
    /// `(dim E^ι, dim V_H)`.
    pub dims: (usize, usize),
    pub rank_g: usize,
    pub rank_h: usize,
}

/// Everything derived from a chamber that the decision needs.
#[derive(Clone, Debug)]
pub struct ChamberContext {
    pub weyl: WeylGroup,
    pub w0: WeylElement,
    pub iota: SignedPermutation,
    pub e_iota: SubspaceQ,
}

impl ChamberContext {
    pub fn new(chamber: &ChamberData, rank_cap: usize) -> Result<ChamberContext> {
        let weyl = enumerate_weyl_capped(chamber, rank_cap)?;
        let w0 = longest_element(chamber, &weyl)?;
        let iota = opposition_involution(&w0);
        let e_iota = b_plus_span(&iota, chamber);
        Ok(ChamberContext { weyl, w0, iota, e_iota })
    }
}

pub fn decide_existence(spec: &PairSpec) -> Result<Decision> {
    decide_existence_capped(spec, DEFAULT_RANK_CAP)
}

pub fn decide_existence_capped(spec: &PairSpec, rank_cap: usize) -> Result<Decision> {
    let ctx = ChamberContext::new(&spec.chamber, rank_cap)?;
    Ok(decide_with_context(spec, &ctx))
}

pub fn decide_with_context(spec: &PairSpec, ctx: &ChamberContext) -> Decision {
    let rank_g = spec.chamber.rank();
    let dims = (ctx.e_iota.dim(), spec.v_h.dim());
    if spec.rank_h == rank_g {
        return Decision {
            outcome: Outcome::NoInfiniteDiscrete,
            witness_w: None,
            no_compact_quotient: spec.gh_noncompact,
            dims,
            rank_g,
            rank_h: spec.rank_h,
        };
    }
    match contains_b_plus(&ctx.e_iota, &spec.v_h, &ctx.weyl) {
        Some(w) => Decision {
            outcome: Outcome::OnlyVirtuallyAbelian,
            witness_w: Some(w),
            no_compact_quotient: spec.gh_noncompact,
            dims,
            rank_g,
            rank_h: spec.rank_h,
        },
        None => Decision {
            outcome: Outcome::ExistsFreeZariskiDense,
            witness_w: None,
            no_compact_quotient: false,
            dims,
            rank_g,
            rank_h: spec.rank_h,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> Vec<Q> {
        xs.iter().map(|&x| q(x)).collect()
    }

    fn ctx(t: RootSystemType) -> (ChamberData, ChamberContext) {
        let c = ChamberData::new(t).unwrap();
        let x = ChamberContext::new(&c, DEFAULT_RANK_CAP).unwrap();
        (c, x)
    }

    #[test]
    fn small_orders() {
        for (t, n) in [(RootSystemType::A(2), 6), (RootSystemType::B(3), 48), (RootSystemType::D(3), 24)] {
            let c = ChamberData::new(t).unwrap();
            assert_eq!(enumerate_weyl(&c).unwrap().len(), n);
        }
    }

    #[test]
    fn longest_elements() {
        let (_, a2) = ctx(RootSystemType::A(2));
        assert_eq!(a2.w0.matrix.apply(&v(&[1, 2, 3])), v(&[3, 2, 1]));
        let (_, b3) = ctx(RootSystemType::B(3));
        assert_eq!(b3.w0.matrix, SignedPermutation::identity(3).negated());
        let (_, d3) = ctx(RootSystemType::D(3));
        assert_eq!(d3.w0.matrix.apply(&v(&[1, 2, 3])), v(&[-1, -2, 3]));
        assert_eq!(d3.iota.apply(&v(&[1, 2, 3])), v(&[1, 2, -3]));
    }

    #[test]
    fn iota_type_a3() {
        let (_, a3) = ctx(RootSystemType::A(3));
        assert_eq!(a3.iota.apply(&v(&[1, 2, 3, 4])), v(&[-4, -3, -2, -1]));
        assert_eq!(a3.e_iota, SubspaceQ::span(4, &[v(&[1, 0, 0, -1]), v(&[0, 1, -1, 0])]));
    }

    #[test]
    fn b_plus_of_a2_is_a_line() {
        let (_, a2) = ctx(RootSystemType::A(2));
        assert_eq!(a2.e_iota, SubspaceQ::span(3, &[v(&[1, 0, -1])]));
    }

    #[test]
    fn decomposition_example() {
        let (_, a2) = ctx(RootSystemType::A(2));
        let (b, m) = b_plus_decomposition(&v(&[2, 1, -3]), &a2.iota);
        assert_eq!(b, vec![q_frac(5, 2), q(0), q_frac(-5, 2)]);
        assert_eq!(m, vec![q_frac(-1, 2), q(1), q_frac(-1, 2)]);
    }

    #[test]
    fn kobayashi_examples() {
        let (c, a3) = ctx(RootSystemType::A(3));
        let v1 = SubspaceQ::span(4, &[v(&[1, 1, -1, -1])]);
        let v2 = SubspaceQ::from_equations(4, &[v(&[0, 0, 0, 1]), v(&[1, 1, 1, 1])]);
        assert!(kobayashi_proper(&v1, &v2, &a3.weyl));
        assert!(!kobayashi_proper(&v2, &v2, &a3.weyl));
        assert!(kobayashi_proper(&SubspaceQ::zero(4), &v2, &a3.weyl));
        assert_eq!(c.rank(), 3);
    }
}
