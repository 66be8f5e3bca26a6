use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{decide_with_context, ChamberContext, ChamberData, Decision, Outcome, RootSystemType};
use crate::cartan::MarginFn;
use crate::error::{Error, Result};
use crate::rational::{q, SubspaceQ, Q};

/// The catalog of homogeneous spaces `G/H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Family {
    /// `SL(n, R)/(SL(p, R) × SL(n−p, R))`.
    #[serde(rename = "sl_n_over_sl_p_x_sl_np")]
    SlpTimesSlnp { n: usize, p: usize },
    /// `SL(n, R)/SL(m, R)` with `SL(m)` in the top-left block.
    #[serde(rename = "sl_n_over_sl_m_x_i")]
    SlmTimesIdentity { n: usize, m: usize },
    /// `SL(2m, R)/Sp(m, R)`.
    #[serde(rename = "sl_2m_over_sp_m")]
    Symplectic { m: usize },
    /// `SL(p+q, R)/SO(p, q)`.
    #[serde(rename = "sl_n_over_so_pq")]
    Orthogonal { p: usize, q: usize },
    /// `SO(p+1, q)/SO(p, q)`.
    #[serde(rename = "so_p1q_over_so_pq")]
    OrthogonalStep { p: usize, q: usize },
}

pub const FAMILY_TAGS: [&str; 5] =
    ["sl_n_over_sl_p_x_sl_np", "sl_n_over_sl_m_x_i", "sl_2m_over_sp_m", "sl_n_over_so_pq", "so_p1q_over_so_pq"];

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::SlpTimesSlnp { .. } => FAMILY_TAGS[0],
            Family::SlmTimesIdentity { .. } => FAMILY_TAGS[1],
            Family::Symplectic { .. } => FAMILY_TAGS[2],
            Family::Orthogonal { .. } => FAMILY_TAGS[3],
            Family::OrthogonalStep { .. } => FAMILY_TAGS[4],
        }
    }

    pub fn params(&self) -> BTreeMap<&'static str, usize> {
        match *self {
            Family::SlpTimesSlnp { n, p } => [("n", n), ("p", p)].into(),
            Family::SlmTimesIdentity { n, m } => [("n", n), ("m", m)].into(),
            Family::Symplectic { m } => [("m", m)].into(),
            Family::Orthogonal { p, q } => [("p", p), ("q", q)].into(),
            Family::OrthogonalStep { p, q } => [("p", p), ("q", q)].into(),
        }
    }

    /// Parses a family tag and a parameter list such as `n=4,m=3`.
    ///
    /// `sl_n_over_so_pq` accepts either `p,q` or `n,p`.
    pub fn parse(tag: &str, params: &str) -> Result<Family> {
        let mut kv = BTreeMap::new();
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::BadParameters(format!("expected key=value, got {item:?}")))?;
            let v: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::BadParameters(format!("parameter {k} is not a non-negative integer")))?;
            kv.insert(k.trim().to_string(), v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::BadParameters(format!("missing parameter {k}")));
        let family = match tag {
            "sl_n_over_sl_p_x_sl_np" => Family::SlpTimesSlnp { n: get("n")?, p: get("p")? },
            "sl_n_over_sl_m_x_i" => Family::SlmTimesIdentity { n: get("n")?, m: get("m")? },
            "sl_2m_over_sp_m" => Family::Symplectic { m: get("m")? },
            "sl_n_over_so_pq" => match (kv.get("q"), kv.get("n")) {
                (Some(&q), _) => Family::Orthogonal { p: get("p")?, q },
                (None, Some(&n)) => {
                    let p = get("p")?;
                    if p > n {
                        return Err(Error::BadParameters(format!("p = {p} exceeds n = {n}")));
                    }
                    Family::Orthogonal { p, q: n - p }
                }
                (None, None) => return Err(Error::BadParameters("missing parameter q (or n)".into())),
            },
            "so_p1q_over_so_pq" => Family::OrthogonalStep { p: get("p")?, q: get("q")? },
            other => return Err(Error::UnsupportedFamily(other.to_string())),
        };
        Ok(family)
    }

    /// Parses `tag:params`, e.g. `sl_n_over_sl_m_x_i:n=4,m=3`.
    pub fn parse_target(target: &str) -> Result<Family> {
        let (tag, params) = target.split_once(':').unwrap_or((target, ""));
        Family::parse(tag.trim(), params)
    }

    /// `n` when `G = SL(n, R)`.
    pub fn sl_dimension(&self) -> Option<usize> {
        match *self {
            Family::SlpTimesSlnp { n, .. } | Family::SlmTimesIdentity { n, .. } => Some(n),
            Family::Symplectic { m } => Some(2 * m),
            Family::Orthogonal { p, q } => Some(p + q),
            Family::OrthogonalStep { .. } => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}:{}", self.tag(), params.join(","))
    }
}

/// An encoded pair `(G, H)`: the chamber of `G`, `V_H = span(log A_H)` and the
/// distance function to `μ(H)` when `G` is a special linear group.
#[derive(Clone, Debug, Serialize)]
pub struct PairSpec {
    pub family: Family,
    pub chamber: ChamberData,
    pub v_h: SubspaceQ,
    pub rank_h: usize,
    pub gh_noncompact: bool,
    pub margin: Option<MarginFn>,
}

fn bad(msg: String) -> Error {
    Error::BadParameters(msg)
}

fn coord_eq(d: usize, terms: &[(usize, i64)]) -> Vec<Q> {
    let mut v = vec![Q::zero(); d];
    for &(i, c) in terms {
        v[i] += q(c);
    }
    v
}

/// Builds the chamber, `V_H` and metadata of a family, refusing ranks above `rank_cap`.
pub fn build_pair_spec(family: Family, rank_cap: usize) -> Result<PairSpec> {
    let (root_type, equations, margin, gh_noncompact): (RootSystemType, Vec<Vec<Q>>, Option<MarginFn>, bool) =
        match family {
            Family::SlpTimesSlnp { n, p } => {
                if n < 2 || p == 0 || p >= n {
                    return Err(bad(format!("need 1 <= p < n, got n={n}, p={p}")));
                }
                let first: Vec<_> = (0..p).map(|i| (i, 1)).collect();
                let second: Vec<_> = (p..n).map(|i| (i, 1)).collect();
                let eqs = vec![coord_eq(n, &first), coord_eq(n, &second)];
                (RootSystemType::A(n - 1), eqs, Some(MarginFn::SlpTimesSlnp { n, p }), true)
            }
            Family::SlmTimesIdentity { n, m } => {
                if n < 2 || m == 0 || m >= n {
                    return Err(bad(format!("need 1 <= m < n, got n={n}, m={m}")));
                }
                let mut eqs: Vec<_> = (m..n).map(|j| coord_eq(n, &[(j, 1)])).collect();
                eqs.push(vec![q(1); n]);
                (RootSystemType::A(n - 1), eqs, Some(MarginFn::SlmTimesIdentity { n, m }), true)
            }
            Family::Symplectic { m } => {
                if m == 0 {
                    return Err(bad("need m >= 1".into()));
                }
                let n = 2 * m;
                let eqs = (0..m).map(|i| coord_eq(n, &[(i, 1), (n - 1 - i, 1)])).collect();
                // Sp(1) = SL(2): the quotient is a point
                (RootSystemType::A(n - 1), eqs, Some(MarginFn::Symplectic { m }), m > 1)
            }
            Family::Orthogonal { p, q: qq } => {
                let n = p + qq;
                if n < 2 {
                    return Err(bad(format!("need p + q >= 2, got p={p}, q={qq}")));
                }
                let d = p.min(qq);
                let mut eqs: Vec<_> = (0..d).map(|i| coord_eq(n, &[(i, 1), (n - 1 - i, 1)])).collect();
                eqs.extend((d..n - d).map(|j| coord_eq(n, &[(j, 1)])));
                (RootSystemType::A(n - 1), eqs, Some(MarginFn::Orthogonal { n, d }), true)
            }
            Family::OrthogonalStep { p, q: qq } => {
                if qq == 0 {
                    return Err(bad("need q >= 1".into()));
                }
                if p + 1 == qq && qq < 2 {
                    return Err(bad("SO(1,1) is not semisimple".into()));
                }
                let r = (p + 1).min(qq);
                let root_type = if p + 1 == qq { RootSystemType::D(r) } else { RootSystemType::B(r) };
                let k = p.min(qq);
                let eqs = (k..r).map(|j| coord_eq(r, &[(j, 1)])).collect();
                (root_type, eqs, None, true)
            }
        };
    if root_type.rank() > rank_cap {
        return Err(Error::RankCapExceeded { rank: root_type.rank(), cap: rank_cap });
    }
    let chamber = ChamberData::new(root_type)?;
    let mut equations = equations;
    if let Some(t) = &chamber.trace_constraint {
        equations.push(t.clone());
    }
    let v_h = SubspaceQ::from_equations(chamber.ambient_dim(), &equations);
    debug_assert!(v_h.is_subspace_of(&chamber.span()));
    Ok(PairSpec { family, rank_h: v_h.dim(), chamber, v_h, gh_noncompact, margin })
}

/// The sign stated for a family in the classical example lists, when one is
/// stated: `Some(true)` for "no non-virtually-abelian proper action".
pub fn expected_negative(family: Family) -> Option<bool> {
    match family {
        Family::SlpTimesSlnp { n, p } => Some((p * (n - p)) % 2 == 0),
        Family::SlmTimesIdentity { n, m } => (n == 2 * m).then_some(true),
        Family::Symplectic { .. } => Some(true),
        Family::Orthogonal { p, q } => {
            let n = p + q;
            let d = p.min(q);
            if d == n / 2 {
                Some(true)
            } else if d >= 1 {
                Some(false)
            } else {
                None
            }
        }
        Family::OrthogonalStep { p, q } => {
            if p >= q || (p + 1 == q && p % 2 == 0) {
                Some(true)
            } else {
                Some(false)
            }
        }
    }
}

/// One decided catalog entry.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogRow {
    pub family: Family,
    pub chamber: String,
    pub decision: Decision,
    pub expected_negative: Option<bool>,
    pub agrees: Option<bool>,
}

/// Every family instance with `G ⊆ SL(n)` for `n ≤ max_n` and rank at most
/// `rank_cap`, in a fixed order.
pub fn catalog_families(max_n: usize, rank_cap: usize) -> Vec<Family> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        if n - 1 > rank_cap {
            continue;
        }
        out.extend((1..n).map(|p| Family::SlpTimesSlnp { n, p }));
        out.extend((1..n).map(|m| Family::SlmTimesIdentity { n, m }));
        if n % 2 == 0 {
            out.push(Family::Symplectic { m: n / 2 });
        }
        out.extend((1..=n / 2).map(|p| Family::Orthogonal { p, q: n - p }));
    }
    for n in 2..=max_n {
        for q in 1..n {
            let p = n - 1 - q;
            if (p + 1 == q && q < 2) || (p + 1).min(q) > rank_cap {
                continue;
            }
            out.push(Family::OrthogonalStep { p, q });
        }
    }
    out
}

/// Decides every family of [`catalog_families`], sharing Weyl groups between
/// families with the same chamber.
pub fn catalog(max_n: usize, rank_cap: usize) -> Result<Vec<CatalogRow>> {
    let mut contexts: HashMap<RootSystemType, ChamberContext> = HashMap::new();
    let mut rows = Vec::new();
    for family in catalog_families(max_n, rank_cap) {
        let spec = build_pair_spec(family, rank_cap)?;
        let ctx = match contexts.entry(spec.chamber.root_type) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(ChamberContext::new(&spec.chamber, rank_cap)?),
        };
        let decision = decide_with_context(&spec, ctx);
        let expected = expected_negative(family);
        let agrees = expected.map(|neg| neg == decision.outcome.is_negative());
        rows.push(CatalogRow { family, chamber: spec.chamber.label(), decision, expected_negative: expected, agrees });
    }
    Ok(rows)
}

impl CatalogRow {
    pub fn outcome(&self) -> Outcome {
        self.decision.outcome
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chamber::{decide_existence, DEFAULT_RANK_CAP};
    use crate::rational::q as qq;

    fn v(xs: &[i64]) -> Vec<Q> {
        xs.iter().map(|&x| qq(x)).collect()
    }

    #[test]
    fn vh_examples() {
        let s = build_pair_spec(Family::SlmTimesIdentity { n: 3, m: 2 }, DEFAULT_RANK_CAP).unwrap();
        assert_eq!(s.v_h, SubspaceQ::span(3, &[v(&[1, -1, 0])]));
        let s = build_pair_spec(Family::Symplectic { m: 2 }, DEFAULT_RANK_CAP).unwrap();
        assert_eq!(s.v_h, SubspaceQ::span(4, &[v(&[1, 0, 0, -1]), v(&[0, 1, -1, 0])]));
        let s = build_pair_spec(Family::OrthogonalStep { p: 2, q: 4 }, DEFAULT_RANK_CAP).unwrap();
        assert_eq!(s.chamber.root_type, RootSystemType::B(3));
        assert_eq!(s.v_h, SubspaceQ::span(3, &[v(&[1, 0, 0]), v(&[0, 1, 0])]));
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(build_pair_spec(Family::SlpTimesSlnp { n: 4, p: 4 }, 7), Err(Error::BadParameters(_))));
        assert!(matches!(
            build_pair_spec(Family::SlpTimesSlnp { n: 10, p: 4 }, 7),
            Err(Error::RankCapExceeded { rank: 9, cap: 7 })
        ));
        assert!(matches!(Family::parse("sl_n_over_e6", "n=3"), Err(Error::UnsupportedFamily(_))));
        assert!(matches!(Family::parse("sl_n_over_sl_m_x_i", "n=3"), Err(Error::BadParameters(_))));
    }

    #[test]
    fn parse_round_trip() {
        let f = Family::parse_target("sl_n_over_sl_m_x_i:n=4,m=3").unwrap();
        assert_eq!(f, Family::SlmTimesIdentity { n: 4, m: 3 });
        assert_eq!(Family::parse_target(&f.to_string()).unwrap(), f);
        assert_eq!(Family::parse("sl_n_over_so_pq", "n=5,p=2").unwrap(), Family::Orthogonal { p: 2, q: 3 });
    }

    #[test]
    fn decision_examples() {
        let d = |f| decide_existence(&build_pair_spec(f, DEFAULT_RANK_CAP).unwrap()).unwrap();
        let r = d(Family::SlpTimesSlnp { n: 5, p: 2 });
        assert_eq!(r.outcome, Outcome::OnlyVirtuallyAbelian);
        assert!(r.no_compact_quotient);
        assert_eq!(d(Family::SlpTimesSlnp { n: 4, p: 1 }).outcome, Outcome::ExistsFreeZariskiDense);
        assert_eq!(d(Family::OrthogonalStep { p: 2, q: 3 }).outcome, Outcome::OnlyVirtuallyAbelian);
        assert_eq!(d(Family::OrthogonalStep { p: 2, q: 4 }).outcome, Outcome::ExistsFreeZariskiDense);
        assert_eq!(d(Family::SlmTimesIdentity { n: 4, m: 3 }).outcome, Outcome::ExistsFreeZariskiDense);
        let r = d(Family::SlmTimesIdentity { n: 3, m: 2 });
        assert_eq!(r.outcome, Outcome::OnlyVirtuallyAbelian);
        assert!(r.witness_w.is_some());
        let r = d(Family::Orthogonal { p: 2, q: 2 });
        assert!(r.witness_w.unwrap().matrix.is_identity());
    }
}
