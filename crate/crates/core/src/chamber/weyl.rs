use std::collections::HashMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::rational::{q, serde_q, Q};

/// A signed permutation of the coordinates of `Q^d`: `e_j ↦ sign_j · e_{target_j}`.
///
/// Every Weyl group in the family catalog (types A, B, D in standard
/// coordinates) acts by signed permutations, so this is the storage format for
/// Weyl elements; [`SignedPermutation::matrix`] gives the rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedPermutation {
    targets: Vec<u8>,
    signs: Vec<i8>,
}

impl SignedPermutation {
    pub fn identity(d: usize) -> Self {
        SignedPermutation { targets: (0..d as u8).collect(), signs: vec![1; d] }
    }

    pub fn new(targets: Vec<u8>, signs: Vec<i8>) -> Self {
        assert_eq!(targets.len(), signs.len());
        let mut seen = vec![false; targets.len()];
        for &t in &targets {
            assert!(!std::mem::replace(&mut seen[t as usize], true), "targets must be a permutation");
        }
        assert!(signs.iter().all(|s| *s == 1 || *s == -1));
        SignedPermutation { targets, signs }
    }

    /// Transposition of coordinates `i` and `j`.
    pub fn swap(d: usize, i: usize, j: usize) -> Self {
        let mut p = Self::identity(d);
        p.targets.swap(i, j);
        p
    }

    pub fn negate(d: usize, i: usize) -> Self {
        let mut p = Self::identity(d);
        p.signs[i] = -1;
        p
    }

    /// `(x_i, x_j) ↦ (-x_j, -x_i)`: reflection in `e_i + e_j`.
    pub fn swap_negate(d: usize, i: usize, j: usize) -> Self {
        let mut p = Self::swap(d, i, j);
        p.signs[i] = -1;
        p.signs[j] = -1;
        p
    }

    pub fn dim(&self) -> usize {
        self.targets.len()
    }

    pub fn targets(&self) -> &[u8] {
        &self.targets
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let d = self.dim();
        let mut targets = vec![0u8; d];
        let mut signs = vec![1i8; d];
        for j in 0..d {
            let mid = other.targets[j] as usize;
            targets[j] = self.targets[mid];
            signs[j] = other.signs[j] * self.signs[mid];
        }
        SignedPermutation { targets, signs }
    }

    pub fn inverse(&self) -> Self {
        let d = self.dim();
        let mut targets = vec![0u8; d];
        let mut signs = vec![1i8; d];
        for j in 0..d {
            let t = self.targets[j] as usize;
            targets[t] = j as u8;
            signs[t] = self.signs[j];
        }
        SignedPermutation { targets, signs }
    }

    /// `-self`, again a signed permutation.
    pub fn negated(&self) -> Self {
        SignedPermutation { targets: self.targets.clone(), signs: self.signs.iter().map(|s| -s).collect() }
    }

    pub fn is_involution(&self) -> bool {
        self.compose(self).is_identity()
    }

    pub fn is_identity(&self) -> bool {
        self.targets.iter().enumerate().all(|(j, &t)| t as usize == j) && self.signs.iter().all(|&s| s == 1)
    }

    pub fn apply<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Clone + Zero + std::ops::Neg<Output = T>,
    {
        let mut y = vec![T::zero(); x.len()];
        for (j, xj) in x.iter().enumerate() {
            let v = xj.clone();
            y[self.targets[j] as usize] = if self.signs[j] < 0 { -v } else { v };
        }
        y
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x)
    }

    pub fn matrix(&self) -> Vec<Vec<Q>> {
        let d = self.dim();
        let mut m = vec![vec![Q::zero(); d]; d];
        for j in 0..d {
            m[self.targets[j] as usize][j] = q(self.signs[j] as i64);
        }
        m
    }

    fn key(&self) -> u64 {
        self.targets
            .iter()
            .zip(&self.signs)
            .fold(0u64, |acc, (&t, &s)| (acc << 5) | ((t as u64) << 1) | u64::from(s < 0))
    }
}

/// An element of a Weyl group together with one shortest expression in the
/// simple reflections (0-based generator indices, leftmost factor first).
///
/// In JSON the word is written with 1-based indices `s_1, …, s_r`, next to the
/// rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    pub matrix: SignedPermutation,
    pub word: Vec<usize>,
}

impl WeylElement {
    pub fn rational_matrix(&self) -> Vec<Vec<Q>> {
        self.matrix.matrix()
    }
}

impl Serialize for WeylElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Mat(Vec<Vec<Q>>);
        impl Serialize for Mat {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                serde_q::serialize_mat(&self.0, s)
            }
        }
        let mut st = s.serialize_struct("WeylElement", 3)?;
        st.serialize_field("word", &self.word.iter().map(|k| k + 1).collect::<Vec<_>>())?;
        st.serialize_field("signed_permutation", &self.matrix)?;
        st.serialize_field("matrix", &Mat(self.rational_matrix()))?;
        st.end()
    }
}

/// A fully enumerated Weyl group, in breadth-first order from the identity.
///
/// Elements are stored as signed permutations with a parent pointer, which
/// keeps `W(B_7)` (645120 elements) at a few tens of megabytes.
#[derive(Clone, Debug)]
pub struct WeylGroup {
    elements: Vec<SignedPermutation>,
    parents: Vec<Option<(u32, u8)>>,
}

impl WeylGroup {
    /// Breadth-first closure of `generators` under left multiplication.
    pub fn generate(generators: &[SignedPermutation], d: usize) -> WeylGroup {
        let id = SignedPermutation::identity(d);
        let mut index: HashMap<u64, u32> = HashMap::new();
        index.insert(id.key(), 0);
        let mut elements = vec![id];
        let mut parents = vec![None];
        let mut head = 0;
        while head < elements.len() {
            let current = elements[head].clone();
            for (k, s) in generators.iter().enumerate() {
                let next = s.compose(&current);
                let key = next.key();
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(key) {
                    e.insert(elements.len() as u32);
                    elements.push(next);
                    parents.push(Some((head as u32, k as u8)));
                }
            }
            head += 1;
        }
        WeylGroup { elements, parents }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn matrices(&self) -> &[SignedPermutation] {
        &self.elements
    }

    pub fn word(&self, i: usize) -> Vec<usize> {
        let mut word = Vec::new();
        let mut cur = i;
        while let Some((parent, k)) = self.parents[cur] {
            word.push(k as usize);
            cur = parent as usize;
        }
        word
    }

    pub fn element(&self, i: usize) -> WeylElement {
        WeylElement { matrix: self.elements[i].clone(), word: self.word(i) }
    }

    pub fn iter(&self) -> impl Iterator<Item = WeylElement> + '_ {
        (0..self.len()).map(|i| self.element(i))
    }

    /// Lowest enumeration index satisfying `pred`, searched in parallel.
    pub fn position_first<F>(&self, pred: F) -> Option<usize>
    where
        F: Fn(&SignedPermutation) -> bool + Sync + Send,
    {
        self.elements.par_iter().position_first(pred)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_matches_matrix_product() {
        let a = SignedPermutation::new(vec![1, 2, 0], vec![1, -1, 1]);
        let b = SignedPermutation::new(vec![2, 0, 1], vec![-1, 1, 1]);
        let x = vec![q(1), q(2), q(3)];
        assert_eq!(a.compose(&b).apply(&x), a.apply(&b.apply(&x)));
        assert!(a.compose(&a.inverse()).is_identity());
    }

    #[test]
    fn symmetric_group_orders() {
        for n in 2..=5usize {
            let gens: Vec<_> = (0..n - 1).map(|i| SignedPermutation::swap(n, i, i + 1)).collect();
            let w = WeylGroup::generate(&gens, n);
            assert_eq!(w.len(), (1..=n).product::<usize>());
        }
    }

    #[test]
    fn words_reproduce_elements() {
        let gens: Vec<_> = (0..3).map(|i| SignedPermutation::swap(4, i, i + 1)).collect();
        let w = WeylGroup::generate(&gens, 4);
        for i in 0..w.len() {
            let e = w.element(i);
            let rebuilt = e.word.iter().fold(SignedPermutation::identity(4), |acc, &k| acc.compose(&gens[k]));
            assert_eq!(rebuilt, e.matrix);
        }
        // breadth-first order gives non-decreasing word lengths
        assert!((1..w.len()).all(|i| w.word(i).len() >= w.word(i - 1).len()));
    }
}
