use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mu_margin, MarginFn, Tower};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default cap on the number of words a single enumeration may visit.
pub const DEFAULT_WORD_BUDGET: u64 = 2_000_000;

/// Slack used when comparing margins against `ln R`.
const CENSUS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Reduced words in the generators and their inverses.
    Group,
    /// All words in the generators alone.
    Semigroup,
}

/// Letters of a word ball: generators `0..t`, then (group mode) their
/// inverses `t..2t`.
#[derive(Clone, Debug)]
pub struct WordAlphabet {
    letters: Vec<Tower>,
    t: usize,
    mode: Mode,
}

impl WordAlphabet {
    pub fn new(generators: &[Matrix], mode: Mode) -> Result<WordAlphabet> {
        let gens = generators.iter().map(Tower::from_matrix).collect::<Result<Vec<_>>>()?;
        let invs = match mode {
            Mode::Group => Some(generators.iter().map(Tower::from_inverse_of).collect::<Result<Vec<_>>>()?),
            Mode::Semigroup => None,
        };
        WordAlphabet::from_towers(gens, invs, mode)
    }

    /// `inverses` is required in group mode and ignored in semigroup mode.
    pub fn from_towers(generators: Vec<Tower>, inverses: Option<Vec<Tower>>, mode: Mode) -> Result<WordAlphabet> {
        let t = generators.len();
        if t == 0 {
            return Err(Error::BadParameters("at least one generator is required".into()));
        }
        let n = generators[0].dim();
        if let Some(g) = generators.iter().find(|g| g.dim() != n) {
            return Err(Error::DimensionMismatch { left: n, right: g.dim() });
        }
        let mut letters = generators;
        if mode == Mode::Group {
            let inv = inverses.ok_or_else(|| Error::BadParameters("group mode needs inverse letters".into()))?;
            if inv.len() != t {
                return Err(Error::DimensionMismatch { left: t, right: inv.len() });
            }
            letters.extend(inv);
        }
        Ok(WordAlphabet { letters, t, mode })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.letters[0].dim()
    }

    pub fn letter(&self, a: usize) -> &Tower {
        &self.letters[a]
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse_of(&self, a: usize) -> Option<usize> {
        match self.mode {
            Mode::Group => Some(if a < self.t { a + self.t } else { a - self.t }),
            Mode::Semigroup => None,
        }
    }

    fn may_follow(&self, prev: Option<usize>, next: usize) -> bool {
        match (prev, self.inverse_of(next)) {
            (Some(p), Some(inv)) => p != inv,
            _ => true,
        }
    }
}

/// Number of non-identity words of length `1..=max_len`.
pub fn word_count(t: usize, max_len: usize, mode: Mode) -> u64 {
    let (first, branch) = match mode {
        Mode::Group => (2 * t as u64, 2 * t as u64 - 1),
        Mode::Semigroup => (t as u64, t as u64),
    };
    let mut total = 0u64;
    let mut level = first;
    for _ in 0..max_len {
        total = total.saturating_add(level);
        level = level.saturating_mul(branch);
    }
    total
}

/// `a, b, …` for generators and `A, B, …` for inverses; `id` for the empty word.
pub fn format_word(word: &[usize], t: usize) -> String {
    if word.is_empty() {
        return "id".into();
    }
    if t <= 26 {
        word.iter().map(|&a| if a < t { (b'a' + a as u8) as char } else { (b'A' + (a - t) as u8) as char }).collect()
    } else {
        let parts: Vec<String> =
            word.iter().map(|&a| if a < t { format!("g{}", a + 1) } else { format!("G{}", a - t + 1) }).collect();
        parts.join(".")
    }
}

/// Evaluates `f` on every word of length `0..=max_len` (reduced words in
/// group mode), in shortlex order. The tower passed to `f` is the product of
/// the letters from left to right.
pub fn enumerate_words<T, F>(alphabet: &WordAlphabet, max_len: usize, budget: u64, f: F) -> Result<Vec<(Vec<usize>, T)>>
where
    T: Send,
    F: Fn(&[usize], &Tower) -> T + Sync,
{
    let needed = word_count(alphabet.t(), max_len, alphabet.mode());
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let id = Tower::identity(alphabet.dim());
    let mut out = vec![(Vec::new(), f(&[], &id))];
    let mut level: Vec<(Vec<usize>, Tower)> = vec![(Vec::new(), id)];
    for _ in 0..max_len {
        level = level
            .par_iter()
            .flat_map_iter(|(w, tower)| {
                let prev = w.last().copied();
                (0..alphabet.len()).filter(move |&a| alphabet.may_follow(prev, a)).map(move |a| {
                    let mut word = w.clone();
                    word.push(a);
                    (word, tower.mul(alphabet.letter(a)))
                })
            })
            .collect();
        let values: Vec<(Vec<usize>, T)> = level.par_iter().map(|(w, tw)| (w.clone(), f(w, tw))).collect();
        out.extend(values);
    }
    Ok(out)
}

/// Per-length minima of the margin over the word ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginProfile {
    pub mode: Mode,
    pub max_len: usize,
    /// `min_margin[l − 1]` is the minimum over words of length `l`.
    pub min_margin: Vec<f64>,
    pub argmin: Vec<String>,
    pub word_counts: Vec<u64>,
    pub global_min: f64,
    pub global_argmin: String,
}

/// Words paired with their margins.
type WordMargins = Vec<(Vec<usize>, Result<f64>)>;

fn margins(
    generators: &[Matrix],
    margin: &MarginFn,
    max_len: usize,
    mode: Mode,
    budget: u64,
) -> Result<(WordAlphabet, WordMargins)> {
    let alphabet = WordAlphabet::new(generators, mode)?;
    let values = alphabet_margins(&alphabet, margin, max_len, budget)?;
    Ok((alphabet, values))
}

fn alphabet_margins(alphabet: &WordAlphabet, margin: &MarginFn, max_len: usize, budget: u64) -> Result<WordMargins> {
    enumerate_words(alphabet, max_len, budget, |_, tw| mu_margin(&tw.mu(), margin))
}

pub fn margin_profile(
    generators: &[Matrix],
    margin: &MarginFn,
    max_len: usize,
    mode: Mode,
    budget: u64,
) -> Result<MarginProfile> {
    let (alphabet, values) = margins(generators, margin, max_len, mode, budget)?;
    let mut min_margin = vec![f64::INFINITY; max_len];
    let mut argmin = vec![String::new(); max_len];
    let mut word_counts = vec![0u64; max_len];
    let (mut global_min, mut global_argmin) = (f64::INFINITY, String::new());
    for (w, v) in values {
        let v = v?;
        if w.is_empty() {
            continue;
        }
        let l = w.len() - 1;
        word_counts[l] += 1;
        if v < min_margin[l] {
            min_margin[l] = v;
            argmin[l] = format_word(&w, alphabet.t());
        }
        if v < global_min {
            global_min = v;
            global_argmin = format_word(&w, alphabet.t());
        }
    }
    Ok(MarginProfile { mode, max_len, min_margin, argmin, word_counts, global_min, global_argmin })
}

/// Words whose margin is at most `ln R`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Census {
    pub radius: f64,
    pub mode: Mode,
    /// `per_length[l]` counts words of length exactly `l`, identity included at `l = 0`.
    pub per_length: Vec<u64>,
    /// `cumulative[l]` counts words of length at most `l`.
    pub cumulative: Vec<u64>,
    pub words: Vec<String>,
}

pub fn census(
    generators: &[Matrix],
    margin: &MarginFn,
    radius: f64,
    max_len: usize,
    mode: Mode,
    budget: u64,
) -> Result<Census> {
    census_of(&WordAlphabet::new(generators, mode)?, margin, radius, max_len, budget)
}

/// [`census`] over an existing alphabet, e.g. the powered letters of a witness.
pub fn census_of(
    alphabet: &WordAlphabet,
    margin: &MarginFn,
    radius: f64,
    max_len: usize,
    budget: u64,
) -> Result<Census> {
    if !(radius >= 1.0) {
        return Err(Error::BadParameters(format!("census radius must be at least 1, got {radius}")));
    }
    let mode = alphabet.mode();
    let values = alphabet_margins(alphabet, margin, max_len, budget)?;
    let threshold = radius.ln() + CENSUS_TOLERANCE;
    let mut per_length = vec![0u64; max_len + 1];
    let mut words = Vec::new();
    for (w, v) in values {
        if v? <= threshold {
            per_length[w.len()] += 1;
            words.push(format_word(&w, alphabet.t()));
        }
    }
    let cumulative = per_length
        .iter()
        .scan(0u64, |acc, c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    Ok(Census { radius, mode, per_length, cumulative, words })
}
