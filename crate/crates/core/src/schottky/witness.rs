use serde::{Deserialize, Serialize};

use super::Cone;
use crate::cartan::{Mode, Tower, WordAlphabet};
use crate::error::{Error, Result};
use crate::linalg::{from_square_rows, Matrix};
use crate::proximal::EpsCertificate;

/// Version of the witness file layout.
pub const WITNESS_SCHEMA_VERSION: &str = "1";

/// Transversality margin `δ(x⁺_{Λⁱh}, X^<_{Λⁱh′})` of an admissible pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMargin {
    /// Exterior power `i`.
    pub rep: usize,
    pub first: String,
    pub second: String,
    pub margin: f64,
}

/// ε-proximality certificate of `Λⁱ` of one letter `γ_j^{±m}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepCertificate {
    pub rep: usize,
    pub letter: String,
    pub certificate: EpsCertificate,
}

/// Per-length summary of a word-ball verification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LengthSummary {
    pub length: usize,
    pub words: u64,
    /// `max ‖μ(w) − Σ n_j λ(g_j)‖_∞`.
    pub max_residual: f64,
    /// `max residual / ((l + 1) · M_box)` over the words of this length.
    pub max_bound_usage: f64,
    /// `max ‖μ(w)/‖μ(w)‖_∞ − b‖_∞`.
    pub max_cone_offset: f64,
    pub min_margin: Option<f64>,
    pub min_margin_word: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn pass(detail: impl Into<String>) -> CheckOutcome {
        CheckOutcome { passed: true, detail: detail.into() }
    }

    pub fn fail(detail: impl Into<String>) -> CheckOutcome {
        CheckOutcome { passed: false, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WordBallReport {
    pub max_len: usize,
    pub mode: Mode,
    /// Non-identity words visited.
    pub word_count: u64,
    /// Non-identity words whose first and last letters are not mutually inverse.
    pub very_reduced_words: u64,
    pub per_length: Vec<LengthSummary>,
    pub freeness: CheckOutcome,
    /// `min ‖w₁⁻¹w₂ − I‖_max` over distinct words of the ball.
    pub min_separation: f64,
    pub cone_membership: CheckOutcome,
    pub additivity: CheckOutcome,
    pub properness: Option<CheckOutcome>,
    /// Least-squares slope of the per-length minimal margins over `2 ≤ l ≤ L`.
    pub margin_slope: Option<f64>,
    /// `max ‖μ(w⁻¹) − ι(μ(w))‖_∞` over the ball (group mode).
    pub inverse_symmetry: Option<f64>,
}

impl WordBallReport {
    pub fn passed(&self) -> bool {
        self.freeness.passed
            && self.cone_membership.passed
            && self.additivity.passed
            && self.properness.as_ref().is_none_or(|p| p.passed)
    }
}

/// Constants fitted on the word ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    /// Sup-norm box radius `M_box` with residual `≤ (l + 1) M_box`, fitted on
    /// words of at most two syllables.
    pub m_box: f64,
}

/// A certified Schottky family `γ_1^m, …, γ_t^m` in `SL(n, R)`, with the data
/// needed to reproduce and re-verify it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchottkyWitness {
    pub schema_version: String,
    /// The homogeneous space the cone was built against, as `tag:params`.
    pub target: Option<String>,
    pub n: usize,
    pub mode: Mode,
    pub t: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub m: u64,
    /// `γ_j = h_j a_j h_j⁻¹` before powering, row-major.
    pub generators: Vec<Vec<Vec<f64>>>,
    pub conjugators: Vec<Vec<Vec<f64>>>,
    /// `λ(γ_j) = log a_j`.
    pub lambdas: Vec<Vec<f64>>,
    pub cone: Cone,
    pub margin_floor: f64,
    pub samples: usize,
    /// Admissible-pair margins of the powered letters.
    pub transversality: Vec<PairMargin>,
    pub certificates: Vec<RepCertificate>,
    pub word_ball: Option<WordBallReport>,
    pub empirical_constants: Option<EmpiricalConstants>,
}

impl SchottkyWitness {
    pub fn generator_matrices(&self) -> Result<Vec<Matrix>> {
        let gens = self.generators.iter().map(|g| from_square_rows(g)).collect::<Result<Vec<_>>>()?;
        if let Some(g) = gens.iter().find(|g| g.nrows() != self.n) {
            return Err(Error::DimensionMismatch { left: self.n, right: g.nrows() });
        }
        if gens.len() != self.t {
            return Err(Error::DimensionMismatch { left: self.t, right: gens.len() });
        }
        Ok(gens)
    }

    /// Towers of the certified letters `γ_j^m` and, in group mode, `γ_j^{−m}`.
    pub fn alphabet(&self, mode: Mode) -> Result<WordAlphabet> {
        let gens = self.generator_matrices()?;
        let powered = gens.iter().map(|g| Ok(Tower::from_matrix(g)?.pow(self.m))).collect::<Result<Vec<_>>>()?;
        let inverses = match mode {
            Mode::Group => {
                Some(gens.iter().map(|g| Ok(Tower::from_inverse_of(g)?.pow(self.m))).collect::<Result<Vec<_>>>()?)
            }
            Mode::Semigroup => None,
        };
        WordAlphabet::from_towers(powered, inverses, mode)
    }

    pub fn min_pair_margin(&self) -> f64 {
        self.transversality.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<SchottkyWitness> {
        let w: SchottkyWitness = serde_json::from_str(s)?;
        if w.schema_version != WITNESS_SCHEMA_VERSION {
            return Err(Error::BadParameters(format!(
                "unsupported witness schema version {:?} (expected {WITNESS_SCHEMA_VERSION:?})",
                w.schema_version
            )));
        }
        Ok(w)
    }
}
