//! Construction of ε-Schottky subgroups of `SL(n, R)` whose Cartan
//! projections stay in a cone avoiding every Weyl image of `log A_H`, and
//! verification of freeness, cone confinement, additivity and properness
//! margins on word balls.

mod witness;

pub use witness::{
    CheckOutcome, EmpiricalConstants, LengthSummary, PairMargin, RepCertificate, SchottkyWitness, WordBallReport,
    WITNESS_SCHEMA_VERSION,
};

use std::collections::HashMap;

use nalgebra::DVector;
use num_traits::Signed;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cartan::{
    enumerate_words, format_word, growth_probe, iota_sl, mu_margin, sup_distance, sup_norm, GrowthReport, MarginFn,
    Mode, Tower, WordAlphabet, DEFAULT_WORD_BUDGET,
};
use crate::chamber::{
    b_plus_decomposition, contains_b_plus, decide_existence_capped, longest_element, opposition_involution,
    ChamberData, Decision, Outcome, PairSpec, RootSystemType, SignedPermutation, WeylGroup, DEFAULT_RANK_CAP,
};
use crate::error::{Error, Result};
use crate::linalg::{haar_orthogonal, inverse, max_abs, to_rows, Matrix};
use crate::proximal::{
    certify_with_data, delta_to_hyperplane, proximal_data, Verdict, DEFAULT_GAP_TOL, DEFAULT_SAMPLES,
};
use crate::rational::{q_to_f64, serde_q, SubspaceQ, Q};
use crate::seed::substream;

/// Largest ε used, whatever the transversality margins.
pub const EPSILON_CAP: f64 = 0.2;

/// Minimal separation `‖w₁⁻¹w₂ − I‖_max` of distinct words; pairs whose
/// separation does not exceed the rounding level of `w₁⁻¹w₂` also fail.
pub const FREENESS_SEPARATION: f64 = 1e-6;

/// Largest sup norm of `log a_j`; beyond it the condition number of `γ_j`
/// exceeds `e^24` and its small singular values are lost in rounding.
pub const MAX_SCALE: f64 = 12.0;

/// Candidate directions tried before giving up on a cone apex.
const DIRECTION_BUDGET: usize = 20_000;

/// A convex open cone `{x ≠ 0 : ‖x/‖x‖_∞ − b‖_∞ < θ}` inside the open
/// `SL(n)` chamber.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cone {
    /// Apex direction `b`, with `‖b‖_∞ = 1`.
    pub apex: Vec<f64>,
    #[serde(serialize_with = "serde_q::serialize_vec", deserialize_with = "serde_q::deserialize_vec")]
    pub apex_exact: Vec<Q>,
    /// `θ`.
    pub angular_radius: f64,
    pub iota_invariant: bool,
}

impl Cone {
    /// `‖x/‖x‖_∞ − b‖_∞`, or infinity at the origin.
    pub fn offset(&self, x: &[f64]) -> f64 {
        let s = sup_norm(x);
        if s == 0.0 || x.len() != self.apex.len() {
            return f64::INFINITY;
        }
        x.iter().zip(&self.apex).fold(0.0f64, |m, (a, b)| m.max((a / s - b).abs()))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.offset(x) < self.angular_radius && x.windows(2).all(|w| w[0] > w[1])
    }
}

fn orthonormalize(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

fn euclidean_distance_to_span(x: &[f64], basis: &[Vec<f64>]) -> f64 {
    let mut r = x.to_vec();
    for b in basis {
        let c: f64 = r.iter().zip(b).map(|(p, q)| p * q).sum();
        r.iter_mut().zip(b).for_each(|(p, q)| *p -= c * q);
    }
    r.iter().map(|p| p * p).sum::<f64>().sqrt()
}

/// Strictly decreasing integer sequences of length `d` with entries in
/// `[−k, k]` and some entry of absolute value `k`.
fn decreasing_sequences(d: usize, k: i64, out: &mut Vec<Vec<i64>>, limit: usize) {
    fn rec(d: usize, k: i64, upper: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if cur.len() == d {
            if cur.iter().any(|x| x.abs() == k) {
                out.push(cur.clone());
            }
            return;
        }
        let remaining = (d - cur.len()) as i64;
        let mut v = upper;
        while v - (remaining - 1) >= -k {
            cur.push(v);
            rec(d, k, v - 1, cur, out, limit);
            cur.pop();
            v -= 1;
        }
    }
    rec(d, k, k, &mut Vec::new(), out, limit);
}

/// An `ι`-invariant cone around an `ι`-fixed rational direction of the open
/// chamber that lies outside every `w·V_H`.
pub fn build_avoiding_cone(
    e_iota: &SubspaceQ,
    v_h: &SubspaceQ,
    weyl: &WeylGroup,
    chamber: &ChamberData,
) -> Result<Cone> {
    if !matches!(chamber.root_type, RootSystemType::A(_)) {
        return Err(Error::PreconditionFailed("cones are built in the SL(n) chamber".into()));
    }
    if let Some(w) = contains_b_plus(e_iota, v_h, weyl) {
        return Err(Error::PreconditionFailed(format!(
            "E^ι ⊆ w·V_H for the Weyl element with word {:?}",
            w.word.iter().map(|k| k + 1).collect::<Vec<_>>()
        )));
    }
    let iota = opposition_involution(&longest_element(chamber, weyl)?);
    let d = chamber.ambient_dim();
    let inverses: Vec<SignedPermutation> = weyl.matrices().iter().map(|w| w.inverse()).collect();
    let avoids_all = |b: &[Q]| inverses.par_iter().all(|w| !v_h.contains(&w.apply(b)));

    let mut candidates = vec![chamber.interior_point()];
    let mut k = 1i64;
    while candidates.len() < DIRECTION_BUDGET && k as usize <= 4 * d {
        let mut seqs = Vec::new();
        decreasing_sequences(d, k, &mut seqs, DIRECTION_BUDGET - candidates.len());
        candidates.extend(seqs.into_iter().map(|s| s.into_iter().map(crate::rational::q).collect::<Vec<Q>>()));
        k += 1;
    }
    let b = candidates
        .iter()
        .map(|c| b_plus_decomposition(c, &iota).0)
        .find(|b| chamber.contains_open(b) && avoids_all(b))
        .ok_or(Error::NoDirectionFound)?;

    let sup = b.iter().map(|x| x.abs()).max().expect("non-empty direction");
    let apex_exact: Vec<Q> = b.iter().map(|x| x / &sup).collect();
    let apex: Vec<f64> = apex_exact.iter().map(q_to_f64).collect();

    let v_basis: Vec<Vec<f64>> = v_h.basis().iter().map(|v| v.iter().map(q_to_f64).collect()).collect();
    let min_dist = weyl
        .matrices()
        .par_iter()
        .map(|w| {
            let image = orthonormalize(v_basis.iter().map(|v| w.apply_f64(v)).collect());
            euclidean_distance_to_span(&apex, &image)
        })
        .reduce(|| f64::INFINITY, f64::min);
    // ‖·‖_∞ ≥ ‖·‖_2 / √d, so this is at most half the sup-norm distance
    let theta_avoid = 0.5 * min_dist / (d as f64).sqrt();
    let gap = apex.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    let angular_radius = theta_avoid.min(gap / 4.0);
    let iota_invariant = sup_distance(&iota.apply_f64(&apex), &apex) <= 1e-12;
    Ok(Cone { apex, apex_exact, angular_radius, iota_invariant })
}

/// Options for [`construct_generators`] and [`power_search`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructOptions {
    pub t: usize,
    pub mode: Mode,
    pub margin_floor: f64,
    pub retry_budget: usize,
    /// Sup norm of the log of the diagonal parts `a_j`.
    pub scale: f64,
    pub samples: usize,
    pub max_m: u64,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            t: 2,
            mode: Mode::Group,
            margin_floor: 0.05,
            retry_budget: 100,
            scale: 8.0,
            samples: DEFAULT_SAMPLES,
            max_m: 64,
        }
    }
}

/// Generators that passed the transversality test, before powering.
#[derive(Clone, Debug)]
pub struct Candidates {
    pub n: usize,
    pub t: usize,
    pub mode: Mode,
    pub seed: u64,
    pub generators: Vec<Matrix>,
    pub conjugators: Vec<Matrix>,
    pub lambdas: Vec<Vec<f64>>,
    pub cone: Cone,
    pub margin_floor: f64,
    pub pair_margins: Vec<PairMargin>,
    pub min_margin: f64,
    pub attempts: usize,
}

impl Candidates {
    /// Towers of `γ_1, …, γ_t` and, in group mode, `γ_1⁻¹, …, γ_t⁻¹`.
    fn letter_towers(&self) -> Result<Vec<Tower>> {
        let mut letters = self.generators.iter().map(Tower::from_matrix).collect::<Result<Vec<_>>>()?;
        if self.mode == Mode::Group {
            for g in &self.generators {
                letters.push(Tower::from_inverse_of(g)?);
            }
        }
        Ok(letters)
    }

    pub fn from_witness(w: &SchottkyWitness) -> Result<Candidates> {
        let generators = w.generator_matrices()?;
        let conjugators = w.conjugators.iter().map(|c| crate::linalg::from_square_rows(c)).collect::<Result<_>>()?;
        let min_margin = w.min_pair_margin();
        Ok(Candidates {
            n: w.n,
            t: w.t,
            mode: w.mode,
            seed: w.seed,
            generators,
            conjugators,
            lambdas: w.lambdas.clone(),
            cone: w.cone.clone(),
            margin_floor: w.margin_floor,
            pair_margins: w.transversality.clone(),
            min_margin,
            attempts: 0,
        })
    }
}

/// `λ` of each letter: `λ(γ_j)` and `ι(λ(γ_j))` for inverses.
fn letter_lambdas(lambdas: &[Vec<f64>], mode: Mode) -> Vec<Vec<f64>> {
    let mut out = lambdas.to_vec();
    if mode == Mode::Group {
        out.extend(lambdas.iter().map(|l| iota_sl(l)));
    }
    out
}

fn letter_name(a: usize, t: usize) -> String {
    format_word(&[a], t)
}

/// Admissible-pair margins of `Λⁱ` of the given letters, `i = 1..n−1`.
fn pair_margins(letters: &[Tower], t: usize, mode: Mode) -> Result<Vec<PairMargin>> {
    let n = letters[0].dim();
    let inverse_of = |a: usize| if a < t { a + t } else { a - t };
    let mut out = Vec::new();
    for i in 1..n {
        let data = letters
            .iter()
            .map(|l| proximal_data(l.power(i).0, DEFAULT_GAP_TOL)?.ok_or(Error::NotProximal))
            .collect::<Result<Vec<_>>>()?;
        for (a, da) in data.iter().enumerate() {
            for (b, db) in data.iter().enumerate() {
                if mode == Mode::Group && b == inverse_of(a) {
                    continue;
                }
                out.push(PairMargin {
                    rep: i,
                    first: letter_name(a, t),
                    second: letter_name(b, t),
                    margin: delta_to_hyperplane(&da.attracting, &db.repelling)?,
                });
            }
        }
    }
    Ok(out)
}

fn min_margin(pairs: &[PairMargin]) -> f64 {
    pairs.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min)
}

/// Draws `γ_j = h_j a_j h_j⁻¹` with `log a_j` distinct points of the cone and
/// Haar-random orthogonal `h_j`, redrawing the `h_j` until every admissible
/// pair is transverse in every exterior power with margin at least
/// `margin_floor`.
pub fn construct_generators(n: usize, cone: &Cone, opts: &ConstructOptions, seed: u64) -> Result<Candidates> {
    let t = opts.t;
    if t < 2 {
        return Err(Error::BadParameters(format!("need at least two generators, got t = {t}")));
    }
    if cone.apex.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: cone.apex.len() });
    }
    if !(opts.scale > 0.0 && opts.scale <= MAX_SCALE) {
        return Err(Error::BadParameters(format!("scale must lie in (0, {MAX_SCALE}], got {}", opts.scale)));
    }
    let theta = cone.angular_radius;
    let mut lambdas = Vec::with_capacity(t);
    for j in 0..t {
        let mut rng = substream(seed, "directions", j as u64);
        let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = u.iter().sum::<f64>() / n as f64;
        u.iter_mut().for_each(|x| *x -= mean);
        let s = sup_norm(&u).max(f64::MIN_POSITIVE);
        let x: Vec<f64> = cone.apex.iter().zip(&u).map(|(b, ui)| opts.scale * (b + 0.25 * theta * ui / s)).collect();
        if !cone.contains(&x) {
            return Err(Error::PreconditionFailed("generator direction left the cone".into()));
        }
        lambdas.push(x);
    }
    let mut best = f64::NEG_INFINITY;
    for attempt in 0..opts.retry_budget {
        let conjugators: Vec<Matrix> =
            (0..t).map(|j| haar_orthogonal(n, &mut substream(seed, "conjugators", (attempt * t + j) as u64))).collect();
        let generators: Vec<Matrix> = conjugators
            .iter()
            .zip(&lambdas)
            .map(|(h, x)| {
                h * Matrix::from_diagonal(&DVector::from_iterator(n, x.iter().map(|v| v.exp()))) * h.transpose()
            })
            .collect();
        let alphabet = WordAlphabet::new(&generators, opts.mode)?;
        let letters: Vec<Tower> = (0..alphabet.len()).map(|a| alphabet.letter(a).clone()).collect();
        let margins = pair_margins(&letters, t, opts.mode)?;
        let m = min_margin(&margins);
        best = best.max(m);
        if m >= opts.margin_floor {
            return Ok(Candidates {
                n,
                t,
                mode: opts.mode,
                seed,
                generators,
                conjugators,
                lambdas,
                cone: cone.clone(),
                margin_floor: opts.margin_floor,
                pair_margins: margins,
                min_margin: m,
                attempts: attempt + 1,
            });
        }
    }
    Err(Error::RetryBudgetExhausted { attempts: opts.retry_budget, best_margin: best })
}

/// Result of certifying all letters at one power.
#[derive(Clone, Debug)]
pub struct PoweredFamily {
    pub m: u64,
    pub epsilon: f64,
    pub certificates: Vec<RepCertificate>,
    pub pair_margins: Vec<PairMargin>,
}

fn letter_towers(c: &Candidates, m: u64) -> Result<Vec<Tower>> {
    Ok(c.letter_towers()?.iter().map(|l| l.pow(m)).collect())
}

/// Certifies every `Λⁱ(γ_j^{±m})` at `epsilon`; returns the first failure as
/// `(rep, letter, detail)`.
fn certify_at(
    c: &Candidates,
    m: u64,
    epsilon: f64,
    samples: usize,
) -> Result<std::result::Result<PoweredFamily, (usize, String)>> {
    let letters = letter_towers(c, m)?;
    let jobs: Vec<(usize, usize)> = (1..c.n).flat_map(|i| (0..letters.len()).map(move |a| (i, a))).collect();
    let results: Vec<Result<(usize, usize, Option<RepCertificate>)>> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, a))| {
            let (g, _) = letters[a].power(i);
            let cert = proximal_data(g, DEFAULT_GAP_TOL)?.map(|d| RepCertificate {
                rep: i,
                letter: letter_name(a, c.t),
                certificate: certify_with_data(g, &d, epsilon, samples, c.seed, m * 10_000 + k as u64),
            });
            Ok((i, a, cert))
        })
        .collect();
    let mut certificates = Vec::with_capacity(jobs.len());
    for r in results {
        let (i, a, cert) = r?;
        match cert {
            None => return Ok(Err((i, format!("Λ^{i} of letter {} is not proximal", letter_name(a, c.t))))),
            Some(rc) if rc.certificate.verdict != Verdict::Certified => {
                let detail = format!(
                    "Λ^{i} of letter {} is {:?} (margin {:.4}, containment {:.3}, Lipschitz {:.3})",
                    rc.letter,
                    rc.certificate.verdict,
                    rc.certificate.margin,
                    rc.certificate.containment.max_ratio,
                    rc.certificate.lipschitz.max_ratio
                );
                return Ok(Err((i, detail)));
            }
            Some(rc) => certificates.push(rc),
        }
    }
    let pairs = pair_margins(&letters, c.t, c.mode)?;
    if let Some(p) = pairs.iter().find(|p| p.margin < 6.0 * epsilon) {
        let detail = format!("pair ({}, {}) has margin {:.4} < 6ε = {:.4}", p.first, p.second, p.margin, 6.0 * epsilon);
        return Ok(Err((p.rep, detail)));
    }
    Ok(Ok(PoweredFamily { m, epsilon, certificates, pair_margins: pairs }))
}

/// `ε = min(margin / 6.06, 0.2)`; the 1% slack absorbs the drift of the
/// eigendata between `γ_j` and its powers.
pub fn epsilon_for(c: &Candidates) -> f64 {
    (c.min_margin / (6.0 * 1.01)).min(EPSILON_CAP)
}

/// Doubles `m` from 1 until every letter is certified ε-proximal in every
/// exterior power and all admissible pairs keep margin `≥ 6ε`.
pub fn power_search(c: &Candidates, max_m: u64, samples: usize) -> Result<PoweredFamily> {
    power_search_from(c, 1, max_m, samples)
}

pub fn power_search_from(c: &Candidates, start_m: u64, max_m: u64, samples: usize) -> Result<PoweredFamily> {
    let epsilon = epsilon_for(c);
    let mut m = start_m.max(1);
    let mut last = (0usize, String::from("no power tried"));
    while m <= max_m {
        match certify_at(c, m, epsilon, samples)? {
            Ok(family) => return Ok(family),
            Err(f) => last = f,
        }
        m *= 2;
    }
    Err(Error::MaxPowerExceeded { max_m, rep: last.0, detail: last.1 })
}

/// Assembles a witness (without word-ball data).
pub fn assemble_witness(
    c: &Candidates,
    family: &PoweredFamily,
    target: Option<String>,
    samples: usize,
) -> SchottkyWitness {
    SchottkyWitness {
        schema_version: WITNESS_SCHEMA_VERSION.into(),
        target,
        n: c.n,
        mode: c.mode,
        t: c.t,
        seed: c.seed,
        epsilon: family.epsilon,
        m: family.m,
        generators: c.generators.iter().map(to_rows).collect(),
        conjugators: c.conjugators.iter().map(to_rows).collect(),
        lambdas: c.lambdas.clone(),
        cone: c.cone.clone(),
        margin_floor: c.margin_floor,
        samples,
        transversality: family.pair_margins.clone(),
        certificates: family.certificates.clone(),
        word_ball: None,
        empirical_constants: None,
    }
}

/// Re-certifies a witness at power `m`, keeping its ε.
pub fn repower(w: &SchottkyWitness, m: u64) -> Result<SchottkyWitness> {
    let c = Candidates::from_witness(w)?;
    match certify_at(&c, m, w.epsilon, w.samples)? {
        Ok(family) => {
            let mut out = assemble_witness(&c, &family, w.target.clone(), w.samples);
            out.epsilon = w.epsilon;
            Ok(out)
        }
        Err((rep, detail)) => Err(Error::MaxPowerExceeded { max_m: m, rep, detail }),
    }
}

struct WordEval {
    mu: Vec<f64>,
    residual: f64,
    syllables: usize,
    very_reduced: bool,
    margin: Option<f64>,
}

fn syllable_count(word: &[usize]) -> usize {
    if word.is_empty() {
        0
    } else {
        1 + word.windows(2).filter(|p| p[0] != p[1]).count()
    }
}

/// `‖w₁⁻¹w₂ − I‖_max`, with `w₁⁻¹w₂` multiplied out from the letters left
/// after cancelling the common prefix, together with the rounding level
/// `n·u·Π‖letter‖_max` of that product. `letters` holds the powered
/// generators followed by their inverses, each as (normalized matrix, log
/// scale).
fn left_separation(w1: &[usize], w2: &[usize], letters: &[(Matrix, f64)], t: usize) -> (f64, f64) {
    let k = w1.iter().zip(w2).take_while(|(a, b)| a == b).count();
    let inv = |a: usize| if a < t { a + t } else { a - t };
    let n = letters[0].0.nrows();
    let mut acc = Matrix::identity(n, n);
    let mut log_scale = 0.0;
    let mut log_letters = 0.0;
    for a in w1[k..].iter().rev().map(|&a| inv(a)).chain(w2[k..].iter().copied()) {
        acc *= &letters[a].0;
        let s = max_abs(&acc);
        acc /= s;
        log_scale += s.ln() + letters[a].1;
        log_letters += max_abs(&letters[a].0).ln() + letters[a].1;
    }
    if log_scale + max_abs(&acc).ln() > 700.0 || log_letters > 700.0 {
        return (f64::INFINITY, 0.0);
    }
    acc *= log_scale.exp();
    let sep = (acc - Matrix::identity(n, n)).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (sep, n as f64 * f64::EPSILON * log_letters.exp())
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the word-ball checks and returns the report together with the first
/// failure, if any, as an error naming the offending word.
pub fn evaluate_word_ball(
    w: &SchottkyWitness,
    margin: Option<&MarginFn>,
    max_len: usize,
    mode: Mode,
    budget: u64,
) -> Result<(WordBallReport, EmpiricalConstants, Option<Error>)> {
    if mode == Mode::Group && w.mode == Mode::Semigroup {
        return Err(Error::PreconditionFailed("a semigroup witness has no certified inverse letters".into()));
    }
    if let Some(f) = margin {
        if f.dim() != w.n {
            return Err(Error::KindMismatch(format!("margin {f:?} does not act on SL({})", w.n)));
        }
    }
    let gens = w.generator_matrices()?;
    let t = w.t;
    let alphabet = w.alphabet(mode)?;
    let lambdas: Vec<Vec<f64>> =
        letter_lambdas(&w.lambdas, mode).into_iter().map(|l| l.iter().map(|x| x * w.m as f64).collect()).collect();

    let evals = enumerate_words(&alphabet, max_len, budget, |word, tower| {
        let mu = tower.mu();
        let mut predicted = vec![0.0; w.n];
        for &a in word {
            predicted.iter_mut().zip(&lambdas[a]).for_each(|(p, l)| *p += l);
        }
        let very_reduced = word.len() < 2 || alphabet.inverse_of(word[0]) != Some(word[word.len() - 1]);
        WordEval {
            residual: sup_distance(&mu, &predicted),
            margin: margin.map(|f| mu_margin(&mu, f).unwrap_or(f64::NAN)),
            syllables: syllable_count(word),
            very_reduced,
            mu,
        }
    })?;
    let names: Vec<String> = evals.iter().map(|(word, _)| format_word(word, t)).collect();
    let word_count = evals.len() as u64 - 1;
    let very_reduced_words = evals.iter().skip(1).filter(|(_, e)| e.very_reduced).count() as u64;

    // freeness
    let letter_bases: Vec<(Matrix, f64)> = gens
        .iter()
        .map(Tower::from_matrix)
        .chain(gens.iter().map(Tower::from_inverse_of))
        .map(|l| {
            let p = l?.pow(w.m);
            let (b, s) = p.base();
            Ok((b.clone(), s))
        })
        .collect::<Result<_>>()?;
    // a pair clashes when its separation is below the threshold or within
    // the rounding level of the product that produced it
    let per_word: Vec<(f64, Option<(usize, f64)>)> = (0..evals.len())
        .into_par_iter()
        .map(|i| {
            let mut min_sep = f64::INFINITY;
            let mut clash = None;
            for j in (i + 1)..evals.len() {
                let (sep, floor) = left_separation(&evals[i].0, &evals[j].0, &letter_bases, t);
                min_sep = min_sep.min(sep);
                if clash.is_none() && sep < FREENESS_SEPARATION.max(floor) {
                    clash = Some((j, sep));
                }
            }
            (min_sep, clash)
        })
        .collect();
    let min_separation = per_word.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let first_clash = per_word.iter().enumerate().find_map(|(i, p)| p.1.map(|(j, s)| (i, j, s)));
    let mut failure: Option<Error> = None;
    let freeness = match first_clash {
        None => CheckOutcome::pass(format!("{} words pairwise separated by ≥ {min_separation:.3e}", evals.len())),
        Some((i, j, s)) => {
            failure.get_or_insert(Error::FreenessFailure {
                word: names[i].clone(),
                other: names[j].clone(),
                separation: s,
            });
            CheckOutcome::fail(format!("{} and {} are {s:.3e} apart", names[i], names[j]))
        }
    };

    // cone membership
    let escape = evals.iter().skip(1).position(|(_, e)| !w.cone.contains(&e.mu)).map(|k| k + 1);
    let cone_membership = match escape {
        None => CheckOutcome::pass("every non-identity word lies in the cone"),
        Some(k) => {
            failure.get_or_insert(Error::ConeEscape { word: names[k].clone() });
            CheckOutcome::fail(format!(
                "μ({}) has cone offset {:.4} ≥ θ = {:.4}",
                names[k],
                w.cone.offset(&evals[k].1.mu),
                w.cone.angular_radius
            ))
        }
    };

    // additivity
    let effective = |e: &WordEval| e.syllables + usize::from(!e.very_reduced);
    let fit_max = |l: usize| {
        evals.iter().skip(1).filter(|(_, e)| effective(e) == l).map(|(_, e)| e.residual).fold(0.0f64, f64::max)
    };
    let (r1, r2) = (fit_max(1), fit_max(2));
    let m_box = (r1 / 2.0).max(r2 / 3.0).max(r2 - r1).max(1e-9);
    let bound = |e: &WordEval| (effective(e) as f64 + 1.0) * m_box;
    let violation = evals.iter().skip(1).position(|(_, e)| e.residual > bound(e) * (1.0 + 1e-9)).map(|k| k + 1);
    let additivity = match violation {
        None => CheckOutcome::pass(format!("residual ≤ (l + 1)·M_box with M_box = {m_box:.4}")),
        Some(k) => {
            let e = &evals[k].1;
            failure.get_or_insert(Error::AdditivityFailure {
                word: names[k].clone(),
                residual: e.residual,
                bound: bound(e),
            });
            CheckOutcome::fail(format!("{}: residual {:.4} > {:.4}", names[k], e.residual, bound(e)))
        }
    };

    // per-length summaries
    let mut per_length: Vec<LengthSummary> = (1..=max_len)
        .map(|l| LengthSummary {
            length: l,
            words: 0,
            max_residual: 0.0,
            max_bound_usage: 0.0,
            max_cone_offset: 0.0,
            min_margin: margin.map(|_| f64::INFINITY),
            min_margin_word: None,
        })
        .collect();
    for ((word, e), name) in evals.iter().zip(&names).skip(1) {
        let s = &mut per_length[word.len() - 1];
        s.words += 1;
        s.max_residual = s.max_residual.max(e.residual);
        s.max_bound_usage = s.max_bound_usage.max(e.residual / bound(e));
        s.max_cone_offset = s.max_cone_offset.max(w.cone.offset(&e.mu));
        if let (Some(v), Some(cur)) = (e.margin, s.min_margin) {
            if v < cur {
                s.min_margin = Some(v);
                s.min_margin_word = Some(name.clone());
            }
        }
    }

    // properness margins
    let (properness, margin_slope) = if margin.is_some() {
        let mins: Vec<(f64, f64, String)> = per_length
            .iter()
            .map(|s| (s.length as f64, s.min_margin.unwrap_or(f64::NAN), s.min_margin_word.clone().unwrap_or_default()))
            .collect();
        let tail: Vec<(f64, f64)> = mins.iter().filter(|p| p.0 >= 2.0).map(|p| (p.0, p.1)).collect();
        let slope = (tail.len() >= 2).then(|| least_squares_slope(&tail));
        let worst = mins.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned();
        let outcome = match worst {
            Some((_, v, word)) if !(v > 0.0) => {
                let detail = format!("margin {v:.4} is not positive");
                failure.get_or_insert(Error::MarginDegeneration { word: word.clone(), detail: detail.clone() });
                CheckOutcome::fail(format!("{word}: {detail}"))
            }
            _ => match slope {
                Some(s) if !(s > 0.0) => {
                    let word = worst.map(|w| w.2).unwrap_or_default();
                    let detail = format!("per-length minimal margins have slope {s:.4} over 2 ≤ l ≤ {max_len}");
                    failure.get_or_insert(Error::MarginDegeneration { word: word.clone(), detail: detail.clone() });
                    CheckOutcome::fail(detail)
                }
                _ => CheckOutcome::pass(match slope {
                    Some(s) => format!("minimal margins positive, slope {s:.4} over 2 ≤ l ≤ {max_len}"),
                    None => "minimal margins positive".into(),
                }),
            },
        };
        (Some(outcome), slope)
    } else {
        (None, None)
    };

    // μ(w⁻¹) = ι(μ(w))
    let inverse_symmetry = (mode == Mode::Group).then(|| {
        let index: HashMap<&[usize], usize> =
            evals.iter().enumerate().map(|(i, (word, _))| (word.as_slice(), i)).collect();
        evals
            .par_iter()
            .map(|(word, e)| {
                let inv: Vec<usize> = word.iter().rev().map(|&a| alphabet.inverse_of(a).expect("group mode")).collect();
                let j = index[inv.as_slice()];
                sup_distance(&iota_sl(&e.mu), &evals[j].1.mu)
            })
            .reduce(|| 0.0, f64::max)
    });

    let report = WordBallReport {
        max_len,
        mode,
        word_count,
        very_reduced_words,
        per_length,
        freeness,
        min_separation,
        cone_membership,
        additivity,
        properness,
        margin_slope,
        inverse_symmetry,
    };
    Ok((report, EmpiricalConstants { m_box }, failure))
}

/// Verifies a witness on the ball of radius `max_len` and fills in its
/// word-ball section; fails with the first failing check.
pub fn verify_word_ball(
    w: &SchottkyWitness,
    margin: Option<&MarginFn>,
    max_len: usize,
    mode: Option<Mode>,
) -> Result<SchottkyWitness> {
    let mode = mode.unwrap_or(w.mode);
    let (report, constants, failure) = evaluate_word_ball(w, margin, max_len, mode, DEFAULT_WORD_BUDGET)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut out = w.clone();
    out.word_ball = Some(report);
    out.empirical_constants = Some(constants);
    Ok(out)
}

/// Budgets of [`properness_pipeline`].
#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub construct: ConstructOptions,
    pub max_len: usize,
    pub seed: u64,
    pub rank_cap: usize,
    /// Powers used by the growth probe on negative decisions.
    pub growth_p_max: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            construct: ConstructOptions::default(),
            max_len: 6,
            seed: 0,
            rank_cap: DEFAULT_RANK_CAP,
            growth_p_max: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub decision: Decision,
    pub witness: Option<SchottkyWitness>,
    pub growth: Option<GrowthReport>,
}

/// Matrices `(g, f, f⁻¹)` for the growth probe in `SL(n)`: `g` is a conjugated
/// diagonal with non-`ι`-invariant exponents, `f` a random unimodular matrix.
pub fn growth_sample(n: usize, seed: u64) -> Result<(Matrix, Matrix, Matrix)> {
    let raw: Vec<f64> = (0..n).map(|i| ((n - i) * (n - i)) as f64).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = raw.iter().map(|x| x - mean).collect();
    let s = sup_norm(&centered);
    let h = haar_orthogonal(n, &mut substream(seed, "growth_conjugator", 0));
    let d = Matrix::from_diagonal(&DVector::from_iterator(n, centered.iter().map(|x| (2.0 * x / s).exp())));
    let g = &h * d * h.transpose();
    let mut rng = substream(seed, "growth_f", 0);
    let mut f = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let det = f.determinant();
    if det == 0.0 {
        return Err(Error::SingularInput);
    }
    f /= det.abs().powf(1.0 / n as f64);
    let f_inv = inverse(&f)?;
    Ok((g, f, f_inv))
}

/// Decides the pair and, when a free proper group exists, builds and verifies
/// a Schottky witness; on negative decisions runs the growth probe instead.
pub fn properness_pipeline(spec: &PairSpec, opts: &PipelineOptions) -> Result<PipelineReport> {
    let n = spec
        .family
        .sl_dimension()
        .ok_or_else(|| Error::PreconditionFailed(format!("{} is not a family in SL(n, R)", spec.family)))?;
    let decision = decide_existence_capped(spec, opts.rank_cap).map_err(|e| e.at("decide"))?;
    if decision.outcome != Outcome::ExistsFreeZariskiDense {
        let growth = if decision.outcome == Outcome::OnlyVirtuallyAbelian {
            let (g, f, f_inv) = growth_sample(n, opts.seed).map_err(|e| e.at("growth_probe"))?;
            Some(growth_probe(&g, &f, &f_inv, opts.growth_p_max).map_err(|e| e.at("growth_probe"))?)
        } else {
            None
        };
        return Ok(PipelineReport { decision, witness: None, growth });
    }
    let witness = construct_verified(spec, opts)?;
    Ok(PipelineReport { decision, witness: Some(witness), growth: None })
}

/// Cone, generators and power search for a positive pair, followed by the
/// word-ball check; cone escapes are answered by doubling `m` up to `max_m`.
pub fn construct_verified(spec: &PairSpec, opts: &PipelineOptions) -> Result<SchottkyWitness> {
    let n = spec
        .family
        .sl_dimension()
        .ok_or_else(|| Error::PreconditionFailed(format!("{} is not a family in SL(n, R)", spec.family)))?;
    let ctx = crate::chamber::ChamberContext::new(&spec.chamber, opts.rank_cap).map_err(|e| e.at("decide"))?;
    let cone = build_avoiding_cone(&ctx.e_iota, &spec.v_h, &ctx.weyl, &spec.chamber).map_err(|e| e.at("cone"))?;
    let c = construct_generators(n, &cone, &opts.construct, opts.seed).map_err(|e| e.at("construct"))?;
    let co = &opts.construct;
    let mut family = power_search(&c, co.max_m, co.samples).map_err(|e| e.at("power_search"))?;
    loop {
        let w = assemble_witness(&c, &family, Some(spec.family.to_string()), co.samples);
        match verify_word_ball(&w, spec.margin.as_ref(), opts.max_len, None) {
            Ok(verified) => return Ok(verified),
            Err(Error::ConeEscape { .. }) if family.m * 2 <= co.max_m => {
                family = power_search_from(&c, family.m * 2, co.max_m, co.samples).map_err(|e| e.at("power_search"))?;
            }
            Err(e) => return Err(e.at("verify")),
        }
    }
}
