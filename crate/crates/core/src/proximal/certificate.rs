use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    cosine_for_delta, delta_to_hyperplane, dot, proj_distance, proximal_data, unit_distance, ProjHyperplane, ProjPoint,
    ProximalData, DEFAULT_GAP_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::substream;

/// Observed ratios must stay below this fraction of ε for a certificate.
pub const SAFETY_FACTOR: f64 = 0.9;

pub const DEFAULT_SAMPLES: usize = 1000;

/// Scales of the local pairs `y = x + s·z` in the Lipschitz check.
const LOCAL_SCALES: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Every check passed with the safety factor.
    Certified,
    /// Some check failed outright.
    Refuted,
    /// Every sample passed, but not with the safety factor.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContainmentCheck {
    pub samples: usize,
    /// Fraction of sampled `x ∈ B^ε` with `d(gx, x⁺) ≤ ε`.
    pub pass_rate: f64,
    /// `max d(gx, x⁺) / ε`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzCheck {
    pub pairs: usize,
    /// `max d(gx, gy) / (ε · d(x, y))`.
    pub max_ratio: f64,
}

/// Sampled evidence that `g` is ε-proximal: `δ(x⁺, X^<) ≥ 2ε`,
/// `g(B^ε) ⊂ b^ε`, and `g` is ε-Lipschitz on `B^ε`, where `B^ε` is the set of
/// points at distance at least ε from `X^<` and `b^ε` the ε-ball around `x⁺`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsCertificate {
    pub epsilon: f64,
    pub margin: f64,
    pub margin_ok: bool,
    pub containment: ContainmentCheck,
    pub lipschitz: LipschitzCheck,
    pub sample_count: usize,
    pub seed: u64,
    pub stream: u64,
    pub verdict: Verdict,
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Draws a unit vector `x` with `δ(x, H) ≥ ε`. Every fourth sample lies on
/// the boundary `δ = ε`; the others are uniform on the sphere, by rejection.
fn sample_outside(rng: &mut ChaCha8Rng, normal: &[f64], c_eps: f64, k: usize) -> Vec<f64> {
    let d = normal.len();
    if k.is_multiple_of(4) {
        let mut u = gaussian(rng, d);
        let c = dot(&u, normal);
        u.iter_mut().zip(normal).for_each(|(x, n)| *x -= c * n);
        normalize(&mut u);
        let s = (1.0 - c_eps * c_eps).sqrt();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return normal.iter().zip(&u).map(|(n, x)| sign * c_eps * n + s * x).collect();
    }
    for _ in 0..10_000 {
        let mut v = gaussian(rng, d);
        normalize(&mut v);
        if dot(&v, normal).abs() >= c_eps {
            return v;
        }
    }
    normal.to_vec()
}

fn apply(g: &Matrix, x: &[f64]) -> Vec<f64> {
    let mut y: Vec<f64> = (g * DVector::from_column_slice(x)).iter().copied().collect();
    normalize(&mut y);
    y
}

struct Sampled {
    pass_rate: f64,
    containment_max: f64,
    lipschitz_max: f64,
    pairs: usize,
}

/// Sampled containment and Lipschitz checks for `g` against a target point
/// and a hyperplane normal. Ratios are reported relative to `eps`.
fn sample_checks(
    g: &Matrix,
    target: &[f64],
    normal: &[f64],
    eps: f64,
    samples: usize,
    seed: u64,
    stream: u64,
) -> Sampled {
    let c_eps = cosine_for_delta(eps);
    let mut rng = substream(seed, "containment", stream);
    let mut passed = 0usize;
    let mut containment_max = 0.0f64;
    for k in 0..samples {
        let x = sample_outside(&mut rng, normal, c_eps, k);
        let d = unit_distance(&apply(g, &x), target);
        if d <= eps {
            passed += 1;
        }
        containment_max = containment_max.max(d / eps);
    }
    let mut rng = substream(seed, "lipschitz", stream);
    let mut lipschitz_max = 0.0f64;
    let mut pairs = 0usize;
    for k in 0..samples {
        let x = sample_outside(&mut rng, normal, c_eps, k);
        let y = if k % 4 == 3 {
            sample_outside(&mut rng, normal, c_eps, k + 1)
        } else {
            let s = LOCAL_SCALES[k % 4 % LOCAL_SCALES.len()];
            let z = gaussian(&mut rng, x.len());
            let mut y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + s * b).collect();
            normalize(&mut y);
            if dot(&y, normal).abs() < c_eps {
                continue;
            }
            y
        };
        let dxy = unit_distance(&x, &y);
        if dxy == 0.0 {
            continue;
        }
        pairs += 1;
        let ratio = unit_distance(&apply(g, &x), &apply(g, &y)) / dxy;
        lipschitz_max = lipschitz_max.max(ratio / eps);
    }
    Sampled { pass_rate: passed as f64 / samples.max(1) as f64, containment_max, lipschitz_max, pairs }
}

/// Certificate for `g` given its proximal data, drawing from substream index `stream`.
pub fn certify_with_data(
    g: &Matrix,
    data: &ProximalData,
    epsilon: f64,
    samples: usize,
    seed: u64,
    stream: u64,
) -> EpsCertificate {
    let margin_ok = data.margin >= 2.0 * epsilon;
    let (containment, lipschitz, verdict) = if !margin_ok {
        (
            ContainmentCheck { samples: 0, pass_rate: 0.0, max_ratio: f64::NAN },
            LipschitzCheck { pairs: 0, max_ratio: f64::NAN },
            Verdict::Refuted,
        )
    } else {
        let s = sample_checks(g, &data.attracting.rep, &data.repelling.normal, epsilon, samples, seed, stream);
        let verdict = if s.containment_max > 1.0 || s.lipschitz_max > 1.0 {
            Verdict::Refuted
        } else if s.containment_max <= SAFETY_FACTOR && s.lipschitz_max <= SAFETY_FACTOR {
            Verdict::Certified
        } else {
            Verdict::Inconclusive
        };
        (
            ContainmentCheck { samples, pass_rate: s.pass_rate, max_ratio: s.containment_max },
            LipschitzCheck { pairs: s.pairs, max_ratio: s.lipschitz_max },
            verdict,
        )
    };
    EpsCertificate {
        epsilon,
        margin: data.margin,
        margin_ok,
        containment,
        lipschitz,
        sample_count: samples,
        seed,
        stream,
        verdict,
    }
}

/// Samples the ε-proximality conditions for `g`.
pub fn eps_proximal_certificate(g: &Matrix, epsilon: f64, samples: usize, seed: u64) -> Result<EpsCertificate> {
    let data = proximal_data(g, DEFAULT_GAP_TOL)?.ok_or(Error::NotProximal)?;
    Ok(certify_with_data(g, &data, epsilon, samples, seed, 0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GuessReport {
    pub pass: bool,
    /// `δ(x⁺, Y)` of the supplied guesses.
    pub guess_margin: f64,
    pub containment_max_ratio: f64,
    pub lipschitz_max_ratio: f64,
    /// `d(x⁺_g, x⁺)`, when `g` turned out proximal.
    pub located_point_distance: Option<f64>,
    /// Distance between the normals of `X^<_g` and `Y`.
    pub located_hyperplane_distance: Option<f64>,
    /// Certificate of `g` at `2ε`.
    pub two_eps_verdict: Option<Verdict>,
}

/// Checks the sufficient condition "`g(B^ε) ⊂ b^ε` and `g` is ε-Lipschitz on
/// `B^ε`" for a guessed attracting point `x_plus` and hyperplane `Y`, then
/// locates the true eigendata and measures how far the guesses are.
pub fn guess_check(
    g: &Matrix,
    x_plus: &ProjPoint,
    hyperplane: &ProjHyperplane,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<GuessReport> {
    let guess_margin = delta_to_hyperplane(x_plus, hyperplane)?;
    if guess_margin < 6.0 * epsilon {
        return Err(Error::PreconditionFailed(format!(
            "δ(x⁺, Y) = {guess_margin:.4} is below 6ε = {:.4}",
            6.0 * epsilon
        )));
    }
    if g.nrows() != x_plus.dim() {
        return Err(Error::DimensionMismatch { left: g.nrows(), right: x_plus.dim() });
    }
    let s = sample_checks(g, &x_plus.rep, &hyperplane.normal, epsilon, samples, seed, 0);
    let sampled_ok = s.containment_max <= 1.0 && s.lipschitz_max <= 1.0;
    let mut report = GuessReport {
        pass: false,
        guess_margin,
        containment_max_ratio: s.containment_max,
        lipschitz_max_ratio: s.lipschitz_max,
        located_point_distance: None,
        located_hyperplane_distance: None,
        two_eps_verdict: None,
    };
    if !sampled_ok {
        return Ok(report);
    }
    if let Some(data) = proximal_data(g, DEFAULT_GAP_TOL)? {
        let dp = proj_distance(&data.attracting, x_plus)?;
        let dh = unit_distance(&data.repelling.normal, &hyperplane.normal);
        report.located_point_distance = Some(dp);
        report.located_hyperplane_distance = Some(dh);
        report.two_eps_verdict = Some(certify_with_data(g, &data, 2.0 * epsilon, samples, seed, 1).verdict);
        report.pass = dp <= epsilon && dh <= epsilon;
    }
    Ok(report)
}
