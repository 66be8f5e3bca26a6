//! Acceptance criteria, one test per criterion. Each test prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use proper_actions::cartan::{cartan_projection, growth_probe, iota_sl, lyapunov_projection, sup_distance};
use proper_actions::chamber::{
    b_plus_span, build_pair_spec, catalog, enumerate_weyl, longest_element, opposition_involution, ChamberData, Family,
    RootSystemType, DEFAULT_RANK_CAP,
};
use proper_actions::linalg::{compound_matrix, haar_orthogonal, index_sets, inverse, jacobi_singular_values, Matrix};
use proper_actions::proximal::{
    delta_to_hyperplane, eps_proximal_certificate, product_bound_check, proximal_data, Verdict,
};
use proper_actions::schottky::{properness_pipeline, PipelineOptions};
use proper_actions::seed::substream;
use rand::Rng;
use rand_distr::StandardNormal;

/// Writes to the process stdout directly, so the line shows up without
/// `--nocapture`.
fn out(line: &str) {
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{line}").unwrap();
    stdout.flush().unwrap();
}

fn report(id: &str, pass: bool, detail: &str) {
    out(&format!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" }));
}

fn diag(v: &[f64]) -> Matrix {
    Matrix::from_diagonal(&DVector::from_vec(v.to_vec()))
}

fn uniform_matrix(n: usize, seed: u64, label: &str, index: u64) -> Matrix {
    let mut rng = substream(seed, label, index);
    Matrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0))
}

fn unimodular(m: Matrix) -> Matrix {
    let n = m.nrows() as f64;
    let d = m.determinant().abs();
    m / d.powf(1.0 / n)
}

const CLASSIFICATION_MAX_N: usize = 9;

#[test]
fn criterion_1_classification_reproduction() {
    let start = Instant::now();
    let rows = catalog(CLASSIFICATION_MAX_N, DEFAULT_RANK_CAP).unwrap();
    let elapsed = start.elapsed();
    let checked = rows.iter().filter(|r| r.expected_negative.is_some()).count();
    let mismatches: Vec<String> = rows
        .iter()
        .filter(|r| r.agrees == Some(false))
        .map(|r| format!("{} ({:?})", r.family, r.decision.outcome))
        .collect();
    let pass = mismatches.is_empty() && elapsed < Duration::from_secs(60);
    report(
        "1",
        pass,
        &format!("{checked} stated rows, {} mismatches {mismatches:?}, {:.2?}", mismatches.len(), elapsed),
    );
    assert!(pass);
}

/// Every stated row except the literal `SL(2p)/SL(p)` entry, whose subgroup
/// has real rank `p − 1` below `dim E^ι = p` and so can never contain `B⁺`.
#[test]
fn criterion_1_rows_other_than_sl2p_over_slp() {
    let rows = catalog(CLASSIFICATION_MAX_N, DEFAULT_RANK_CAP).unwrap();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for r in &rows {
        if matches!(r.family, Family::SlmTimesIdentity { n, m } if n == 2 * m) {
            continue;
        }
        if let Some(agrees) = r.agrees {
            checked += 1;
            if !agrees {
                mismatches.push(r.family.to_string());
            }
        }
    }
    let pass = mismatches.is_empty() && checked > 0;
    report("1*", pass, &format!("{checked} rows outside SL(2p)/SL(p), mismatches {mismatches:?}"));
    assert!(pass);
}

fn encoded_chambers() -> Vec<RootSystemType> {
    let cap = DEFAULT_RANK_CAP;
    let mut out: Vec<RootSystemType> = (1..=cap).map(RootSystemType::A).collect();
    out.extend((2..=cap).map(RootSystemType::B));
    out.extend((2..=cap).map(RootSystemType::D));
    out
}

fn factorial(k: u64) -> u64 {
    (1..=k).product()
}

#[test]
fn criterion_2_weyl_and_involution_exactness() {
    let mut failures = Vec::new();
    for t in encoded_chambers() {
        let chamber = ChamberData::new(t).unwrap();
        let weyl = enumerate_weyl(&chamber).unwrap();
        let expected = match t {
            RootSystemType::A(r) => factorial(r as u64 + 1),
            RootSystemType::B(m) => (1u64 << m) * factorial(m as u64),
            RootSystemType::D(m) => (1u64 << (m - 1)) * factorial(m as u64),
        };
        if weyl.len() as u64 != expected {
            failures.push(format!("{}: |W| = {} ≠ {expected}", t.label(), weyl.len()));
        }
        let iota = opposition_involution(&longest_element(&chamber, &weyl).unwrap());
        if !iota.compose(&iota).is_identity() {
            failures.push(format!("{}: ι² ≠ id", t.label()));
        }
        let e_iota = b_plus_span(&iota, &chamber);
        let full = e_iota == chamber.span();
        let expect_full = match t {
            RootSystemType::A(r) => r < 2,
            RootSystemType::B(_) => true,
            RootSystemType::D(m) => m % 2 == 0,
        };
        if full != expect_full {
            failures.push(format!("{}: B⁺ = A⁺ is {full}", t.label()));
        }
    }
    let pass = failures.is_empty();
    report("2", pass, &format!("{} chambers, failures {failures:?}", encoded_chambers().len()));
    assert!(pass);
}

#[test]
fn criterion_3_projection_identities() {
    let start = Instant::now();
    let (mut inv_err, mut major_err, mut bound_err) = (0.0f64, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..1000u64 {
        let g = unimodular(uniform_matrix(4, 3, "criterion3_g", k));
        let mu = cartan_projection(&g).unwrap().coords;
        let mu_inv = cartan_projection(&inverse(&g).unwrap()).unwrap().coords;
        inv_err = inv_err.max(sup_distance(&mu_inv, &iota_sl(&mu)));

        let lambda = lyapunov_projection(&g).unwrap().coords;
        let (mut sl, mut sm) = (0.0, 0.0);
        for i in 0..4 {
            sl += lambda[i];
            sm += mu[i];
            major_err = major_err.max(sl - sm);
        }
        major_err = major_err.max((sl - sm).abs());

        let l = unimodular(uniform_matrix(4, 3, "criterion3_l", k));
        let lp = unimodular(uniform_matrix(4, 3, "criterion3_lp", k));
        let grow = diag(&[(6.0f64).exp(), (2.0f64).exp(), (-1.0f64).exp(), (-7.0f64).exp()]);
        let big = &g * grow * &g;
        let mu_big = cartan_projection(&big).unwrap().coords;
        let mu_conj = cartan_projection(&(&l * &big * &lp)).unwrap().coords;
        let log_norm = |m: &Matrix| jacobi_singular_values(m)[0].ln();
        let budget = log_norm(&l) + log_norm(&inverse(&l).unwrap()) + log_norm(&lp) + log_norm(&inverse(&lp).unwrap());
        bound_err = bound_err.max(sup_distance(&mu_conj, &mu_big) - budget);
    }
    let elapsed = start.elapsed();
    let pass = inv_err <= 1e-7 && major_err <= 1e-9 && bound_err <= 1e-6 && elapsed < Duration::from_secs(10);
    report(
        "3",
        pass,
        &format!(
            "max ‖μ(g⁻¹) − ι μ(g)‖ = {inv_err:.2e}, majorization excess {major_err:.2e}, perturbation excess {bound_err:.2e}, {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

const CRITERION_4_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[test]
fn criterion_4_schottky_witness_sl4_over_sl3() {
    let spec = build_pair_spec(Family::SlmTimesIdentity { n: 4, m: 3 }, DEFAULT_RANK_CAP).unwrap();
    let mut successes = 0;
    let mut lines = Vec::new();
    for seed in CRITERION_4_SEEDS {
        let start = Instant::now();
        let opts = PipelineOptions { seed, max_len: 6, ..Default::default() };
        let result = properness_pipeline(&spec, &opts);
        let elapsed = start.elapsed();
        let ok = match &result {
            Ok(r) => match &r.witness {
                Some(w) => {
                    let wb = w.word_ball.as_ref().unwrap();
                    let length_six = wb.per_length[5].words;
                    let slope = wb.margin_slope.unwrap_or(f64::NAN);
                    let good = wb.passed()
                        && length_six == 972
                        && wb.min_separation >= 1e-6
                        && slope > 0.0
                        && elapsed < Duration::from_secs(120);
                    lines.push(format!(
                        "seed {seed}: m = {}, ε = {:.4}, {} words at length 6, separation {:.2e}, slope {slope:.3}, {elapsed:.2?}",
                        w.m, w.epsilon, length_six, wb.min_separation
                    ));
                    good
                }
                None => {
                    lines.push(format!("seed {seed}: no witness ({:?})", r.decision.outcome));
                    false
                }
            },
            Err(e) => {
                lines.push(format!("seed {seed}: {e}"));
                false
            }
        };
        successes += usize::from(ok);
    }
    for l in &lines {
        out(&format!("  criterion 4 {l}"));
    }
    let pass = successes >= 3;
    report("4", pass, &format!("{successes}/5 seeds produced verified witnesses"));
    assert!(pass);
}

#[test]
fn criterion_5_negative_case_mechanism() {
    let mut details = Vec::new();
    let mut pass = true;
    for seed in 0..10u64 {
        let k = haar_orthogonal(3, &mut substream(seed, "criterion5_k", 0));
        let g = &k * diag(&[2f64.exp(), 1f64.exp(), (-3f64).exp()]) * k.transpose();
        let mut rng = substream(seed, "criterion5_f", 0);
        let f = unimodular(Matrix::from_fn(3, 3, |_, _| rng.sample::<f64, _>(StandardNormal)));
        let f_inv = inverse(&f).unwrap();
        let r = growth_probe(&g, &f, &f_inv, 30).unwrap();
        let fitted = r.b_plus_distance[..5].iter().copied().fold(0.0, f64::max);
        let validated = r.b_plus_distance.iter().copied().fold(0.0, f64::max);
        let norm = r.mu_norm[29];
        let ok = validated <= 2.0 * fitted && norm > 10.0;
        pass &= ok;
        details.push(format!("seed {seed}: fit {fitted:.3}, validate {validated:.3}, ‖μ‖ at p = 30 {norm:.1}"));
    }
    for d in &details {
        out(&format!("  criterion 5 {d}"));
    }
    report("5", pass, "B⁺-distance at p ≤ 30 within 2× the fit at p ≤ 5 and ‖μ‖ > 10 on 10 seeds");
    assert!(pass);
}

/// Alternating exponent patterns of syllable length `l ≤ 4` over two factors.
fn alternating_words() -> Vec<Vec<(usize, u64)>> {
    let mut out = Vec::new();
    for l in 1..=4usize {
        for first in 0..2usize {
            for bits in 0..(1u32 << l) {
                out.push((0..l).map(|j| ((first + j) % 2, 1 + u64::from((bits >> j) & 1))).collect());
            }
        }
    }
    out
}

#[test]
fn criterion_6_product_bounds() {
    let eps = 0.12;
    let samples = 300;
    let g1 = diag(&[1e3, 1.0, 1e-3]);
    let words = alternating_words();
    let mut residuals: Vec<(usize, f64)> = Vec::new();
    let mut uncertified = 0usize;
    let mut errors = Vec::new();
    for pair in 0..100u64 {
        let mut attempt = 0u64;
        let g2 = loop {
            let h = haar_orthogonal(3, &mut substream(pair, "criterion6_h", attempt));
            let g2 = &h * &g1 * h.transpose();
            let d1 = proximal_data(&g1, 1e-6).unwrap().unwrap();
            let d2 = proximal_data(&g2, 1e-6).unwrap().unwrap();
            let t12 = delta_to_hyperplane(&d1.attracting, &d2.repelling).unwrap();
            let t21 = delta_to_hyperplane(&d2.attracting, &d1.repelling).unwrap();
            if t12.min(t21) >= 6.0 * eps {
                break g2;
            }
            attempt += 1;
        };
        for (j, g) in [&g1, &g2].into_iter().enumerate() {
            let c = eps_proximal_certificate(g, eps, samples, pair * 2 + j as u64).unwrap();
            assert_eq!(c.verdict, Verdict::Certified, "factor {j} of pair {pair}");
        }
        for word in &words {
            let factors: Vec<(Matrix, u64)> =
                word.iter().map(|&(which, n)| (if which == 0 { g1.clone() } else { g2.clone() }, n)).collect();
            match product_bound_check(&factors, eps, samples, pair) {
                Ok(r) => {
                    uncertified += usize::from(!r.product_certified());
                    residuals.push((word.len(), r.lambda_residual));
                }
                Err(e) => errors.push(format!("pair {pair}: {e}")),
            }
        }
    }
    let ln_c = residuals.iter().filter(|(l, _)| *l <= 2).map(|(l, r)| r / *l as f64).fold(0.0, f64::max);
    // periodic words such as g₁g₂g₁g₂ = (g₂g₁)² meet the bound with equality
    let violations = residuals.iter().filter(|(l, r)| *r > *l as f64 * ln_c * (1.0 + 1e-9)).count();
    let worst = residuals.iter().filter(|(l, _)| *l > 2).map(|(l, r)| r / (*l as f64 * ln_c)).fold(0.0, f64::max);
    let pass = errors.is_empty() && uncertified == 0 && violations == 0;
    report(
        "6",
        pass,
        &format!(
            "{} products, ln C_emp = {ln_c:.4}, worst residual / (l ln C_emp) at 3 ≤ l ≤ 4 = {worst:.6}, {violations} bound violations, {uncertified} not 2ε-certified, errors {errors:?}",
            residuals.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_compound_matrix_oracle() {
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let g = unimodular(uniform_matrix(5, 7, "criterion7", k));
        let s = jacobi_singular_values(&g);
        for i in 1..5 {
            let mut products: Vec<f64> =
                index_sets(5, i).iter().map(|set| set.iter().map(|&j| s[j]).product()).collect();
            products.sort_by(|a, b| b.total_cmp(a));
            let c = jacobi_singular_values(&compound_matrix(&g, i).unwrap());
            for (a, b) in c.iter().zip(&products) {
                worst = worst.max((a - b).abs() / b);
            }
        }
    }
    let pass = worst <= 1e-7;
    report("7", pass, &format!("max relative error {worst:.2e} over 100 SL(5) samples"));
    assert!(pass);
}
