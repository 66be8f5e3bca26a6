use serde::{Deserialize, Serialize};

use super::{certify_with_data, delta_to_hyperplane, proximal_data, EpsCertificate, Verdict, DEFAULT_GAP_TOL};
use crate::cartan::Tower;
use crate::error::{Error, Result};
use crate::linalg::{top_singular_value, Matrix};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductReport {
    /// Number of factors `l`.
    pub length: usize,
    pub exponents: Vec<u64>,
    /// `δ(x⁺_{g_{j−1}}, X^<_{g_j})`, cyclically.
    pub transversality: Vec<f64>,
    pub log_lambda1: f64,
    /// `Σ n_j ln λ₁(g_j)`.
    pub predicted: f64,
    /// `|ln λ₁(g) − Σ n_j ln λ₁(g_j)|`.
    pub lambda_residual: f64,
    /// `|ln ‖g‖ − Σ n_j ln λ₁(g_j)|`.
    pub norm_residual: f64,
    /// Certificate of the product at `2ε`, when it is proximal.
    pub product_certificate: Option<EpsCertificate>,
}

impl ProductReport {
    pub fn product_certified(&self) -> bool {
        self.product_certificate.as_ref().is_some_and(|c| c.verdict == Verdict::Certified)
    }
}

/// Forms `g = g_l^{n_l} ⋯ g_1^{n_1}` from ε-proximal factors with cyclic
/// transversality `δ(x⁺_{g_{j−1}}, X^<_{g_j}) ≥ 6ε` (`g_0 = g_l`) and compares
/// `ln λ₁(g)` and `ln ‖g‖` with `Σ n_j ln λ₁(g_j)`.
pub fn product_bound_check(
    factors: &[(Matrix, u64)],
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<ProductReport> {
    if factors.is_empty() {
        return Err(Error::BadParameters("at least one factor is required".into()));
    }
    let mut data = Vec::with_capacity(factors.len());
    for (j, (g, _)) in factors.iter().enumerate() {
        let d = proximal_data(g, DEFAULT_GAP_TOL)?.ok_or(Error::NotCertified { index: j })?;
        let cert = certify_with_data(g, &d, epsilon, samples, seed, j as u64);
        if cert.verdict != Verdict::Certified {
            return Err(Error::NotCertified { index: j });
        }
        data.push(d);
    }
    let l = factors.len();
    let mut transversality = Vec::with_capacity(l);
    for j in 0..l {
        let prev = &data[(j + l - 1) % l];
        let margin = delta_to_hyperplane(&prev.attracting, &data[j].repelling)?;
        if margin < 6.0 * epsilon {
            return Err(Error::TransversalityFailed { index: j, margin, required: 6.0 * epsilon });
        }
        transversality.push(margin);
    }
    let mut acc: Option<Tower> = None;
    let mut predicted = 0.0;
    for ((g, n), d) in factors.iter().zip(&data) {
        let power = Tower::from_matrix(g)?.pow(*n);
        acc = Some(match acc {
            None => power,
            Some(a) => power.mul(&a),
        });
        predicted += *n as f64 * d.lambda1.ln();
    }
    let product = acc.expect("at least one factor");
    let (base, log_scale) = product.base();
    let log_norm = top_singular_value(base).ln() + log_scale;
    let pd = proximal_data(base, DEFAULT_GAP_TOL)?;
    let (log_lambda1, product_certificate) = match &pd {
        Some(d) => {
            let cert = certify_with_data(base, d, 2.0 * epsilon, samples, seed, l as u64 + 1000);
            (d.lambda1.ln() + log_scale, Some(cert))
        }
        None => (f64::NAN, None),
    };
    Ok(ProductReport {
        length: l,
        exponents: factors.iter().map(|(_, n)| *n).collect(),
        transversality,
        log_lambda1,
        predicted,
        lambda_residual: (log_lambda1 - predicted).abs(),
        norm_residual: (log_norm - predicted).abs(),
        product_certificate,
    })
}
