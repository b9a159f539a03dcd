//! Plug-in estimation of GSE with asymptotic standard errors.
//!
//! The estimator is the GSE of the empirical distribution `p̂_k = Y_k / n`.
//! Its asymptotic variance is the first-order delta-method variance under
//! multinomial sampling,
//!
//! ```text
//! σ_m² = Σ_k (m² / p_k) · (p_{m,k} ln p_{m,k} + p_{m,k} H_m)²
//!      = Σ_k p_k g_k²,   g_k = -(m p_{m,k} / p_k)(ln p_{m,k} + H_m),
//! ```
//!
//! which for `m = 1` is the classical `Σ p_k ln² p_k - H²`. The variant that
//! squares the `m²/p_k` factor as well is available as
//! [`sigma_sq_literal`] for comparison only.

use serde::Serialize;

use crate::dist::{AnalyticDistribution, DiscretePmf, SampleCounts};
use crate::error::{domain, Result};
use crate::gse::{cdotc, collision_log_terms, gse, gse_analytic};
use crate::special::{log_moment, riemann_zeta};

/// Empirical proportions over the observed categories.
///
/// Entries are ordered by descending count, ties by ascending label; this
/// fixes the summation order of every downstream quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalPmf {
    pub pmf: DiscretePmf,
    pub labels: Vec<u64>,
}

pub fn empirical_pmf(counts: &SampleCounts) -> EmpiricalPmf {
    let mut entries: Vec<(u64, u64)> = counts.iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let n = counts.n() as f64;
    EmpiricalPmf {
        pmf: DiscretePmf::from_normalized(entries.iter().map(|(_, c)| *c as f64 / n).collect()),
        labels: entries.into_iter().map(|(k, _)| k).collect(),
    }
}

/// Plug-in order-`m` GSE, `Ĥ_m`.
pub fn gse_plugin(counts: &SampleCounts, m: u32) -> Result<f64> {
    gse(&empirical_pmf(counts).pmf, m)
}

/// Delta-method variance `σ_m²` of a finite pmf.
///
/// Exactly zero when the pmf is uniform on its support, where the gradient
/// of `H_m` vanishes.
pub fn sigma_sq_true(pmf: &DiscretePmf, m: u32) -> Result<f64> {
    let c = cdotc(pmf, m)?;
    if pmf.is_uniform_on_support() {
        return Ok(0.0);
    }
    let h = c.entropy();
    let mf = m as f64;
    let total = pmf
        .probs()
        .iter()
        .zip(c.probs().probs())
        .zip(c.log_probs())
        .filter(|((p, q), _)| **p > 0.0 && **q > 0.0)
        .map(|((p, q), lq)| q * q / p * (lq + h).powi(2))
        .sum::<f64>();
    Ok(mf * mf * total)
}

/// `σ_m²` of a source distribution to within `eps`.
///
/// Zeta sources reduce to the series `Σ k^{-c} ln^j k`, `c = (2m-1)s`:
/// with `a = ms`, `Z = ζ(a)` and `d = H_m - ln Z`,
/// `σ_m² = m² ζ(s)/Z² · Σ k^{-c} (a ln k - d)²`.
pub fn sigma_sq_true_analytic(dist: &AnalyticDistribution, m: u32, eps: f64) -> Result<f64> {
    if m < 1 {
        return domain("GSE order must be at least 1");
    }
    dist.validate()?;
    if let Some(pmf) = dist.finite_pmf() {
        return sigma_sq_true(&pmf, m);
    }
    let mf = m as f64;
    match dist {
        AnalyticDistribution::Zeta { s } => {
            let a = mf * s;
            let c = (2.0 * mf - 1.0) * s;
            let z = riemann_zeta(a)?;
            let d = a * log_moment(a, 1)? / z;
            let series = a * a * log_moment(c, 2)? - 2.0 * a * d * log_moment(c, 1)?
                + d * d * log_moment(c, 0)?;
            Ok(mf * mf * riemann_zeta(*s)? / (z * z) * series)
        }
        _ => {
            let h = gse_analytic(dist, m, eps)?;
            let log_q = collision_log_terms(dist, m, eps)?;
            let mut total = 0.0;
            for (i, lq) in log_q.iter().enumerate() {
                let p = dist.pmf_at(i as u64 + 1)?;
                let q = lq.exp();
                if p > 0.0 && q > 0.0 {
                    total += q * q / p * (lq + h).powi(2);
                }
            }
            Ok(mf * mf * total)
        }
    }
}

/// `Σ_k [ (m²/p_k)(p_{m,k} ln p_{m,k} + p_{m,k} H_m) ]²`, squaring the
/// `m²/p_k` factor too. Diagnostic only: it disagrees with the delta-method
/// variance on every non-uniform pmf.
pub fn sigma_sq_literal(pmf: &DiscretePmf, m: u32) -> Result<f64> {
    let c = cdotc(pmf, m)?;
    let h = c.entropy();
    let mf = m as f64;
    Ok(pmf
        .probs()
        .iter()
        .zip(c.probs().probs())
        .zip(c.log_probs())
        .filter(|((p, q), _)| **p > 0.0 && **q > 0.0)
        .map(|((p, q), lq)| (mf * mf / p * q * (lq + h)).powi(2))
        .sum())
}

/// Plug-in variance `σ̂_m²` over the observed categories.
pub fn sigma_hat_sq(counts: &SampleCounts, m: u32) -> Result<f64> {
    sigma_sq_true(&empirical_pmf(counts).pmf, m)
}

/// One sample's point estimate and standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GseEstimate {
    pub m: u32,
    pub n: u64,
    pub h_hat: f64,
    pub sigma_hat: f64,
    pub support_observed: usize,
}

impl GseEstimate {
    pub fn from_counts(counts: &SampleCounts, m: u32) -> Result<Self> {
        let emp = empirical_pmf(counts);
        Ok(GseEstimate {
            m,
            n: counts.n(),
            h_hat: gse(&emp.pmf, m)?,
            sigma_hat: sigma_sq_true(&emp.pmf, m)?.sqrt(),
            support_observed: counts.support(),
        })
    }

    /// `Ĥ_m ± z_{α/2} σ̂_m / √n`.
    pub fn interval(&self, alpha: f64) -> Result<ConfidenceInterval> {
        let z = z_critical(alpha)?;
        let half = z * self.sigma_hat / (self.n as f64).sqrt();
        Ok(ConfidenceInterval {
            lower: self.h_hat - half,
            upper: self.h_hat + half,
            level: 1.0 - alpha,
            degenerate: self.sigma_hat == 0.0,
        })
    }
}

/// Symmetric asymptotic interval for `H_m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    /// Zero width because `σ̂_m = 0` (single or equally frequent categories).
    pub degenerate: bool,
}

impl ConfidenceInterval {
    /// Inclusive at both endpoints.
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

pub fn confidence_interval(
    counts: &SampleCounts,
    m: u32,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    z_critical(alpha)?;
    GseEstimate::from_counts(counts, m)?.interval(alpha)
}

/// `z_{α/2}`, the upper `α/2` quantile of the standard normal.
pub fn z_critical(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(-normal_quantile(0.5 * alpha))
}

/// Standard normal quantile for `p ∈ (0, 1)`.
///
/// Acklam's rational approximation (relative error 1.2e-9) followed by one
/// Halley step on `Φ(x) - p`, which brings the error near machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement
    let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}
