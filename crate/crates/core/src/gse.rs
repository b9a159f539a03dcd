//! Conditional distribution of total collision and generalized Shannon
//! entropy.
//!
//! For order `m`, the collision distribution is `p_{m,k} = p_k^m / Σ_i p_i^m`
//! and the order-`m` GSE is its Shannon entropy in nats. Order 1 is admitted
//! and reduces to ordinary Shannon entropy.

use crate::dist::{AnalyticDistribution, DiscretePmf};
use crate::error::{domain, GseError, Result};
use crate::special::{log_moment, riemann_zeta};

/// The order-`m` collision distribution of a finite pmf.
#[derive(Clone, Debug, PartialEq)]
pub struct CdotcPmf {
    order: u32,
    probs: DiscretePmf,
    log_probs: Vec<f64>,
    collision_mass: f64,
}

impl CdotcPmf {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn probs(&self) -> &DiscretePmf {
        &self.probs
    }

    /// `ln p_{m,k}`, `-inf` on zero-probability categories. Exact even where
    /// `p_{m,k}` itself underflows.
    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// `Σ_i p_i^m`. May underflow to zero for large `m`; the collision
    /// probabilities do not depend on it.
    pub fn collision_mass(&self) -> f64 {
        self.collision_mass
    }

    /// Shannon entropy of the collision distribution, `H_m`.
    pub fn entropy(&self) -> f64 {
        if self.probs.is_uniform_on_support() {
            return (self.probs.support_size() as f64).ln();
        }
        self.probs
            .probs()
            .iter()
            .zip(&self.log_probs)
            .filter(|(q, _)| **q > 0.0)
            .map(|(q, lq)| -q * lq)
            .sum()
    }
}

fn check_order(m: u32) -> Result<()> {
    if m < 1 {
        return domain("GSE order must be at least 1");
    }
    Ok(())
}

/// Collision transform, evaluated in log space:
/// `w_k = m ln p_k`, `ln p_{m,k} = w_k - w_max - ln Σ exp(w_i - w_max)`.
pub fn cdotc(pmf: &DiscretePmf, m: u32) -> Result<CdotcPmf> {
    check_order(m)?;
    let probs = pmf.probs();
    if !probs.iter().any(|p| *p > 0.0) {
        return Err(GseError::InvalidDistribution(
            "all probabilities are zero".into(),
        ));
    }
    let mf = m as f64;
    let weights: Vec<f64> = probs
        .iter()
        .map(|p| {
            if *p > 0.0 {
                mf * p.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let w_max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = weights
        .iter()
        .filter(|w| w.is_finite())
        .map(|w| (w - w_max).exp())
        .sum::<f64>()
        .ln();
    let log_probs: Vec<f64> = weights.iter().map(|w| w - w_max - log_norm).collect();
    let out: Vec<f64> = if m == 1 {
        probs.to_vec()
    } else {
        log_probs.iter().map(|l| l.exp()).collect()
    };
    Ok(CdotcPmf {
        order: m,
        probs: DiscretePmf::from_normalized(out),
        log_probs,
        collision_mass: (w_max + log_norm).exp(),
    })
}

/// Order-`m` GSE of a finite pmf, `-Σ p_{m,k} ln p_{m,k}` with `0 ln 0 = 0`.
pub fn gse(pmf: &DiscretePmf, m: u32) -> Result<f64> {
    Ok(cdotc(pmf, m)?.entropy())
}

/// Shannon entropy (nats) of a finite pmf; identical to `gse(pmf, 1)`.
pub fn shannon_entropy(pmf: &DiscretePmf) -> Result<f64> {
    gse(pmf, 1)
}

/// Shannon entropy of a source distribution to within `eps`.
pub fn shannon_entropy_analytic(dist: &AnalyticDistribution, eps: f64) -> Result<f64> {
    gse_analytic(dist, 1, eps)
}

/// Order-`m` GSE of a source distribution to within `eps`.
///
/// Finite families are summed exactly. Geometric sources are summed up to
/// [`AnalyticDistribution::truncation_index`]. Zeta sources use
/// `p_{m,k} = k^{-ms} / ζ(ms)`, which gives
/// `H_m = ln ζ(ms) + ms Σ k^{-ms} ln k / ζ(ms)`.
pub fn gse_analytic(dist: &AnalyticDistribution, m: u32, eps: f64) -> Result<f64> {
    check_order(m)?;
    if !(eps > 0.0) {
        return domain(format!("tolerance must be positive, got {eps}"));
    }
    dist.validate()?;
    if let Some(pmf) = dist.finite_pmf() {
        return gse(&pmf, m);
    }
    match dist {
        AnalyticDistribution::Zeta { s } => {
            let a = m as f64 * s;
            let z = riemann_zeta(a)?;
            Ok(z.ln() + a * log_moment(a, 1)? / z)
        }
        _ => {
            let terms = collision_log_terms(dist, m, eps)?;
            Ok(terms.iter().map(|lq| -lq.exp() * lq).sum())
        }
    }
}

/// `ln p_{m,k}` for `k = 1..=K` with `K` from the truncation index.
pub(crate) fn collision_log_terms(
    dist: &AnalyticDistribution,
    m: u32,
    eps: f64,
) -> Result<Vec<f64>> {
    let k_max = dist.truncation_index(m, eps)?;
    let log_mass = dist.collision_mass(m)?.ln();
    let mf = m as f64;
    (1..=k_max)
        .map(|k| Ok(mf * dist.pmf_at(k)?.ln() - log_mass))
        .collect()
}
