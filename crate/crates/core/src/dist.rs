//! Source distributions on the positive integers.
//!
//! Categories are labelled `1, 2, 3, …`. Non-ordinal alphabets are mapped to
//! integer codes at ingestion (see [`crate::ingest`]); every quantity in this
//! crate depends on the probabilities alone, never on the labels.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Geometric, Zeta};
use serde::{Deserialize, Serialize};

use crate::error::{domain, GseError, Result};
use crate::rng::rng_from_seed;
use crate::special::{log_moment, tail_integral};

pub use crate::special::riemann_zeta;

/// Allowed deviation of `Σ p_k` from one.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// Largest truncation index [`AnalyticDistribution::truncation_index`] will
/// return before reporting non-convergence.
pub const MAX_TRUNCATION: u64 = 1 << 50;

/// Neumaier summation.
pub(crate) fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A probability vector over categories `1..=K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DiscretePmf {
    probs: Vec<f64>,
}

impl DiscretePmf {
    /// Validates entries (finite, non-negative) and the unit sum.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(GseError::InvalidDistribution(
                "empty probability vector".into(),
            ));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(GseError::InvalidDistribution(format!(
                "probability at category {} is {p}, expected a value in [0, 1]",
                i + 1
            )));
        }
        let total = compensated_sum(&probs);
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(GseError::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(DiscretePmf { probs })
    }

    /// Uniform distribution over `k` categories.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(GseError::InvalidDistribution(
                "uniform support must be positive".into(),
            ));
        }
        Ok(DiscretePmf {
            probs: vec![1.0 / k as f64; k],
        })
    }

    /// Builds from non-negative weights by dividing by their sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total = compensated_sum(weights);
        if !(total > 0.0) || !total.is_finite() || weights.iter().any(|w| *w < 0.0) {
            return Err(GseError::InvalidDistribution(
                "weights must be non-negative with a positive finite sum".into(),
            ));
        }
        DiscretePmf::new(weights.iter().map(|w| w / total).collect())
    }

    /// Trusted constructor for vectors that are normalized by construction
    /// (empirical proportions, perturbations that preserve the sum).
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        DiscretePmf { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Number of categories with positive probability.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }

    /// True when every positive entry holds the same value (this includes
    /// point masses).
    pub fn is_uniform_on_support(&self) -> bool {
        let mut positive = self.probs.iter().filter(|p| **p > 0.0);
        match positive.next() {
            Some(first) => positive.all(|p| p == first),
            None => false,
        }
    }

    /// Probability of category `k` (1-based); zero beyond the last category.
    pub fn get(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.probs.get((k - 1) as usize).copied().unwrap_or(0.0)
    }
}

impl<'de> Deserialize<'de> for DiscretePmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        DiscretePmf::new(probs).map_err(serde::de::Error::custom)
    }
}

/// Sparse category counts of an iid sample.
///
/// Zero counts are never stored and the total `n` is at least one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleCounts {
    counts: BTreeMap<u64, u64>,
    n: u64,
}

impl SampleCounts {
    /// Canonicalizes a category → count map (zero entries dropped).
    pub fn from_map(counts: BTreeMap<u64, u64>) -> Result<Self> {
        if counts.contains_key(&0) {
            return domain("category labels start at 1");
        }
        let counts: BTreeMap<u64, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let n = counts
            .values()
            .try_fold(0u64, |acc, c| acc.checked_add(*c))
            .ok_or_else(|| GseError::Domain("total count overflows u64".into()))?;
        if n == 0 {
            return domain("sample has no observations");
        }
        Ok(SampleCounts { counts, n })
    }

    /// Tallies a sequence of observed categories.
    pub fn from_observations<I: IntoIterator<Item = u64>>(obs: I) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for k in obs {
            *counts.entry(k).or_insert(0) += 1;
        }
        SampleCounts::from_map(counts)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of distinct observed categories.
    pub fn support(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, k: u64) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// `(category, count)` in ascending category order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(k, c)| (*k, *c))
    }
}

/// A parametric source distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub enum AnalyticDistribution {
    /// `p_k = k^{-s} / ζ(s)`, `s > 1`.
    Zeta {
        s: f64,
    },
    /// `p_k = (1 - q) q^{k-1}`, `0 < q < 1`.
    Geometric {
        q: f64,
    },
    /// `p_k = 1/K` for `k ≤ K`.
    UniformFinite {
        k: usize,
    },
    CustomFinite(DiscretePmf),
}

/// JSON form: `{"kind":"zeta","s":1.5}`, `{"kind":"geometric","q":0.5}`,
/// `{"kind":"uniform","K":10}`, `{"kind":"custom","probs":[...]}`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DistSpec {
    Zeta {
        s: f64,
    },
    Geometric {
        q: f64,
    },
    Uniform {
        #[serde(rename = "K")]
        k: usize,
    },
    Custom {
        probs: Vec<f64>,
    },
}

impl TryFrom<DistSpec> for AnalyticDistribution {
    type Error = GseError;

    fn try_from(spec: DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Zeta { s } => AnalyticDistribution::zeta(s),
            DistSpec::Geometric { q } => AnalyticDistribution::geometric(q),
            DistSpec::Uniform { k } => AnalyticDistribution::uniform(k),
            DistSpec::Custom { probs } => AnalyticDistribution::custom(probs),
        }
    }
}

impl From<AnalyticDistribution> for DistSpec {
    fn from(d: AnalyticDistribution) -> Self {
        match d {
            AnalyticDistribution::Zeta { s } => DistSpec::Zeta { s },
            AnalyticDistribution::Geometric { q } => DistSpec::Geometric { q },
            AnalyticDistribution::UniformFinite { k } => DistSpec::Uniform { k },
            AnalyticDistribution::CustomFinite(p) => DistSpec::Custom { probs: p.probs },
        }
    }
}

impl fmt::Display for AnalyticDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticDistribution::Zeta { s } => write!(f, "Zeta(s={s})"),
            AnalyticDistribution::Geometric { q } => write!(f, "Geometric(q={q})"),
            AnalyticDistribution::UniformFinite { k } => write!(f, "Uniform(K={k})"),
            AnalyticDistribution::CustomFinite(p) => write!(f, "Custom(K={})", p.len()),
        }
    }
}

impl AnalyticDistribution {
    pub fn zeta(s: f64) -> Result<Self> {
        let d = AnalyticDistribution::Zeta { s };
        d.validate()?;
        Ok(d)
    }

    pub fn geometric(q: f64) -> Result<Self> {
        let d = AnalyticDistribution::Geometric { q };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        let d = AnalyticDistribution::UniformFinite { k };
        d.validate()?;
        Ok(d)
    }

    pub fn custom(probs: Vec<f64>) -> Result<Self> {
        Ok(AnalyticDistribution::CustomFinite(DiscretePmf::new(probs)?))
    }

    /// Parses the JSON distribution spec.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GseError::Input(format!("distribution spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution spec serializes")
    }

    /// Re-checks the family invariants (public fields can be set directly).
    pub fn validate(&self) -> Result<()> {
        match self {
            AnalyticDistribution::Zeta { s } if !(*s > 1.0) || !s.is_finite() => Err(
                GseError::InvalidDistribution(format!("zeta requires finite s > 1, got {s}")),
            ),
            AnalyticDistribution::Geometric { q } if !(*q > 0.0 && *q < 1.0) => Err(
                GseError::InvalidDistribution(format!("geometric requires 0 < q < 1, got {q}")),
            ),
            AnalyticDistribution::UniformFinite { k } if *k == 0 => Err(
                GseError::InvalidDistribution("uniform support must be positive".into()),
            ),
            AnalyticDistribution::CustomFinite(p) => DiscretePmf::new(p.probs.clone()).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Number of categories for finite families.
    pub fn support_len(&self) -> Option<usize> {
        match self {
            AnalyticDistribution::UniformFinite { k } => Some(*k),
            AnalyticDistribution::CustomFinite(p) => Some(p.len()),
            _ => None,
        }
    }

    /// The explicit probability vector of a finite family.
    pub fn finite_pmf(&self) -> Option<DiscretePmf> {
        match self {
            AnalyticDistribution::UniformFinite { k } => DiscretePmf::uniform(*k).ok(),
            AnalyticDistribution::CustomFinite(p) => Some(p.clone()),
            _ => None,
        }
    }

    /// `P(X = k)`.
    pub fn pmf_at(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return domain("categories start at 1");
        }
        self.validate()?;
        Ok(match self {
            AnalyticDistribution::Zeta { s } => (k as f64).powf(-s) / riemann_zeta(*s)?,
            AnalyticDistribution::Geometric { q } => (1.0 - q) * q.powf((k - 1) as f64),
            AnalyticDistribution::UniformFinite { k: big_k } => {
                if k as usize <= *big_k {
                    1.0 / *big_k as f64
                } else {
                    0.0
                }
            }
            AnalyticDistribution::CustomFinite(p) => p.get(k),
        })
    }

    /// `Σ_k p_k^m`, the probability that `m` iid draws all coincide.
    pub fn collision_mass(&self, m: u32) -> Result<f64> {
        if m == 0 {
            return domain("collision order must be at least 1");
        }
        self.validate()?;
        let mf = m as f64;
        Ok(match self {
            AnalyticDistribution::Zeta { s } => riemann_zeta(mf * s)? / riemann_zeta(*s)?.powf(mf),
            AnalyticDistribution::Geometric { q } => (1.0 - q).powf(mf) / (1.0 - q.powf(mf)),
            AnalyticDistribution::UniformFinite { k } => (*k as f64).powf(1.0 - mf),
            AnalyticDistribution::CustomFinite(p) => p.probs().iter().map(|x| x.powf(mf)).sum(),
        })
    }

    /// Smallest convenient `K` such that the neglected tails `k > K` of both
    /// `Σ p_{m,k} |ln p_{m,k}|` and the asymptotic-variance series are below
    /// `eps`. Finite families return their support size.
    pub fn truncation_index(&self, m: u32, eps: f64) -> Result<u64> {
        if m == 0 {
            return domain("collision order must be at least 1");
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return domain(format!("tolerance must be positive, got {eps}"));
        }
        self.validate()?;
        match self {
            AnalyticDistribution::UniformFinite { k } => Ok(*k as u64),
            AnalyticDistribution::CustomFinite(p) => Ok(p.len() as u64),
            AnalyticDistribution::Geometric { q } => {
                let tails = GeometricTails::new(*q, m);
                search_truncation(1, |k| tails.entropy(k) < eps && tails.variance(k) < eps)
                    .ok_or_else(|| self.non_convergent(m, eps))
            }
            AnalyticDistribution::Zeta { s } => {
                let tails = ZetaTails::new(*s, m)?;
                search_truncation(tails.monotone_from(), |k| {
                    tails.entropy(k) < eps && tails.variance(k) < eps
                })
                .ok_or_else(|| self.non_convergent(m, eps))
            }
        }
    }

    fn non_convergent(&self, m: u32, eps: f64) -> GseError {
        GseError::NonConvergence(format!(
            "order-{m} series for {self} need more than {MAX_TRUNCATION} terms to reach tolerance {eps}"
        ))
    }

    /// Prepared sampler for repeated draws.
    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let inner = match self {
            AnalyticDistribution::Zeta { s } => SamplerKind::Zeta(
                Zeta::new(*s).map_err(|e| GseError::InvalidDistribution(e.to_string()))?,
            ),
            AnalyticDistribution::Geometric { q } => SamplerKind::Geometric(
                Geometric::new(1.0 - q)
                    .map_err(|e| GseError::InvalidDistribution(e.to_string()))?,
            ),
            AnalyticDistribution::UniformFinite { k } => SamplerKind::Uniform(*k as u64),
            AnalyticDistribution::CustomFinite(p) => SamplerKind::Alias(
                WeightedAliasIndex::new(p.probs().to_vec())
                    .map_err(|e| GseError::InvalidDistribution(e.to_string()))?,
                p.len(),
            ),
        };
        Ok(Sampler { inner })
    }

    /// `n` iid draws; a deterministic function of `(self, n, seed)`.
    pub fn sample(&self, n: u64, seed: u64) -> Result<SampleCounts> {
        let mut rng = rng_from_seed(seed);
        self.sampler()?.sample_counts(n, &mut rng)
    }
}

/// Draws categories from an [`AnalyticDistribution`].
///
/// Zeta uses Devroye's rejection sampler for Zipf-type laws; geometric uses
/// its inversion; finite families use the alias method.
#[derive(Clone, Debug)]
pub struct Sampler {
    inner: SamplerKind,
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Zeta(Zeta<f64>),
    Geometric(Geometric),
    Uniform(u64),
    Alias(WeightedAliasIndex<f64>, usize),
}

impl Sampler {
    /// One draw. Zeta draws beyond `u64::MAX` saturate.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.inner {
            SamplerKind::Zeta(z) => {
                let x: f64 = z.sample(rng);
                // `as` saturates for values above u64::MAX and for +inf.
                x as u64
            }
            SamplerKind::Geometric(g) => g.sample(rng).saturating_add(1),
            SamplerKind::Uniform(k) => rng.random_range(1..=*k),
            SamplerKind::Alias(a, _) => a.sample(rng) as u64 + 1,
        }
    }

    pub fn sample_counts<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Result<SampleCounts> {
        if n == 0 {
            return domain("sample size must be at least 1");
        }
        let dense_len = match &self.inner {
            SamplerKind::Uniform(k) => Some(*k as usize),
            SamplerKind::Alias(_, k) => Some(*k),
            _ => None,
        };
        match dense_len {
            Some(k) if k <= 1 << 16 => {
                let mut tally = vec![0u64; k];
                for _ in 0..n {
                    tally[(self.draw(rng) - 1) as usize] += 1;
                }
                let counts = tally
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| *c > 0)
                    .map(|(i, c)| (i as u64 + 1, c))
                    .collect();
                SampleCounts::from_map(counts)
            }
            _ => {
                let mut draws: Vec<u64> = (0..n).map(|_| self.draw(rng)).collect();
                draws.sort_unstable();
                SampleCounts::from_observations(draws)
            }
        }
    }
}

/// Doubling then bisection on a predicate that holds for all large `K`.
fn search_truncation(start: u64, holds: impl Fn(u64) -> bool) -> Option<u64> {
    let start = start.max(1);
    if holds(start) {
        return Some(start);
    }
    let mut lo = start;
    let mut hi = start.checked_mul(2)?;
    while !holds(hi) {
        if hi >= MAX_TRUNCATION {
            return None;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Closed-form tail sums for the geometric family.
///
/// The order-`m` collision distribution is geometric with ratio `ρ = q^m`:
/// `p_{m,k} = (1-ρ) ρ^j` with `j = k - 1`, so `|ln p_{m,k}| = A + B j`.
struct GeometricTails {
    rho: f64,
    a: f64,
    b: f64,
    h: f64,
    var_ratio: f64,
    var_scale: f64,
}

impl GeometricTails {
    fn new(q: f64, m: u32) -> Self {
        let mf = m as f64;
        let rho = q.powf(mf);
        let a = -(1.0 - rho).ln();
        let b = -mf * q.ln();
        GeometricTails {
            rho,
            a,
            b,
            h: a + b * rho / (1.0 - rho),
            var_ratio: q.powf(2.0 * mf - 1.0),
            var_scale: mf * mf * (1.0 - rho).powi(2) / (1.0 - q),
        }
    }

    /// `Σ_{k>K} p_{m,k} |ln p_{m,k}|`.
    fn entropy(&self, k: u64) -> f64 {
        let kf = k as f64;
        let rk = self.rho.powf(kf);
        rk * (self.a + self.b * kf) + self.b * rk * self.rho / (1.0 - self.rho)
    }

    /// Upper bound on `Σ_{k>K} (m²/p_k) p_{m,k}² (ln p_{m,k} + H_m)²` using
    /// `(H - A - Bj)² ≤ (|H - A| + Bj)²`.
    fn variance(&self, k: u64) -> f64 {
        let x = self.var_ratio;
        let kf = k as f64;
        let xk = x.powf(kf);
        let om = 1.0 - x;
        let t0 = xk / om;
        let t1 = xk * (kf / om + x / (om * om));
        let t2 = xk * (kf * kf / om + 2.0 * kf * x / (om * om) + x * (1.0 + x) / (om * om * om));
        let d = (self.h - self.a).abs();
        self.var_scale * (d * d * t0 + 2.0 * d * self.b * t1 + self.b * self.b * t2)
    }
}

/// Integral tail bounds for the Zeta family, where
/// `p_{m,k} = k^{-a} / ζ(a)` with `a = m s`.
struct ZetaTails {
    a: f64,
    c: f64,
    ln_z: f64,
    z: f64,
    d: f64,
    var_scale: f64,
}

impl ZetaTails {
    fn new(s: f64, m: u32) -> Result<Self> {
        let mf = m as f64;
        let a = mf * s;
        let z = riemann_zeta(a)?;
        let d = a * log_moment(a, 1)? / z;
        Ok(ZetaTails {
            a,
            c: (2.0 * mf - 1.0) * s,
            ln_z: z.ln(),
            z,
            d,
            var_scale: mf * mf * riemann_zeta(s)? / (z * z),
        })
    }

    /// First `K` from which both summands are decreasing, so that
    /// `Σ_{k>K} f(k) ≤ ∫_K^∞ f`.
    fn monotone_from(&self) -> u64 {
        let l = ((1.0 - self.ln_z) / self.a).max(2.0 / self.c).max(0.0);
        l.exp().ceil().min(MAX_TRUNCATION as f64) as u64
    }

    /// `∫_K^∞ x^{-a} (a ln x + ln ζ(a)) / ζ(a) dx`.
    fn entropy(&self, k: u64) -> f64 {
        let x = k as f64;
        (self.a * tail_integral(self.a, 1, x) + self.ln_z * tail_integral(self.a, 0, x)) / self.z
    }

    /// `m² ζ(s)/ζ(a)² ∫_K^∞ x^{-c} (a² ln² x + d²) dx` with `c = (2m-1)s`,
    /// bounding `(a ln x - d)²` from above.
    fn variance(&self, k: u64) -> f64 {
        let x = k as f64;
        self.var_scale
            * (self.a * self.a * tail_integral(self.c, 2, x)
                + self.d * self.d * tail_integral(self.c, 0, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pmf_examples() {
        let z2 = AnalyticDistribution::zeta(2.0).unwrap();
        assert!((z2.pmf_at(1).unwrap() - 6.0 / (PI * PI)).abs() < 1e-12);
        let u4 = AnalyticDistribution::uniform(4).unwrap();
        assert_eq!(u4.pmf_at(3).unwrap(), 0.25);
        assert_eq!(u4.pmf_at(5).unwrap(), 0.0);
        let z15 = AnalyticDistribution::zeta(1.5).unwrap();
        assert!((z15.pmf_at(1).unwrap() - 0.382_793).abs() < 1e-6);
        let g = AnalyticDistribution::geometric(0.5).unwrap();
        assert_eq!(g.pmf_at(1).unwrap(), 0.5);
        assert_eq!(g.pmf_at(3).unwrap(), 0.125);
    }

    #[test]
    fn pmf_at_zero_is_domain_error() {
        let g = AnalyticDistribution::geometric(0.5).unwrap();
        assert!(matches!(g.pmf_at(0), Err(GseError::Domain(_))));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(AnalyticDistribution::zeta(1.0).is_err());
        assert!(AnalyticDistribution::zeta(f64::INFINITY).is_err());
        assert!(AnalyticDistribution::geometric(0.0).is_err());
        assert!(AnalyticDistribution::geometric(1.0).is_err());
        assert!(AnalyticDistribution::uniform(0).is_err());
        assert!(AnalyticDistribution::custom(vec![0.5, 0.6]).is_err());
        assert!(AnalyticDistribution::custom(vec![-0.1, 1.1]).is_err());
        assert!(AnalyticDistribution::custom(vec![0.0, 1.0]).is_ok());
        assert!(AnalyticDistribution::Zeta { s: 0.9 }.pmf_at(1).is_err());
    }

    #[test]
    fn json_round_trip_and_errors() {
        for text in [
            r#"{"kind":"zeta","s":1.5}"#,
            r#"{"kind":"geometric","q":0.5}"#,
            r#"{"kind":"uniform","K":10}"#,
            r#"{"kind":"custom","probs":[0.3,0.7]}"#,
        ] {
            let d = AnalyticDistribution::from_json(text).unwrap();
            assert_eq!(d.to_json(), text);
        }
        assert!(AnalyticDistribution::from_json(r#"{"kind":"zeta","s":0.5}"#).is_err());
        assert!(AnalyticDistribution::from_json(r#"{"kind":"poisson","l":1}"#).is_err());
        assert!(AnalyticDistribution::from_json(r#"{"kind":"uniform","K":3,"x":1}"#).is_err());
        assert!(AnalyticDistribution::from_json("not json").is_err());
    }

    #[test]
    fn collision_mass_matches_direct_sums() {
        let g = AnalyticDistribution::geometric(0.3).unwrap();
        let direct: f64 = (1..200).map(|k| g.pmf_at(k).unwrap().powi(3)).sum();
        assert!((g.collision_mass(3).unwrap() - direct).abs() < 1e-15);
        let z = AnalyticDistribution::zeta(2.0).unwrap();
        let direct: f64 = (1..200_000).map(|k| z.pmf_at(k).unwrap().powi(2)).sum();
        assert!((z.collision_mass(2).unwrap() - direct).abs() < 1e-12);
        let u = AnalyticDistribution::uniform(5).unwrap();
        assert!((u.collision_mass(2).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn truncation_finite_families() {
        let u = AnalyticDistribution::uniform(10).unwrap();
        for m in 1..5 {
            assert_eq!(u.truncation_index(m, 1e-3).unwrap(), 10);
            assert_eq!(u.truncation_index(m, 1e-14).unwrap(), 10);
        }
        let c = AnalyticDistribution::custom(vec![0.2, 0.8]).unwrap();
        assert_eq!(c.truncation_index(2, 1e-10).unwrap(), 2);
    }

    #[test]
    fn truncation_rejects_bad_arguments() {
        let z = AnalyticDistribution::zeta(1.5).unwrap();
        assert!(z.truncation_index(0, 1e-10).is_err());
        assert!(z.truncation_index(2, 0.0).is_err());
        assert!(z.truncation_index(2, f64::NAN).is_err());
    }

    /// Sum of entropy and variance series terms over `k ∈ (from, to]`.
    fn tail_terms(d: &AnalyticDistribution, m: u32, from: u64, to: u64) -> (f64, f64) {
        let mf = m as f64;
        let mass = d.collision_mass(m).unwrap();
        // exact H_m for the variance terms: sum far enough that the rest is negligible
        let h: f64 = (1..=to)
            .map(|k| {
                let p = d.pmf_at(k).unwrap();
                let q = p.powf(mf) / mass;
                if q > 0.0 {
                    -q * q.ln()
                } else {
                    0.0
                }
            })
            .sum();
        let mut ent = 0.0;
        let mut var = 0.0;
        for k in from + 1..=to {
            let p = d.pmf_at(k).unwrap();
            if p == 0.0 {
                continue;
            }
            let q = p.powf(mf) / mass;
            if q == 0.0 {
                continue;
            }
            ent += -q * q.ln();
            var += mf * mf / p * (q * (q.ln() + h)).powi(2);
        }
        (ent, var)
    }

    #[test]
    fn zeta_truncation_self_verifies() {
        let z = AnalyticDistribution::zeta(1.5).unwrap();
        let eps = 1e-10;
        let k = z.truncation_index(2, eps).unwrap();
        let (ent, var) = tail_terms(&z, 2, k, 11 * k);
        assert!(ent < eps && var < eps, "K={k}: {ent} {var}");
        // not absurdly conservative: a quarter of K leaves too much mass
        let (ent_short, _) = tail_terms(&z, 2, k / 4, 11 * k);
        assert!(ent_short > eps, "K={k} is far from tight");
    }

    #[test]
    fn geometric_truncation_self_verifies() {
        for &(q, m, eps) in &[(0.5, 2u32, 1e-12), (0.9, 1, 1e-10), (0.2, 3, 1e-12)] {
            let g = AnalyticDistribution::geometric(q).unwrap();
            let k = g.truncation_index(m, eps).unwrap();
            let (ent, var) = tail_terms(&g, m, k, 11 * k);
            assert!(ent < eps && var < eps, "q={q} m={m} K={k}");
        }
        // geometric tail of 2^{-2k}: about 20 terms reach 1e-12
        let k = AnalyticDistribution::geometric(0.5)
            .unwrap()
            .truncation_index(2, 1e-12)
            .unwrap();
        assert!((15..=30).contains(&k), "K={k}");
    }

    #[test]
    fn heavy_tailed_shannon_series_reports_non_convergence() {
        let z = AnalyticDistribution::zeta(1.5).unwrap();
        assert!(matches!(
            z.truncation_index(1, 1e-10),
            Err(GseError::NonConvergence(_))
        ));
    }

    #[test]
    fn degenerate_uniform_sample() {
        let u = AnalyticDistribution::uniform(1).unwrap();
        let c = u.sample(5, 99).unwrap();
        assert_eq!(c.n(), 5);
        assert_eq!(c.get(1), 5);
        assert_eq!(c.support(), 1);
    }

    #[test]
    fn sample_is_reproducible() {
        let z = AnalyticDistribution::zeta(1.5).unwrap();
        assert_eq!(z.sample(1000, 3).unwrap(), z.sample(1000, 3).unwrap());
        assert_ne!(z.sample(1000, 3).unwrap(), z.sample(1000, 4).unwrap());
        assert!(z.sample(0, 3).is_err());
    }

    fn head_frequency_within_3se(d: &AnalyticDistribution, seed: u64) {
        let n = 100_000u64;
        let c = d.sample(n, seed).unwrap();
        let p = d.pmf_at(1).unwrap();
        let freq = c.get(1) as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "{d}: {freq} vs {p}");
    }

    #[test]
    fn head_frequencies() {
        head_frequency_within_3se(&AnalyticDistribution::zeta(1.5).unwrap(), 11);
        head_frequency_within_3se(&AnalyticDistribution::geometric(0.5).unwrap(), 12);
        head_frequency_within_3se(&AnalyticDistribution::custom(vec![0.3, 0.7]).unwrap(), 13);
    }

    #[test]
    fn sample_counts_canonical() {
        let mut m = BTreeMap::new();
        m.insert(3, 0);
        m.insert(4, 2);
        let c = SampleCounts::from_map(m).unwrap();
        assert_eq!(c.support(), 1);
        assert_eq!(c.n(), 2);
        assert!(SampleCounts::from_map(BTreeMap::new()).is_err());
        assert!(SampleCounts::from_observations([0u64]).is_err());
    }

    #[test]
    fn uniform_on_support_detection() {
        assert!(DiscretePmf::new(vec![0.5, 0.0, 0.5])
            .unwrap()
            .is_uniform_on_support());
        assert!(DiscretePmf::new(vec![1.0]).unwrap().is_uniform_on_support());
        assert!(!DiscretePmf::new(vec![0.3, 0.7])
            .unwrap()
            .is_uniform_on_support());
    }
}
