use gse_core::dist::{AnalyticDistribution, DiscretePmf, SampleCounts};
use gse_core::estimate::{
    confidence_interval, empirical_pmf, gse_plugin, sigma_hat_sq, sigma_sq_true, GseEstimate,
};
use gse_core::gse::{cdotc, gse, gse_analytic, shannon_entropy};
use gse_core::oracle::{analytic_gradient, delta_variance_oracle, rel_close};
use gse_core::rng::replicate_rng;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn pmf_strategy(allow_zeros: bool) -> impl Strategy<Value = DiscretePmf> {
    let lo = if allow_zeros { 0.0 } else { 1e-3 };
    prop::collection::vec(lo..1.0f64, 1..16)
        .prop_filter_map("positive mass", |w| DiscretePmf::from_weights(&w).ok())
}

fn counts_strategy() -> impl Strategy<Value = SampleCounts> {
    prop::collection::btree_map(1u64..50, 1u64..40, 1..12)
        .prop_map(|m| SampleCounts::from_map(m).unwrap())
}

/// Naive `p^m / Σ p^m`, valid where nothing underflows.
fn naive_cdotc(p: &[f64], m: u32) -> Vec<f64> {
    let w: Vec<f64> = p.iter().map(|x| x.powi(m as i32)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cdotc_is_normalized(p in pmf_strategy(true), m in 1u32..=6) {
        let c = cdotc(&p, m).unwrap();
        let total: f64 = c.probs().probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (x, q) in p.probs().iter().zip(c.probs().probs()) {
            prop_assert_eq!(*x > 0.0, *q > 0.0);
        }
    }

    #[test]
    fn cdotc_composes(p in pmf_strategy(true)) {
        let twice = cdotc(cdotc(&p, 2).unwrap().probs(), 2).unwrap();
        let once = cdotc(&p, 4).unwrap();
        for (a, b) in twice.probs().probs().iter().zip(once.probs().probs()) {
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn higher_orders_concentrate(p in pmf_strategy(true), m in 1u32..6) {
        let c = cdotc(&p, m + 1).unwrap();
        let max_p = p.probs().iter().copied().fold(0.0, f64::max);
        let max_q = c.probs().probs().iter().copied().fold(0.0, f64::max);
        prop_assert!(max_q >= max_p - 1e-15);
        prop_assert!(gse(&p, m + 1).unwrap() <= gse(&p, m).unwrap() + 1e-12);
    }

    #[test]
    fn order_one_is_shannon(p in pmf_strategy(true)) {
        prop_assert_eq!(gse(&p, 1).unwrap(), shannon_entropy(&p).unwrap());
        let direct: f64 = p.probs().iter().filter(|x| **x > 0.0).map(|x| -x * x.ln()).sum();
        prop_assert!((gse(&p, 1).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn permutation_invariant(p in pmf_strategy(true), m in 1u32..5, rot in 0usize..16) {
        let mut v = p.probs().to_vec();
        let r = rot % v.len();
        v.rotate_left(r);
        v.reverse();
        let q = DiscretePmf::new(v).unwrap();
        prop_assert!((gse(&p, m).unwrap() - gse(&q, m).unwrap()).abs() < 1e-12);
        let (a, b) = (sigma_sq_true(&p, m).unwrap(), sigma_sq_true(&q, m).unwrap());
        prop_assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }

    #[test]
    fn log_space_matches_naive(p in pmf_strategy(false), m in 1u32..=6) {
        let c = cdotc(&p, m).unwrap();
        for (a, b) in c.probs().probs().iter().zip(naive_cdotc(p.probs(), m)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_has_mean_zero(p in pmf_strategy(false), m in 1u32..5) {
        // unconstrained g_k = -(m p_{m,k}/p_k)(ln p_{m,k} + H_m); Σ p_k g_k = 0
        let c = cdotc(&p, m).unwrap();
        let h = c.entropy();
        let s: f64 = p.probs().iter().zip(c.probs().probs()).zip(c.log_probs())
            .map(|((pk, q), lq)| pk * (-(m as f64) * q / pk * (lq + h)))
            .sum();
        prop_assert!(s.abs() < 1e-12, "{}", s);
    }

    #[test]
    fn quadratic_form_matches_closed_form(p in pmf_strategy(false), m in 1u32..5) {
        prop_assume!(p.len() >= 2);
        let a = delta_variance_oracle(&p, m).unwrap();
        let b = sigma_sq_true(&p, m).unwrap();
        prop_assert!(rel_close(a, b, 1e-8) || (a.abs() < 1e-13 && b.abs() < 1e-13), "{} vs {}", a, b);
        prop_assert_eq!(analytic_gradient(&p, m).unwrap().len(), p.len() - 1);
    }

    #[test]
    fn estimate_bounds(c in counts_strategy(), m in 1u32..5) {
        let est = GseEstimate::from_counts(&c, m).unwrap();
        prop_assert!(est.h_hat >= 0.0);
        prop_assert!(est.h_hat <= (est.support_observed as f64).ln() + 1e-12);
        prop_assert!(est.sigma_hat >= 0.0);
        let uniform = empirical_pmf(&c).pmf.is_uniform_on_support();
        prop_assert_eq!(est.sigma_hat == 0.0, uniform);
        let ci = confidence_interval(&c, m, 0.05).unwrap();
        prop_assert!(ci.lower <= ci.upper);
        prop_assert!(((ci.lower + ci.upper) / 2.0 - est.h_hat).abs() < 1e-12);
        prop_assert_eq!(ci.degenerate, est.sigma_hat == 0.0);
    }

    #[test]
    fn relabeling_does_not_change_estimates(c in counts_strategy(), m in 1u32..5, shift in 1u64..1000) {
        let relabeled: BTreeMap<u64, u64> = c.iter().map(|(k, n)| ((k * 7919) % 100_003 + shift, n)).collect();
        let r = SampleCounts::from_map(relabeled).unwrap();
        prop_assume!(r.support() == c.support());
        prop_assert_eq!(gse_plugin(&c, m).unwrap(), gse_plugin(&r, m).unwrap());
        prop_assert_eq!(sigma_hat_sq(&c, m).unwrap(), sigma_hat_sq(&r, m).unwrap());
    }
}

#[test]
fn family_pmfs_are_sub_stochastic() {
    let fams = [
        AnalyticDistribution::zeta(1.5).unwrap(),
        AnalyticDistribution::zeta(4.0).unwrap(),
        AnalyticDistribution::geometric(0.9).unwrap(),
        AnalyticDistribution::uniform(7).unwrap(),
        AnalyticDistribution::custom(vec![0.1, 0.0, 0.9]).unwrap(),
    ];
    for d in &fams {
        let mut partial = 0.0;
        for k in 1..=20_000u64 {
            let p = d.pmf_at(k).unwrap();
            assert!(p >= 0.0);
            partial += p;
            assert!(partial <= 1.0 + 1e-12, "{d}: partial sum {partial} at {k}");
        }
    }
}

/// Pearson statistic over categories 1..=20 plus a pooled tail bin.
fn chi_square_head(d: &AnalyticDistribution, n: u64, seed: u64) -> (f64, usize) {
    let counts = d.sample(n, seed).unwrap();
    let nf = n as f64;
    let mut stat = 0.0;
    let mut head_mass = 0.0;
    let mut head_count = 0;
    let mut bins = 0;
    for k in 1..=20u64 {
        let p = d.pmf_at(k).unwrap();
        if p == 0.0 {
            continue;
        }
        let obs = counts.get(k) as f64;
        stat += (obs - nf * p).powi(2) / (nf * p);
        head_mass += p;
        head_count += counts.get(k);
        bins += 1;
    }
    let tail_p = 1.0 - head_mass;
    if tail_p > 1e-9 {
        let obs = (n - head_count) as f64;
        stat += (obs - nf * tail_p).powi(2) / (nf * tail_p);
        bins += 1;
    }
    (stat, bins - 1)
}

#[test]
fn sampler_goodness_of_fit() {
    // χ²_{0.999} quantiles by degrees of freedom
    let critical = |df: usize| match df {
        4 => 18.467,
        9 => 27.877,
        19 => 43.820,
        20 => 45.315,
        _ => panic!("no critical value for df={df}"),
    };
    let cases = [
        (AnalyticDistribution::zeta(1.5).unwrap(), 101),
        (AnalyticDistribution::zeta(2.5).unwrap(), 102),
        (AnalyticDistribution::geometric(0.8).unwrap(), 103),
        (AnalyticDistribution::uniform(10).unwrap(), 104),
        (
            AnalyticDistribution::custom(vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap(),
            105,
        ),
    ];
    for (d, seed) in &cases {
        let (stat, df) = chi_square_head(d, 100_000, *seed);
        assert!(stat < critical(df), "{d}: χ² = {stat} with df = {df}");
    }
}

#[test]
fn sampling_independent_of_thread_count() {
    let d = AnalyticDistribution::zeta(1.5).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| gse_core::oracle::mc_replicates(&d, 2, 500, 64, 77, 1e-10).unwrap())
    };
    assert_eq!(run(1), run(4));
    let sampler = d.sampler().unwrap();
    let a = sampler
        .sample_counts(300, &mut replicate_rng(5, 2))
        .unwrap();
    let b = sampler
        .sample_counts(300, &mut replicate_rng(5, 2))
        .unwrap();
    assert_eq!(a, b);
}

#[test]
fn plugin_is_consistent() {
    let d = AnalyticDistribution::custom(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let pmf = d.finite_pmf().unwrap();
    let h = gse(&pmf, 2).unwrap();
    let s2 = sigma_sq_true(&pmf, 2).unwrap();
    // five asymptotic standard errors, shrinking like 1/√n
    for n in [1_000u64, 10_000, 100_000] {
        let tol = 5.0 * (s2 / n as f64).sqrt();
        let c = d.sample(n, 4242 + n).unwrap();
        let h_hat = gse_plugin(&c, 2).unwrap();
        let s_hat = sigma_hat_sq(&c, 2).unwrap();
        assert!((h_hat - h).abs() < tol, "n={n}: {h_hat} vs {h}");
        assert!(
            (s_hat - s2).abs() < 2.0 * s2 * tol,
            "n={n}: {s_hat} vs {s2}"
        );
    }
    assert!((gse_analytic(&d, 2, 1e-10).unwrap() - h).abs() < 1e-15);
}

#[test]
fn half_width_scales_as_inverse_root_n() {
    let d = AnalyticDistribution::custom(vec![0.3, 0.7]).unwrap();
    for (n, seed) in [(2_000u64, 1u64), (10_000, 2), (50_000, 3)] {
        let a = confidence_interval(&d.sample(n, seed).unwrap(), 2, 0.05).unwrap();
        let b = confidence_interval(&d.sample(4 * n, seed + 100).unwrap(), 2, 0.05).unwrap();
        let ratio = a.half_width() / b.half_width();
        assert!((ratio - 2.0).abs() <= 0.15 * 2.0, "n={n}: ratio {ratio}");
    }
}
