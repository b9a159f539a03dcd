//! Monte Carlo coverage of the asymptotic confidence interval.
//!
//! Each replicate draws a fresh sample, builds `Ĥ_m ± z_{α/2} σ̂_m/√n` and
//! records whether the true `H_m` lies inside (inclusive). Replicate `r` of
//! grid point `n` uses ChaCha stream `r` of `derive_seed(seed, n)`, so sweeps
//! are byte-identical for any worker count.

use std::fmt::Write as _;
use std::io;

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{AnalyticDistribution, Sampler};
use crate::error::{domain, GseError, Result};
use crate::estimate::{z_critical, GseEstimate};
use crate::gse::gse_analytic;
use crate::rng::{derive_seed, replicate_rng};

/// Replicates per grid point in the reference protocol.
pub const DEFAULT_REPS: usize = 5000;

/// `10, 20, …, 1000`.
pub fn default_grid() -> Vec<u64> {
    (1..=100).map(|i| 10 * i).collect()
}

/// Parses `start:stop:step` (inclusive of `stop` when reached) or a comma
/// separated list.
pub fn parse_grid(text: &str) -> Result<Vec<u64>> {
    let bad = |msg: &str| GseError::Input(format!("grid `{text}`: {msg}"));
    let grid: Vec<u64> = if text.contains(':') {
        let parts: Vec<u64> = text
            .split(':')
            .map(|p| {
                p.trim()
                    .parse::<u64>()
                    .map_err(|_| bad("expected integers"))
            })
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected start:stop:step"));
        };
        if step == 0 {
            return Err(bad("step must be positive"));
        }
        (start..=stop).step_by(step as usize).collect()
    } else {
        text.split(',')
            .map(|p| {
                p.trim()
                    .parse::<u64>()
                    .map_err(|_| bad("expected integers"))
            })
            .collect::<Result<_>>()?
    };
    validate_grid(&grid)?;
    Ok(grid)
}

fn validate_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() {
        return domain("sample-size grid is empty");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain("sample-size grid must be strictly increasing");
    }
    if grid[0] < 2 {
        return domain("sample sizes must be at least 2");
    }
    Ok(())
}

/// Coverage at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveragePoint {
    pub n: u64,
    pub m: u32,
    pub reps: usize,
    pub hits: usize,
    pub coverage: f64,
    /// Binomial standard error `sqrt(c (1 - c) / reps)`.
    pub se: f64,
    pub seed: u64,
}

impl CoveragePoint {
    fn new(n: u64, m: u32, reps: usize, hits: usize, seed: u64) -> Self {
        let coverage = hits as f64 / reps as f64;
        CoveragePoint {
            n,
            m,
            reps,
            hits,
            coverage,
            se: (coverage * (1.0 - coverage) / reps as f64).sqrt(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub dist: AnalyticDistribution,
    pub m: u32,
    pub alpha: f64,
    pub true_gse: f64,
    pub points: Vec<CoveragePoint>,
}

fn check_args(m: u32, n: u64, reps: usize, alpha: f64) -> Result<()> {
    if m < 1 {
        return domain("GSE order must be at least 1");
    }
    if n < 2 {
        return domain("sample size must be at least 2");
    }
    if reps < 1 {
        return domain("need at least one replicate");
    }
    z_critical(alpha).map(|_| ())
}

fn count_hits(
    sampler: &Sampler,
    truth: f64,
    m: u32,
    n: u64,
    reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<usize> {
    let hits = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let counts = sampler.sample_counts(n, &mut rng)?;
            let ci = GseEstimate::from_counts(&counts, m)?.interval(alpha)?;
            Ok(usize::from(ci.contains(truth)))
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(hits.into_iter().sum())
}

/// Coverage proportion at sample size `n`.
pub fn coverage_experiment(
    dist: &AnalyticDistribution,
    m: u32,
    n: u64,
    reps: usize,
    alpha: f64,
    seed: u64,
    eps: f64,
) -> Result<CoveragePoint> {
    check_args(m, n, reps, alpha)?;
    let truth = gse_analytic(dist, m, eps)?;
    let hits = count_hits(&dist.sampler()?, truth, m, n, reps, alpha, seed)?;
    Ok(CoveragePoint::new(n, m, reps, hits, seed))
}

/// One [`coverage_experiment`] per grid point; point `n` is seeded with
/// `derive_seed(seed, n)`.
pub fn coverage_sweep(
    dist: &AnalyticDistribution,
    m: u32,
    grid: &[u64],
    reps: usize,
    alpha: f64,
    seed: u64,
    eps: f64,
) -> Result<SweepResult> {
    validate_grid(grid)?;
    check_args(m, grid[0], reps, alpha)?;
    let truth = gse_analytic(dist, m, eps)?;
    let sampler = dist.sampler()?;
    let points = grid
        .par_iter()
        .map(|&n| {
            let point_seed = derive_seed(seed, n);
            let hits = count_hits(&sampler, truth, m, n, reps, alpha, point_seed)?;
            Ok(CoveragePoint::new(n, m, reps, hits, point_seed))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        dist: dist.clone(),
        m,
        alpha,
        true_gse: truth,
        points,
    })
}

/// Writes `n,m,reps,coverage,se,seed`, one row per grid point.
pub fn write_csv<W: io::Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let io_err = |e: csv::Error| GseError::Input(format!("writing CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "m", "reps", "coverage", "se", "seed"])
        .map_err(io_err)?;
    for p in &sweep.points {
        w.write_record([
            p.n.to_string(),
            p.m.to_string(),
            p.reps.to_string(),
            p.coverage.to_string(),
            p.se.to_string(),
            p.seed.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| GseError::Input(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Plain summary of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub min_coverage: f64,
    pub max_coverage: f64,
    /// Smallest grid `n` from which every point is within three nominal
    /// binomial standard errors of `1 - α`.
    pub settled_from: Option<u64>,
    pub band: f64,
    /// Mean |coverage - (1-α)| over the lowest and highest quartiles of the grid.
    pub low_quartile_gap: f64,
    pub high_quartile_gap: f64,
}

impl SweepSummary {
    /// Soft convergence check: larger samples sit closer to nominal.
    pub fn converging(&self) -> bool {
        self.high_quartile_gap <= self.low_quartile_gap
    }
}

pub fn summarize(sweep: &SweepResult) -> SweepSummary {
    let nominal = 1.0 - sweep.alpha;
    let pts = &sweep.points;
    let reps = pts.first().map_or(1, |p| p.reps) as f64;
    let band = 3.0 * (nominal * sweep.alpha / reps).sqrt();
    let within = |p: &CoveragePoint| (p.coverage - nominal).abs() <= band;
    let settled_from = pts
        .iter()
        .rposition(|p| !within(p))
        .map_or(pts.first().map(|p| p.n), |i| pts.get(i + 1).map(|p| p.n));
    let quart = (pts.len() / 4).max(1);
    let gap = |slice: &[CoveragePoint]| {
        slice
            .iter()
            .map(|p| (p.coverage - nominal).abs())
            .sum::<f64>()
            / slice.len() as f64
    };
    SweepSummary {
        min_coverage: pts.iter().map(|p| p.coverage).fold(f64::INFINITY, f64::min),
        max_coverage: pts
            .iter()
            .map(|p| p.coverage)
            .fold(f64::NEG_INFINITY, f64::max),
        settled_from,
        band,
        low_quartile_gap: gap(&pts[..quart]),
        high_quartile_gap: gap(&pts[pts.len() - quart..]),
    }
}

/// Coverage against `n` with a dashed reference line at `1 - α`.
pub fn render_svg(sweep: &SweepResult) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 60.0;
    let nominal = 1.0 - sweep.alpha;
    let n_max = sweep.points.last().map_or(1, |p| p.n) as f64;
    let y_min = sweep
        .points
        .iter()
        .map(|p| p.coverage)
        .fold(nominal, f64::min)
        .min(nominal - 0.05)
        .max(0.0);
    let y_min = (y_min * 20.0).floor() / 20.0;
    let y_max = 1.0;
    let x = |n: f64| L + (W - L - R) * n / n_max;
    let y = |c: f64| T + (H - T - B) * (y_max - c) / (y_max - y_min);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}, order m = {}: coverage of {:.0}% intervals</text>"#,
        W / 2.0,
        sweep.dist,
        sweep.m,
        100.0 * nominal
    );
    let _ = writeln!(
        s,
        r#"<line x1="{L}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{L}" y1="{T}" x2="{L}" y2="{}" stroke="black"/>"#,
        H - B,
        W - R,
        H - B,
        H - B
    );
    let mut tick = y_min;
    while tick <= y_max + 1e-9 {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{tick:.2}</text>"#,
            L - 6.0,
            y(tick) + 4.0
        );
        tick += 0.05;
    }
    for i in 0..=5 {
        let n = n_max * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.0}</text>"#,
            x(n),
            H - B + 18.0,
            n
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">sample size n</text>"#,
        (L + W - R) / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">coverage</text>"#,
        (T + H - B) / 2.0,
        (T + H - B) / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{L}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
        y(nominal),
        W - R,
        y(nominal)
    );
    for p in &sweep.points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="black"/>"#,
            x(p.n as f64),
            y(p.coverage)
        );
    }
    s.push_str("</svg>\n");
    s
}
