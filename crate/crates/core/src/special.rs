//! Dirichlet-type series `Σ_{k≥1} k^{-a} (ln k)^j` for `a > 1`, `j ∈ {0,1,2}`.
//!
//! `j = 0` is the Riemann zeta function; `j = 1` and `j = 2` are `-ζ'(a)` and
//! `ζ''(a)`. All three are evaluated as an explicit partial sum up to `N - 1`
//! plus the integral tail `∫_N^∞ x^{-a} ln^j x dx`, corrected by the
//! Euler–Maclaurin endpoint terms. `N` is doubled until the first omitted
//! correction term is below [`SERIES_TOL`].

use crate::error::{domain, Result};

/// Target absolute error of [`riemann_zeta`] and [`log_moment`].
pub const SERIES_TOL: f64 = 1e-13;

/// `B_{2i} / (2i)!` for `i = 1..=8`.
const BERNOULLI_OVER_FACT: [f64; 8] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
    -3617.0 / 510.0 / 20_922_789_888_000.0,
];

/// `x^{-c} · Σ_i coef[i] (ln x)^i`, closed under differentiation.
#[derive(Clone, Debug)]
struct PowLog {
    c: f64,
    coef: Vec<f64>,
}

impl PowLog {
    fn new(a: f64, j: usize) -> Self {
        let mut coef = vec![0.0; j + 1];
        coef[j] = 1.0;
        PowLog { c: a, coef }
    }

    fn derivative(&self) -> Self {
        let coef = (0..self.coef.len())
            .map(|i| {
                let next = self.coef.get(i + 1).map_or(0.0, |c| (i + 1) as f64 * c);
                -self.c * self.coef[i] + next
            })
            .collect();
        PowLog {
            c: self.c + 1.0,
            coef,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let l = x.ln();
        let poly = self.coef.iter().rev().fold(0.0, |acc, c| acc * l + c);
        x.powf(-self.c) * poly
    }
}

/// `∫_x^∞ t^{-a} (ln t)^j dt` for `a > 1`, `x ≥ 1`.
pub(crate) fn tail_integral(a: f64, j: usize, x: f64) -> f64 {
    let b = a - 1.0;
    let l = x.ln();
    // j!/(j-i)! · l^{j-i} / b^{i+1}
    let mut falling = 1.0;
    let mut total = 0.0;
    for i in 0..=j {
        total += falling * l.powi((j - i) as i32) / b.powi(i as i32 + 1);
        falling *= (j - i) as f64;
    }
    x.powf(-b) * total
}

fn euler_maclaurin(a: f64, j: usize, n: u64) -> (f64, f64) {
    let f = PowLog::new(a, j);
    let x = n as f64;
    let head: f64 = (1..n).map(|k| f.eval(k as f64)).sum();
    let mut total = head + tail_integral(a, j, x) + 0.5 * f.eval(x);
    let mut deriv = f.derivative();
    let last = BERNOULLI_OVER_FACT.len() - 1;
    let mut remainder = 0.0;
    for (i, weight) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = weight * deriv.eval(x);
        if i == last {
            remainder = term.abs();
        } else {
            total -= term;
        }
        deriv = deriv.derivative().derivative();
    }
    (total, remainder)
}

/// `Σ_{k≥1} k^{-a} (ln k)^j` for `a > 1` and `j ≤ 2`.
pub fn log_moment(a: f64, j: usize) -> Result<f64> {
    if !(a > 1.0) || !a.is_finite() {
        return domain(format!("series exponent must be finite and > 1, got {a}"));
    }
    if j > 2 {
        return domain(format!("log power {j} not supported (max 2)"));
    }
    let mut n: u64 = 16.max((2.0 * a).ceil() as u64);
    loop {
        let (value, remainder) = euler_maclaurin(a, j, n);
        if remainder < SERIES_TOL * value.abs().max(1.0) || n >= 1 << 20 {
            return Ok(value);
        }
        n *= 2;
    }
}

/// Riemann zeta function for real `s > 1`.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return domain(format!("riemann_zeta requires s > 1, got {s}"));
    }
    log_moment(s, 0)
}
