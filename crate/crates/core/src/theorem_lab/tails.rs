//! Exact Poisson and `Bin(t, 1/2)` tails against the Chernoff-type bounds
//!
//! * `P[Y <= mu(1 - eps)] <= exp(-eps^2 mu / 2)`,
//! * `P[Y >= mu(1 + eps)] <= exp(-eps^2 mu / (2 (1 + eps/3)))`,
//! * `P[Y' <= t(1 - eps)/2] = P[Y' >= t(1 + eps)/2] <= exp(-eps^2 t / 4)`.
//!
//! Probability masses use the saddle-point form (Loader's `stirlerr` and
//! `bd0`), which keeps full relative precision for large arguments; tails
//! are accumulated in log space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::report::{GridPoint, VerifierReport};
use crate::error::{Error, Result};

/// Terms smaller than this fraction of the running total end a Poisson tail sum.
pub const TAIL_TRUNCATION: f64 = 1e-18;
/// Boundaries within this distance of an integer are snapped onto it.
const BOUNDARY_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailKind {
    Poisson,
    Binomial,
}

/// `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nf = n as f64;
    if n <= 15 {
        let ln_fact: f64 = (2..=n).map(|i| (i as f64).ln()).sum();
        return ln_fact - (nf + 0.5) * nf.ln() + nf - 0.5 * (2.0 * PI).ln();
    }
    let nn = nf * nf;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// `x ln(x / m) + m - x`, accurate when `x` is close to `m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

pub fn poisson_ln_pmf(mu: f64, k: u64) -> f64 {
    if k == 0 {
        return -mu;
    }
    let kf = k as f64;
    -stirlerr(k) - bd0(kf, mu) - 0.5 * (2.0 * PI * kf).ln()
}

/// `ln P[Bin(t, 1/2) = k]`.
pub fn binomial_half_ln_pmf(t: u64, k: u64) -> f64 {
    if k > t {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == t {
        return -(t as f64) * std::f64::consts::LN_2;
    }
    let (tf, kf) = (t as f64, k as f64);
    let m = tf / 2.0;
    stirlerr(t) - stirlerr(k) - stirlerr(t - k) - bd0(kf, m) - bd0(tf - kf, m) + 0.5 * (tf / (2.0 * PI * kf * (tf - kf))).ln()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Sums `exp(ln_pmf(k))` from `start` stepping by `dir` until the terms,
/// already past the mode, fall below the truncation ratio, or `stop` is reached.
fn walk_tail(ln_pmf: impl Fn(u64) -> f64, start: u64, ascending: bool, mode: f64, stop: Option<u64>) -> f64 {
    let mut terms = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut k = start;
    loop {
        let lp = ln_pmf(k);
        terms.push(lp);
        best = best.max(lp);
        let past_mode = if ascending { k as f64 > mode } else { (k as f64) < mode };
        if past_mode && lp < best + TAIL_TRUNCATION.ln() {
            break;
        }
        if Some(k) == stop {
            break;
        }
        if ascending {
            k += 1;
        } else if k == 0 {
            break;
        } else {
            k -= 1;
        }
    }
    log_sum_exp(&terms).exp()
}

/// `P[Y <= x]` for `Y ~ Pois(mu)`.
pub fn poisson_lower_tail(mu: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let k = (x + BOUNDARY_SNAP).floor() as u64;
    walk_tail(|j| poisson_ln_pmf(mu, j), k, false, mu, Some(0))
}

/// `P[Y >= x]` for `Y ~ Pois(mu)`.
pub fn poisson_upper_tail(mu: f64, x: f64) -> f64 {
    let k = (x - BOUNDARY_SNAP).ceil().max(0.0) as u64;
    walk_tail(|j| poisson_ln_pmf(mu, j), k, true, mu, None)
}

/// `P[Y' <= x]` for `Y' ~ Bin(t, 1/2)`.
pub fn binomial_lower_tail(t: u64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let k = ((x + BOUNDARY_SNAP).floor() as u64).min(t);
    walk_tail(|j| binomial_half_ln_pmf(t, j), k, false, t as f64 / 2.0, Some(0))
}

/// `P[Y' >= x]` for `Y' ~ Bin(t, 1/2)`.
pub fn binomial_upper_tail(t: u64, x: f64) -> f64 {
    let k = (x - BOUNDARY_SNAP).ceil().max(0.0) as u64;
    if k > t {
        return 0.0;
    }
    walk_tail(|j| binomial_half_ln_pmf(t, j), k, true, t as f64 / 2.0, Some(t))
}

/// Two reports (`<kind>_lower`, `<kind>_upper`); points carry the mean
/// (Poisson) or the number of trials (binomial) in `t` and `eps` in `s`.
pub fn check_tail_bounds(kind: TailKind, mu_or_t: f64, eps_grid: &[f64]) -> Result<Vec<VerifierReport>> {
    if !(mu_or_t > 0.0 && mu_or_t.is_finite()) {
        return Err(Error::DomainError(format!("tail parameter must be positive, got {mu_or_t}")));
    }
    if kind == TailKind::Binomial && mu_or_t.fract() != 0.0 {
        return Err(Error::DomainError(format!("binomial trials must be an integer, got {mu_or_t}")));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::DomainError(format!("eps must be positive, got {e}")));
    }
    let m = mu_or_t;
    let mut lower = Vec::with_capacity(eps_grid.len());
    let mut upper = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        match kind {
            TailKind::Poisson => {
                lower.push(GridPoint::new(m, eps, poisson_lower_tail(m, m * (1.0 - eps)), (-eps * eps * m / 2.0).exp()));
                upper.push(GridPoint::new(
                    m,
                    eps,
                    poisson_upper_tail(m, m * (1.0 + eps)),
                    (-eps * eps * m / (2.0 * (1.0 + eps / 3.0))).exp(),
                ));
            }
            TailKind::Binomial => {
                let t = m as u64;
                let bound = (-eps * eps * m / 4.0).exp();
                lower.push(GridPoint::new(m, eps, binomial_lower_tail(t, m * (1.0 - eps) / 2.0), bound));
                upper.push(GridPoint::new(m, eps, binomial_upper_tail(t, m * (1.0 + eps) / 2.0), bound));
            }
        }
    }
    let name = match kind {
        TailKind::Poisson => "poisson",
        TailKind::Binomial => "binomial",
    };
    Ok(vec![VerifierReport::new(format!("{name}_lower"), lower, None), VerifierReport::new(format!("{name}_upper"), upper, None)])
}
