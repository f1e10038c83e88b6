//! Distance-to-stationarity profiles, mixing times, and the `phi`/`psi`
//! time and error maps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::{tv, Distribution};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelMode};

/// Largest time explored by [`mixing_time`].
pub const MIXING_T_MAX: f64 = 1e7;
/// Relative width at which heat-mode bisection stops.
pub const HEAT_BISECTION_REL_WIDTH: f64 = 1e-6;

/// Starting point of a profile: the worst state, or a fixed distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    WorstCase,
    Fixed(Distribution),
}

impl Start {
    pub fn label(&self) -> &'static str {
        match self {
            Start::WorstCase => "worst",
            Start::Fixed(_) => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub mode: KernelMode,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub start: Start,
}

impl DistanceProfile {
    /// Largest increase `d(t_{i+1}) - d(t_i)` along the profile (zero or
    /// negative for a monotone profile).
    pub fn max_increase(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `max_x d(t, x)` and the first state attaining it.
pub fn worst_case_distance<K: Kernel + ?Sized>(kernel: &K, mode: KernelMode, t: f64) -> Result<(f64, usize)> {
    let d = kernel.distances_from_states(mode, t)?;
    Ok(argmax(&d))
}

fn argmax(values: &[f64]) -> (f64, usize) {
    values
        .iter()
        .enumerate()
        .fold((f64::NEG_INFINITY, 0), |(best, bi), (i, &v)| if v > best { (v, i) } else { (best, bi) })
}

/// `|| mu K_t - pi ||_TV`.
pub fn distance_from<K: Kernel + ?Sized>(kernel: &K, mode: KernelMode, t: f64, mu: &Distribution) -> Result<f64> {
    let row = kernel.kernel_row(mode, t, mu)?;
    Ok(tv(row.as_slice(), kernel.pi().as_slice().expect("contiguous")).min(1.0))
}

pub fn profile<K: Kernel + ?Sized>(kernel: &K, mode: KernelMode, times: &[f64], start: Start) -> Result<DistanceProfile> {
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values = sorted
        .iter()
        .map(|&t| match &start {
            Start::WorstCase => worst_case_distance(kernel, mode, t).map(|(d, _)| d),
            Start::Fixed(mu) => distance_from(kernel, mode, t, mu),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistanceProfile { mode, times: sorted, values, start })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub mode: KernelMode,
    pub epsilon: f64,
    pub t_mix: f64,
    /// Worst start just before mixing: at `t_mix - 1` for discrete modes,
    /// at `t_mix / 2` for the heat kernel.
    pub argmax_state: usize,
}

/// Smallest `t` with `d(t) <= epsilon`.
pub fn mixing_time<K: Kernel + ?Sized>(kernel: &K, mode: KernelMode, epsilon: f64) -> Result<MixingReport> {
    check_epsilon(epsilon)?;
    let t_mix = search_threshold(|t| worst_case_distance(kernel, mode, t).map(|(d, _)| d), mode, epsilon)?;
    let probe = match mode {
        KernelMode::Heat => t_mix / 2.0,
        _ => (t_mix - 1.0).max(0.0),
    };
    let (_, argmax_state) = worst_case_distance(kernel, mode, probe)?;
    Ok(MixingReport { mode, epsilon, t_mix, argmax_state })
}

/// Smallest `t` with `d(t, mu) <= epsilon`.
pub fn mixing_time_from<K: Kernel + ?Sized>(kernel: &K, mode: KernelMode, epsilon: f64, mu: &Distribution) -> Result<f64> {
    check_epsilon(epsilon)?;
    search_threshold(|t| distance_from(kernel, mode, t, mu), mode, epsilon)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Doubling bracket then bisection; relies on `d` being non-increasing.
fn search_threshold(d: impl Fn(f64) -> Result<f64>, mode: KernelMode, epsilon: f64) -> Result<f64> {
    if d(0.0)? <= epsilon {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while d(hi)? > epsilon {
        if hi >= MIXING_T_MAX {
            return Err(Error::NoMixing { epsilon, t_max: MIXING_T_MAX });
        }
        lo = hi;
        hi = (hi * 2.0).min(MIXING_T_MAX);
    }
    if mode.is_discrete() {
        while hi - lo > 1.0 {
            let mid = ((lo + hi) / 2.0).floor();
            if d(mid)? <= epsilon {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    } else {
        while hi - lo > HEAT_BISECTION_REL_WIDTH * hi {
            let mid = 0.5 * (lo + hi);
            if d(mid)? <= epsilon {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(hi)
}

/// `phi_{alpha,C}(t) = t + ceil(C t^{(1+2 alpha)/2} sqrt(alpha ln t))`.
pub fn phi(alpha: f64, c: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 0.5) || !(c >= 0.0) || !(t >= 1.0) || !t.is_finite() {
        return Err(Error::DomainError(format!("phi needs 0 < alpha <= 1/2, C >= 0, t >= 1 (alpha={alpha}, C={c}, t={t})")));
    }
    let shift = c * t.powf((1.0 + 2.0 * alpha) / 2.0) * (alpha * t.ln()).sqrt();
    Ok(t + shift.ceil())
}

/// `psi_{alpha,C}(x) = min(1, x + C |ln(2x)|^{-alpha})`; equals one at `x = 1/2`.
pub fn psi(alpha: f64, c: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) || !(c >= 0.0) || !(x > 0.0 && x < 1.0) {
        return Err(Error::DomainError(format!("psi needs 0 < alpha < 1/2, C >= 0, 0 < x < 1 (alpha={alpha}, C={c}, x={x})")));
    }
    let penalty = (2.0 * x).ln().abs().powf(-alpha);
    Ok((x + c * penalty).min(1.0))
}

/// Writes profiles as `t,mode,start,value` rows with 17 significant digits.
pub fn write_profiles_csv<W: Write>(profiles: &[DistanceProfile], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "mode", "start", "value"])?;
    for p in profiles {
        for (t, v) in p.times.iter().zip(&p.values) {
            w.write_record([format!("{t}"), p.mode.to_string(), p.start.label().to_string(), format!("{v:.16e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}
