//! Stein-type maximal functions `g*(x) = sup_t (t+1)^r |Delta^r K^t f(x)|`
//! for the lazy and averaged kernels, where `Delta K^t = K^{t+1} - K^t`.
//!
//! Everything is evaluated in the eigenbasis: on the `i`-th eigenfunction
//! `Delta^r P_L^t` acts as `((1+l)/2)^t ((l-1)/2)^r` and `Delta A_t` as
//! `l^t (l^2 - 1) / 2`.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelMode;
use crate::spectral::Spectrum;

/// `(t+1)^r gamma^t` below which the sup is truncated.
pub const TRUNCATION_LEVEL: f64 = 1e-14;
/// Hard cap on the truncation time.
pub const MAX_TRUNCATION_TIME: u64 = 10_000_000;
/// Eigenvalues with `|l^2 - 1|` below this are treated as `+-1`.
const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalResult {
    pub g_star: Vec<f64>,
    pub t_max: u64,
    /// Bound on `|| sup_{t > t_max} (t+1)^r |Delta^r K^t f| ||_2`.
    pub tail_bound: f64,
    pub variance: f64,
    /// `||g*||_2^2 / Var_pi f`; absent when `f` is constant.
    pub ratio: Option<f64>,
}

fn multipliers(spectrum: &Spectrum, mode: KernelMode, r: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let lambdas = spectrum.eigenvalues();
    match mode {
        KernelMode::Lazy => {
            let base = lambdas.iter().map(|&l| (1.0 + l) / 2.0).collect();
            let scale = lambdas
                .iter()
                .enumerate()
                .map(|(i, &l)| if i == 0 { 0.0 } else { ((l - 1.0) / 2.0).powi(r as i32) })
                .collect();
            Ok((base, scale))
        }
        KernelMode::Ave => {
            if r != 1 {
                return Err(Error::SpectrumOutOfRange(format!("averaged kernel supports r = 1 only, got r = {r}")));
            }
            let base = lambdas.to_vec();
            let scale = lambdas
                .iter()
                .map(|&l| {
                    let d = l * l - 1.0;
                    if d.abs() < UNIT_MODULUS_TOL {
                        0.0
                    } else {
                        d / 2.0
                    }
                })
                .collect();
            Ok((base, scale))
        }
        other => Err(Error::DomainError(format!("maximal function is defined for lazy and ave modes, got {other}"))),
    }
}

/// Smallest `T` past the peak of `(t+1)^r gamma^t` with
/// `(T+2)^r gamma^{T+1} < TRUNCATION_LEVEL`.
fn truncation_time(gamma: f64, r: u32) -> Result<u64> {
    if gamma == 0.0 {
        return Ok(0);
    }
    let lg = gamma.ln();
    let peak = (-(r as f64) / lg - 1.0).max(0.0);
    let level = TRUNCATION_LEVEL.ln();
    let mut t = peak.floor() as u64;
    // the log of the envelope is concave past the peak; step until below level
    let mut step = 1u64;
    while (r as f64) * ((t + 2) as f64).ln() + (t + 1) as f64 * lg >= level {
        t += step;
        step *= 2;
        if t > MAX_TRUNCATION_TIME {
            return Err(Error::SpectrumOutOfRange(format!("truncation time exceeds {MAX_TRUNCATION_TIME} (gamma = {gamma})")));
        }
    }
    // refine back down to the first time below level
    let (mut lo, mut hi) = (peak.floor() as u64, t);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if (r as f64) * ((mid + 2) as f64).ln() + (mid + 1) as f64 * lg < level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn variance(pi: &[f64], f: &[f64]) -> f64 {
    let mean: f64 = pi.iter().zip(f).map(|(p, v)| p * v).sum();
    pi.iter().zip(f).map(|(p, v)| p * (v - mean) * (v - mean)).sum()
}

pub fn maximal_function(spectrum: &Spectrum, f: &[f64], mode: KernelMode, r: u32) -> Result<MaximalResult> {
    let n = spectrum.n();
    if f.len() != n {
        return Err(Error::LengthMismatch { left: f.len(), right: n });
    }
    if r == 0 {
        return Err(Error::DomainError("r must be at least 1".into()));
    }
    let (base, scale) = multipliers(spectrum, mode, r)?;
    let pi = spectrum.stationary().as_slice().expect("contiguous");
    let var = variance(pi, f);
    let second_moment: f64 = pi.iter().zip(f).map(|(p, v)| p * v * v).sum();
    if var <= 1e-28 * second_moment.max(f64::MIN_POSITIVE) {
        return Ok(MaximalResult { g_star: vec![0.0; n], t_max: 0, tail_bound: 0.0, variance: var, ratio: None });
    }
    let mean: f64 = pi.iter().zip(f).map(|(p, v)| p * v).sum();
    let centered: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let mut coeffs = spectrum.coefficients(&centered);
    coeffs[0] = 0.0;

    let gamma = base
        .iter()
        .zip(&scale)
        .filter(|(_, &s)| s != 0.0)
        .fold(0.0f64, |g, (&b, _)| g.max(b.abs()));
    let t_max = truncation_time(gamma, r)?;
    let abs_coeff_sum: f64 = coeffs.iter().map(|c| c.abs()).sum();
    let tail_bound = if gamma == 0.0 {
        0.0
    } else {
        ((r as f64) * ((t_max + 2) as f64).ln() + (t_max + 1) as f64 * gamma.ln()).exp() * abs_coeff_sum
    };

    let mut weights: Array1<f64> = coeffs.iter().zip(&scale).map(|(c, s)| c * s).collect();
    let mut g_star = vec![0.0f64; n];
    for t in 0..=t_max {
        let w = spectrum.synthesize(&weights);
        let amp = ((t + 1) as f64).powi(r as i32);
        for (g, v) in g_star.iter_mut().zip(w.iter()) {
            *g = g.max(amp * v.abs());
        }
        for (wi, b) in weights.iter_mut().zip(&base) {
            *wi *= b;
        }
    }
    let norm2: f64 = pi.iter().zip(&g_star).map(|(p, g)| p * g * g).sum();
    Ok(MaximalResult { g_star, t_max, tail_bound, variance: var, ratio: Some(norm2 / var) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinSweep {
    pub draws: usize,
    pub seed: u64,
    pub lazy_max: f64,
    pub ave_max: f64,
    pub max_ratio: f64,
}

/// Gaussian test function number `index` of the sweep seeded by `seed`.
pub fn random_function(n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Max of the lazy (`r = 1`) and averaged ratios over seeded Gaussian draws.
pub fn stein_sweep(spectrum: &Spectrum, num_random_f: usize, seed: u64) -> Result<SteinSweep> {
    if num_random_f == 0 {
        return Err(Error::ZeroSamples);
    }
    let n = spectrum.n();
    let ratios = (0..num_random_f as u64)
        .into_par_iter()
        .map(|i| {
            let f = random_function(n, seed, i);
            let lazy = maximal_function(spectrum, &f, KernelMode::Lazy, 1)?.ratio.unwrap_or(0.0);
            let ave = maximal_function(spectrum, &f, KernelMode::Ave, 1)?.ratio.unwrap_or(0.0);
            Ok((lazy, ave))
        })
        .collect::<Result<Vec<_>>>()?;
    let lazy_max = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let ave_max = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(SteinSweep { draws: num_random_f, seed, lazy_max, ave_max, max_ratio: lazy_max.max(ave_max) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{validate_chain, ChainSpec};
    use crate::spectral::decompose;
    use ndarray::array;

    fn flip() -> Spectrum {
        decompose(&validate_chain(ChainSpec::new("flip", array![[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn flip_indicator() {
        let res = maximal_function(&flip(), &[1.0, 0.0], KernelMode::Lazy, 1).unwrap();
        assert!((res.g_star[0] - 0.5).abs() < 1e-15 && (res.g_star[1] - 0.5).abs() < 1e-15);
        assert!((res.ratio.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_function() {
        let res = maximal_function(&flip(), &[3.0, 3.0], KernelMode::Ave, 1).unwrap();
        assert_eq!(res.g_star, vec![0.0, 0.0]);
        assert_eq!(res.ratio, None);
    }

    #[test]
    fn ave_rejects_higher_order() {
        assert!(matches!(maximal_function(&flip(), &[1.0, 0.0], KernelMode::Ave, 2), Err(Error::SpectrumOutOfRange(_))));
        assert!(maximal_function(&flip(), &[1.0, 0.0], KernelMode::Heat, 1).is_err());
    }

    #[test]
    fn truncation_envelope() {
        let t = truncation_time(0.9, 1).unwrap();
        let env = |t: u64| ((t + 2) as f64) * 0.9f64.powi(t as i32 + 1);
        assert!(env(t) < TRUNCATION_LEVEL && env(t - 1) >= TRUNCATION_LEVEL);
        assert_eq!(truncation_time(0.0, 3).unwrap(), 0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let s = flip();
        let a = stein_sweep(&s, 100, 7).unwrap();
        assert_eq!(a, stein_sweep(&s, 100, 7).unwrap());
        assert!(a.max_ratio <= 4.0);
        assert_eq!(stein_sweep(&s, 0, 7), Err(Error::ZeroSamples));
    }
}
