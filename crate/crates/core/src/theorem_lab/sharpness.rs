//! Lag of the averaged kernel on the biased interval chain (`af_section6`).
//!
//! With `s = ceil(n^{1/2 + alpha})` and `t = 4n + s`, the averaged chain at
//! `t + s` stays further from equilibrium than the continuous-time chain at
//! `t` by an amount of order `1/s`.

use ndarray::array;
use serde::{Deserialize, Serialize};

use super::report::{GridPoint, VerifierReport};
use crate::chain::{validate_chain, ChainSpec, Distribution, ValidatedChain};
use crate::distances::worst_case_distance;
use crate::error::{Error, Result};
use crate::kernel::{Engine, Kernel, KernelMode};
use crate::spectral::decompose;
use crate::zoo::{make_chain, section6_s, FamilySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub n: usize,
    pub alpha: f64,
    pub s: usize,
    /// `4n + s`
    pub t: f64,
    /// `d_ave(t + s)`
    pub d_ave: f64,
    /// `d_c(t)`
    pub d_c: f64,
    /// `s (d_ave(t + s) - d_c(t))`
    pub c1_emp: f64,
    /// `-ln d_c(t) / n^{2 alpha}`
    pub c3_fit: f64,
    /// Max over `k <= 8s` of the gap between the closed-form two-state
    /// averaged kernel and its spectral evaluation.
    pub two_state_max_error: f64,
    pub report: VerifierReport,
}

/// `A_k(1,1) = 1/2 + (lambda - 1)^k lambda / 4` for the two-state chain with
/// holding probability `lambda / 2`.
pub fn two_state_averaged(lambda: f64, k: u64) -> f64 {
    0.5 + (lambda - 1.0).powi(k as i32) * lambda / 4.0
}

pub fn two_state_chain(lambda: f64) -> Result<ValidatedChain> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::ParamError(format!("two-state chain needs 0 < lambda <= 1, got {lambda}")));
    }
    let h = lambda / 2.0;
    validate_chain(ChainSpec::new("two_state", array![[h, 1.0 - h], [1.0 - h, h]])?)
}

/// Largest deviation of the closed form from the spectral averaged kernel,
/// over `k = 0..=k_max`.
pub fn two_state_formula_error(lambda: f64, k_max: u64) -> Result<f64> {
    let spectrum = decompose(&two_state_chain(lambda)?)?;
    let start = Distribution::point_mass(2, 0);
    let mut worst = 0.0f64;
    for k in 0..=k_max {
        let row = spectrum.kernel_row(KernelMode::Ave, k as f64, &start)?;
        worst = worst.max((row.as_slice()[0] - two_state_averaged(lambda, k)).abs());
    }
    Ok(worst)
}

pub fn check_sharpness_section6(n: usize, alpha: f64) -> Result<SharpnessReport> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::ParamError(format!("alpha must lie in (0, 1/2], got {alpha}")));
    }
    let s = section6_s(n, alpha);
    if s < 2 {
        return Err(Error::ParamError(format!("need s = ceil(n^(1/2 + alpha)) >= 2, got s={s} at n={n}")));
    }
    let chain = validate_chain(make_chain(&FamilySpec::AfSection6 { n, alpha })?)?;
    let engine = Engine::for_chain(&chain)?;
    let sf = s as f64;
    let t = 4.0 * n as f64 + sf;
    let (d_c, _) = worst_case_distance(&engine, KernelMode::Heat, t)?;
    let (d_ave, _) = worst_case_distance(&engine, KernelMode::Ave, t + sf)?;
    let c1_emp = sf * (d_ave - d_c);
    let c3_fit = -d_c.ln() / (n as f64).powf(2.0 * alpha);
    let lambda = 2.0 / (3.0 * sf);
    let two_state_max_error = two_state_formula_error(lambda, 8 * s as u64)?;
    let report = VerifierReport::new(
        format!("section6_sharpness[n={n},alpha={alpha}]"),
        vec![GridPoint::new(t, sf, d_c, d_ave)],
        Some(c1_emp),
    );
    Ok(SharpnessReport { n, alpha, s, t, d_ave, d_c, c1_emp, c3_fit, two_state_max_error, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let lambda = 2.0 / 15.0;
        assert!((two_state_averaged(lambda, 0) - (0.5 + 1.0 / 30.0)).abs() < 1e-15);
        let a1 = two_state_averaged(lambda, 1);
        assert!((a1 - (0.5 + (lambda - 1.0) * lambda / 4.0)).abs() < 1e-15);
        assert!(a1 < 0.5);
    }

    #[test]
    fn closed_form_matches_spectral() {
        assert!(two_state_formula_error(2.0 / 15.0, 40).unwrap() < 1e-12);
    }

    #[test]
    fn small_instance() {
        let r = check_sharpness_section6(20, 0.5).unwrap();
        assert_eq!(r.s, 20);
        assert_eq!(r.t, 100.0);
        assert!(r.two_state_max_error < 1e-12);
        assert!(r.d_c < 1.0 && r.c3_fit > 0.0);
        assert!(check_sharpness_section6(1, 0.25).is_err());
    }
}
