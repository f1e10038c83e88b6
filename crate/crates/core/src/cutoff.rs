//! Family-level cutoff diagnostics: epsilon-mixing times per mode and size,
//! profile ratios `t(eps) / t(1 - eps)`, windows and cross-mode ratios.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::validate_chain;
use crate::distances::{mixing_time, worst_case_distance};
use crate::error::{Error, Result};
use crate::kernel::{Engine, KernelMode};
use crate::zoo::{make_chain, FamilySpec};

pub const DEFAULT_EPSILONS: [f64; 4] = [0.01, 0.1, 0.25, 0.4];
pub const SCAN_MODES: [KernelMode; 3] = [KernelMode::Heat, KernelMode::Lazy, KernelMode::Ave];
/// `s` used in the averaged-to-continuous consistency check.
pub const EASY_DIRECTION_S: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingEntry {
    pub size: usize,
    pub mode: KernelMode,
    pub epsilon: f64,
    pub t_mix: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRatio {
    pub size: usize,
    pub mode: KernelMode,
    pub epsilon: f64,
    /// `t(eps) / t(1 - eps)`; absent when `t(1 - eps) = 0`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub size: usize,
    /// `t(1/4) - t(3/4)` per mode, in `SCAN_MODES` order.
    pub windows: Vec<(KernelMode, f64)>,
    /// `t_ave(1/4) / t_c(1/4)`
    pub ave_over_ct: f64,
    /// `t_L(1/4) / (2 t_c(1/4))`
    pub lazy_over_2ct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EasyDirectionCheck {
    pub size: usize,
    pub epsilon: f64,
    pub t_ave: f64,
    /// `d_c(t_ave + s sqrt(t_ave))`
    pub lhs: f64,
    /// `eps + e^{-s^2/4}`
    pub rhs: f64,
    /// Whether `s <= sqrt(t_ave)`, the range where the bound is guaranteed.
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub family: FamilySpec,
    pub sizes: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub entries: Vec<MixingEntry>,
    pub ratios: Vec<ProfileRatio>,
    pub summaries: Vec<SizeSummary>,
    pub easy_direction: Vec<EasyDirectionCheck>,
    /// Lazy window at least `sqrt(t_c) / 2` at the largest size.
    pub lazy_window_flag: bool,
}

impl CutoffReport {
    pub fn t_mix(&self, size: usize, mode: KernelMode, epsilon: f64) -> Option<f64> {
        self.entries.iter().find(|e| e.size == size && e.mode == mode && e.epsilon == epsilon).map(|e| e.t_mix)
    }

    pub fn ratio(&self, size: usize, mode: KernelMode, epsilon: f64) -> Option<f64> {
        self.ratios.iter().find(|r| r.size == size && r.mode == mode && r.epsilon == epsilon).and_then(|r| r.ratio)
    }

    pub fn summary(&self, size: usize) -> Option<&SizeSummary> {
        self.summaries.iter().find(|s| s.size == size)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["family", "size", "mode", "epsilon", "t_mix"])?;
        for e in &self.entries {
            w.write_record([
                self.family.family_name().to_string(),
                e.size.to_string(),
                e.mode.to_string(),
                e.epsilon.to_string(),
                format!("{:.16e}", e.t_mix),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct SizeScan {
    entries: Vec<MixingEntry>,
    ratios: Vec<ProfileRatio>,
    summary: SizeSummary,
    easy: Vec<EasyDirectionCheck>,
    t_c: f64,
}

fn scan_size(family: &FamilySpec, size: usize, epsilons: &[f64]) -> Result<SizeScan> {
    let chain = validate_chain(make_chain(&family.with_size(size))?)?;
    let engine = Engine::for_chain(&chain)?;
    let mut levels: Vec<f64> = epsilons.iter().flat_map(|&e| [e, 1.0 - e]).chain([0.25, 0.75]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut entries = Vec::new();
    for &mode in &SCAN_MODES {
        for &eps in &levels {
            entries.push(MixingEntry { size, mode, epsilon: eps, t_mix: mixing_time(&engine, mode, eps)?.t_mix });
        }
    }
    let lookup = |mode: KernelMode, eps: f64| {
        entries.iter().find(|e| e.mode == mode && e.epsilon == eps).map(|e| e.t_mix).expect("computed level")
    };

    let mut ratios = Vec::new();
    for &mode in &SCAN_MODES {
        for &eps in epsilons {
            let den = lookup(mode, 1.0 - eps);
            let ratio = (den > 0.0).then(|| lookup(mode, eps) / den);
            ratios.push(ProfileRatio { size, mode, epsilon: eps, ratio });
        }
    }
    let windows = SCAN_MODES.iter().map(|&m| (m, lookup(m, 0.25) - lookup(m, 0.75))).collect();
    let t_c = lookup(KernelMode::Heat, 0.25);
    let summary = SizeSummary {
        size,
        windows,
        ave_over_ct: lookup(KernelMode::Ave, 0.25) / t_c,
        lazy_over_2ct: lookup(KernelMode::Lazy, 0.25) / (2.0 * t_c),
    };

    let mut easy = Vec::new();
    for &eps in epsilons {
        let t_ave = lookup(KernelMode::Ave, eps);
        let (lhs, _) = worst_case_distance(&engine, KernelMode::Heat, t_ave + EASY_DIRECTION_S * t_ave.sqrt())?;
        easy.push(EasyDirectionCheck {
            size,
            epsilon: eps,
            t_ave,
            lhs,
            rhs: eps + (-EASY_DIRECTION_S * EASY_DIRECTION_S / 4.0).exp(),
            admissible: EASY_DIRECTION_S <= t_ave.sqrt(),
        });
    }
    Ok(SizeScan { entries, ratios, summary, easy, t_c })
}

pub fn scan_family(family: &FamilySpec, sizes: &[usize], epsilons: &[f64]) -> Result<CutoffReport> {
    if sizes.is_empty() {
        return Err(Error::ParamError("at least one size is required".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ParamError(format!("sizes must be strictly increasing, got {sizes:?}")));
    }
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0 && *e < 0.5)) {
        return Err(Error::ParamError(format!("each epsilon must lie in (0, 1/2), got {epsilons:?}")));
    }
    let scans = sizes.par_iter().map(|&size| scan_size(family, size, epsilons)).collect::<Result<Vec<_>>>()?;
    let last = scans.last().expect("nonempty");
    let lazy_window = last.summary.windows.iter().find(|(m, _)| *m == KernelMode::Lazy).map(|w| w.1).unwrap_or(0.0);
    let lazy_window_flag = lazy_window >= 0.5 * last.t_c.sqrt();
    let mut report = CutoffReport {
        family: *family,
        sizes: sizes.to_vec(),
        epsilons: epsilons.to_vec(),
        entries: Vec::new(),
        ratios: Vec::new(),
        summaries: Vec::new(),
        easy_direction: Vec::new(),
        lazy_window_flag,
    };
    for s in scans {
        report.entries.extend(s.entries);
        report.ratios.extend(s.ratios);
        report.summaries.push(s.summary);
        report.easy_direction.extend(s.easy);
    }
    Ok(report)
}

/// `d_L(2n - floor(n^{1/3}))` and `d_ave(n - 3)` for the fragile
/// birth-death chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragileReport {
    pub n: usize,
    pub lazy_time: f64,
    pub d_lazy: f64,
    pub ave_time: f64,
    pub d_ave: f64,
}

pub fn fragile_bd_profile(n: usize) -> Result<FragileReport> {
    if n < 4 {
        return Err(Error::ParamError(format!("fragile_bd profile needs n >= 4, got {n}")));
    }
    let chain = validate_chain(make_chain(&FamilySpec::FragileBd { n })?)?;
    let engine = Engine::for_chain(&chain)?;
    let r = (n as f64).cbrt();
    let r = if (r - r.round()).abs() < 1e-9 { r.round() } else { r.floor() };
    let lazy_time = 2.0 * n as f64 - r;
    let ave_time = n as f64 - 3.0;
    let (d_lazy, _) = worst_case_distance(&engine, KernelMode::Lazy, lazy_time)?;
    let (d_ave, _) = worst_case_distance(&engine, KernelMode::Ave, ave_time)?;
    Ok(FragileReport { n, lazy_time, d_lazy, ave_time, d_ave })
}
