//! `d_c(t + s sqrt t) <= d_ave(t) + e^{-s^2/4}`,
//! `d_L(2t + ceil(2 s sqrt t)) <= d_ave(t) + e^{-s^2/4}` and
//! `d_c(t + s sqrt t) <= d_L(2t) + e^{-s^2/2}`, for integer `t` and
//! `0 < s <= sqrt t`. None of them needs reversibility.

use serde::{Deserialize, Serialize};

use super::report::{GridPoint, VerifierReport};
use super::{ceil_snap, DistanceTable, SValue};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelMode};

pub const CT_VS_AVE: &str = "ct_vs_ave";
pub const LAZY_VS_AVE: &str = "lazy_vs_ave";
pub const CT_VS_LAZY: &str = "ct_vs_lazy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelianReport {
    /// One report per inequality and per start convention
    /// (`<id>/per_start` minimizes slack over point-mass starts,
    /// `<id>/worst_case` compares worst-case distances).
    pub reports: Vec<VerifierReport>,
    /// Grid points dropped by the admissibility filter.
    pub skipped: Vec<(u64, f64)>,
}

impl AbelianReport {
    pub fn holds(&self) -> bool {
        self.reports.iter().all(|r| r.holds)
    }

    pub fn get(&self, id: &str) -> Option<&VerifierReport> {
        self.reports.iter().find(|r| r.inequality_id == id)
    }

    pub fn min_slack(&self) -> f64 {
        self.reports.iter().map(VerifierReport::min_slack).fold(f64::INFINITY, f64::min)
    }
}

/// Resolves the grid to admissible `(t, s)` pairs; with `strict` an
/// inadmissible pair is an error instead of being skipped.
pub fn admissible_grid(t_grid: &[u64], s_grid: &[SValue], strict: bool) -> Result<(Vec<(u64, f64)>, Vec<(u64, f64)>)> {
    let mut keep = Vec::new();
    let mut skipped = Vec::new();
    for &t in t_grid {
        for &sv in s_grid {
            let s = sv.resolve(t as f64);
            let ok = t >= 1 && s > 0.0 && s <= (t as f64).sqrt() * (1.0 + 1e-12);
            if ok {
                keep.push((t, s));
            } else if strict {
                return Err(Error::GridError(format!("need t >= 1 and 0 < s <= sqrt(t), got t={t}, s={s}")));
            } else {
                skipped.push((t, s));
            }
        }
    }
    if keep.is_empty() {
        return Err(Error::GridError("no admissible (t, s) grid points".into()));
    }
    Ok((keep, skipped))
}

struct Times {
    t: f64,
    s: f64,
    heat: f64,
    lazy: f64,
}

impl Times {
    fn new(t: u64, s: f64) -> Self {
        let tf = t as f64;
        let shift = s * tf.sqrt();
        Times { t: tf, s, heat: tf + shift, lazy: 2.0 * tf + ceil_snap(2.0 * shift) }
    }
}

pub fn check_abelian<K: Kernel + ?Sized>(kernel: &K, t_grid: &[u64], s_grid: &[SValue], strict: bool) -> Result<AbelianReport> {
    let (grid, skipped) = admissible_grid(t_grid, s_grid, strict)?;
    let times: Vec<Times> = grid.iter().map(|&(t, s)| Times::new(t, s)).collect();
    let requests = times.iter().flat_map(|p| {
        [
            (KernelMode::Heat, p.heat),
            (KernelMode::Ave, p.t),
            (KernelMode::Lazy, p.lazy),
            (KernelMode::Lazy, 2.0 * p.t),
        ]
    });
    let table = DistanceTable::build(kernel, requests)?;

    // (id, lhs (mode, time), rhs (mode, time), additive term)
    type Spec = (&'static str, fn(&Times) -> (KernelMode, f64), fn(&Times) -> (KernelMode, f64), fn(f64) -> f64);
    let specs: [Spec; 3] = [
        (CT_VS_AVE, |p| (KernelMode::Heat, p.heat), |p| (KernelMode::Ave, p.t), |s| (-s * s / 4.0).exp()),
        (LAZY_VS_AVE, |p| (KernelMode::Lazy, p.lazy), |p| (KernelMode::Ave, p.t), |s| (-s * s / 4.0).exp()),
        (CT_VS_LAZY, |p| (KernelMode::Heat, p.heat), |p| (KernelMode::Lazy, 2.0 * p.t), |s| (-s * s / 2.0).exp()),
    ];

    let mut reports = Vec::with_capacity(6);
    for (id, lhs_at, rhs_at, extra) in specs {
        let mut per_start = Vec::with_capacity(times.len());
        let mut worst = Vec::with_capacity(times.len());
        for p in &times {
            let (lm, lt) = lhs_at(p);
            let (rm, rt) = rhs_at(p);
            let e = extra(p.s);
            let lhs = table.get(lm, lt);
            let rhs = table.get(rm, rt);
            let (l, r) = lhs
                .iter()
                .zip(rhs)
                .map(|(&l, &r)| (l, r + e))
                .min_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
                .expect("nonempty chain");
            per_start.push(GridPoint::new(p.t, p.s, l, r));
            worst.push(GridPoint::new(p.t, p.s, table.worst(lm, lt), table.worst(rm, rt) + e));
        }
        reports.push(VerifierReport::new(format!("{id}/per_start"), per_start, None));
        reports.push(VerifierReport::new(format!("{id}/worst_case"), worst, None));
    }
    Ok(AbelianReport { reports, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{validate_chain, ChainSpec};
    use crate::kernel::Engine;
    use ndarray::array;

    fn flip() -> Engine {
        let c = validate_chain(ChainSpec::new("flip", array![[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap();
        Engine::for_chain(&c).unwrap()
    }

    #[test]
    fn flip_point_t1_s1() {
        let r = check_abelian(&flip(), &[1], &[SValue::Fixed(1.0)], true).unwrap();
        let p = &r.get("ct_vs_ave/worst_case").unwrap().points[0];
        let d_c2 = (-4.0f64).exp() / 2.0;
        assert!((p.lhs - d_c2).abs() < 1e-15);
        assert!((p.rhs - (-0.25f64).exp()).abs() < 1e-15);
        assert!((p.slack - 0.769_643).abs() < 1e-6, "{}", p.slack);
        assert!(r.holds());
    }

    #[test]
    fn sqrt_t_reduces_to_heat_at_2t() {
        // d_ave = 0 on the flip chain, so the first line reads d_c(2t) <= e^{-t/4}
        let r = check_abelian(&flip(), &[9], &[SValue::SqrtT], true).unwrap();
        let p = &r.get("ct_vs_ave/worst_case").unwrap().points[0];
        assert!((p.lhs - (-36.0f64).exp() / 2.0).abs() < 1e-15);
        assert!((p.rhs - (-9.0f64 / 4.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn inadmissible_points() {
        assert!(matches!(check_abelian(&flip(), &[4], &[SValue::Fixed(3.0)], true), Err(Error::GridError(_))));
        let r = check_abelian(&flip(), &[4, 16], &[SValue::Fixed(3.0)], false).unwrap();
        assert_eq!(r.skipped, vec![(4, 3.0)]);
        assert_eq!(r.reports[0].points.len(), 1);
    }
}
