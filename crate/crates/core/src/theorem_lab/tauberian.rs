//! `d_L(t + ceil(s sqrt t)) <= d_c(t/2) + C s^{-1} sqrt(log s)` and
//! `d_ave(t + ceil(s sqrt t)) <= d_L(2t) + C s^{-1} sqrt(log s)` for reversible
//! chains, `t >= 2`, `s in [2, e^t]`. The constant is fitted as the smallest
//! value making both hold on the grid, then plugged into the `phi`/`psi` forms.

use serde::{Deserialize, Serialize};

use super::report::{GridPoint, VerifierReport};
use super::{ceil_snap, DistanceTable, SValue};
use crate::distances::{phi, psi};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelMode};

pub const CT_TO_LAZY: &str = "ct_to_lazy";
pub const LAZY_TO_AVE: &str = "lazy_to_ave";
/// Exponents at which the `phi`-form inequalities are evaluated.
pub const THEOREM_ALPHAS: [f64; 2] = [0.25, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauberianFit {
    pub ct_to_lazy: VerifierReport,
    pub lazy_to_ave: VerifierReport,
    /// Max of the two per-inequality fits.
    pub fitted_constant: f64,
    /// `main1`..`main3` per start and `afthm1` worst-case, with every
    /// constant set to `fitted_constant`; points carry `alpha` in `s`.
    pub theorem_checks: Vec<VerifierReport>,
    pub skipped: Vec<(u64, f64)>,
}

pub fn admissible_grid(t_grid: &[u64], s_grid: &[SValue], strict: bool) -> Result<(Vec<(u64, f64)>, Vec<(u64, f64)>)> {
    let mut keep = Vec::new();
    let mut skipped = Vec::new();
    for &t in t_grid {
        for &sv in s_grid {
            let s = sv.resolve(t as f64);
            let ok = t >= 2 && s >= 2.0 && s.ln() <= t as f64;
            if ok {
                keep.push((t, s));
            } else if strict {
                return Err(Error::GridError(format!("need t >= 2 and 2 <= s <= e^t, got t={t}, s={s}")));
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

fn error_term(s: f64) -> f64 {
    s.ln().sqrt() / s
}

/// Largest `max(0, (lhs - rhs) / err)` over starts.
fn point_constant(lhs: &[f64], rhs: &[f64], err: f64) -> f64 {
    lhs.iter().zip(rhs).map(|(&l, &r)| ((l - r) / err).max(0.0)).fold(0.0, f64::max)
}

fn per_start_point(t: f64, s: f64, lhs: &[f64], rhs: &[f64], extra: f64) -> GridPoint {
    let (l, r) = lhs
        .iter()
        .zip(rhs)
        .map(|(&l, &r)| (l, r + extra))
        .min_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
        .expect("nonempty chain");
    GridPoint::new(t, s, l, r)
}

pub fn fit_tauberian<K: Kernel + ?Sized>(kernel: &K, t_grid: &[u64], s_grid: &[SValue], strict: bool) -> Result<TauberianFit> {
    let (grid, skipped) = admissible_grid(t_grid, s_grid, strict)?;
    let shifted = |t: u64, s: f64| t as f64 + ceil_snap(s * (t as f64).sqrt());

    let mut requests = Vec::new();
    for &(t, s) in &grid {
        let tf = t as f64;
        let ts = shifted(t, s);
        requests.extend([(KernelMode::Lazy, ts), (KernelMode::Heat, tf / 2.0), (KernelMode::Ave, ts), (KernelMode::Lazy, 2.0 * tf)]);
    }
    let table = DistanceTable::build(kernel, requests)?;

    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    for &(t, s) in &grid {
        let tf = t as f64;
        let ts = shifted(t, s);
        let err = error_term(s);
        c1 = c1.max(point_constant(table.get(KernelMode::Lazy, ts), table.get(KernelMode::Heat, tf / 2.0), err));
        c2 = c2.max(point_constant(table.get(KernelMode::Ave, ts), table.get(KernelMode::Lazy, 2.0 * tf), err));
    }
    let fitted = c1.max(c2);

    let mut pts1 = Vec::new();
    let mut pts2 = Vec::new();
    for &(t, s) in &grid {
        let tf = t as f64;
        let ts = shifted(t, s);
        let err = error_term(s);
        pts1.push(per_start_point(tf, s, table.get(KernelMode::Lazy, ts), table.get(KernelMode::Heat, tf / 2.0), c1 * err));
        pts2.push(per_start_point(tf, s, table.get(KernelMode::Ave, ts), table.get(KernelMode::Lazy, 2.0 * tf), c2 * err));
    }

    let mut ts: Vec<u64> = grid.iter().map(|&(t, _)| t).collect();
    ts.sort_unstable();
    ts.dedup();
    let theorem_checks = theorem_checks(kernel, &ts, fitted)?;

    Ok(TauberianFit {
        ct_to_lazy: VerifierReport::new(CT_TO_LAZY, pts1, Some(c1)),
        lazy_to_ave: VerifierReport::new(LAZY_TO_AVE, pts2, Some(c2)),
        fitted_constant: fitted,
        theorem_checks,
        skipped,
    })
}

/// `psi` extended to the closed unit interval by continuity.
fn psi_clamped(alpha: f64, c: f64, x: f64) -> Result<f64> {
    if x >= 1.0 {
        return Ok(1.0);
    }
    psi(alpha, c, x.max(f64::MIN_POSITIVE))
}

fn theorem_checks<K: Kernel + ?Sized>(kernel: &K, t_grid: &[u64], c: f64) -> Result<Vec<VerifierReport>> {
    let mut requests = Vec::new();
    for &alpha in &THEOREM_ALPHAS {
        for &t in t_grid {
            let tf = t as f64;
            let p = phi(alpha, c, tf)?;
            requests.extend([
                (KernelMode::Lazy, p),
                (KernelMode::Heat, tf / 2.0),
                (KernelMode::Ave, p),
                (KernelMode::Lazy, 2.0 * tf),
                (KernelMode::Heat, tf),
            ]);
        }
    }
    let table = DistanceTable::build(kernel, requests)?;

    let mut out = Vec::new();
    for &alpha in &THEOREM_ALPHAS {
        let (mut m1, mut m2, mut m3, mut af) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &t in t_grid {
            let tf = t as f64;
            let p = phi(alpha, c, tf)?;
            let e = c * tf.powf(-alpha);
            m1.push(per_start_point(tf, alpha, table.get(KernelMode::Lazy, p), table.get(KernelMode::Heat, tf / 2.0), e));
            m2.push(per_start_point(tf, alpha, table.get(KernelMode::Ave, p), table.get(KernelMode::Lazy, 2.0 * tf), e));
            m3.push(per_start_point(tf, alpha, table.get(KernelMode::Ave, p), table.get(KernelMode::Heat, tf), 2.0 * e));
            if alpha < 0.5 && t >= 2 {
                let lhs = table.worst(KernelMode::Ave, p);
                let rhs = psi_clamped(alpha, c, table.worst(KernelMode::Heat, tf))?;
                af.push(GridPoint::new(tf, alpha, lhs, rhs));
            }
        }
        out.push(VerifierReport::new(format!("main1[alpha={alpha}]"), m1, Some(c)));
        out.push(VerifierReport::new(format!("main2[alpha={alpha}]"), m2, Some(c)));
        out.push(VerifierReport::new(format!("main3[alpha={alpha}]"), m3, Some(c)));
        if !af.is_empty() {
            out.push(VerifierReport::new(format!("afthm1[alpha={alpha}]"), af, Some(c)));
        }
    }
    Ok(out)
}
