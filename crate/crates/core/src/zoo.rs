//! Parametrized chain families.
//!
//! | family        | states            | parameters                    |
//! |---------------|-------------------|-------------------------------|
//! | `af_section6` | `0..=2n+1`        | `n`, `alpha` in `(0, 1/2]`    |
//! | `biased_cycle`| `0..n`            | `n >= 3`, `ell > 0`           |
//! | `fragile_bd`  | `1..=n` (index k is state k+1) | `3 <= n <= 300`  |
//! | `ehrenfest`   | `0..=n`           | `n >= 1`, `laziness` in `[0,1)` (default 1/2) |
//! | `flip`        | `{0, 1}`          | none                          |
//! | `complete`    | `0..n`            | `n >= 2`                      |
//! | `path`        | `0..=n`           | `n >= 1`                      |

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};

/// Largest `fragile_bd` size before `e^{-n}` entries approach underflow.
pub const FRAGILE_BD_MAX_N: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    AfSection6 { n: usize, alpha: f64 },
    BiasedCycle { n: usize, ell: f64 },
    FragileBd { n: usize },
    Ehrenfest { n: usize, #[serde(default = "default_laziness")] laziness: f64 },
    Flip,
    Complete { n: usize },
    Path { n: usize },
}

fn default_laziness() -> f64 {
    0.5
}

impl FamilySpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            FamilySpec::AfSection6 { .. } => "af_section6",
            FamilySpec::BiasedCycle { .. } => "biased_cycle",
            FamilySpec::FragileBd { .. } => "fragile_bd",
            FamilySpec::Ehrenfest { .. } => "ehrenfest",
            FamilySpec::Flip => "flip",
            FamilySpec::Complete { .. } => "complete",
            FamilySpec::Path { .. } => "path",
        }
    }

    /// Builds a spec from a family name and a flat parameter map.
    pub fn from_params(family: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str| -> Result<f64> {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::ParamError(format!("{family}: missing parameter {key}")))
        };
        let size = |key: &str| -> Result<usize> {
            let v = get(key)?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::ParamError(format!("{family}: {key} must be a nonnegative integer, got {v}")));
            }
            Ok(v as usize)
        };
        let spec = match family {
            "af_section6" => FamilySpec::AfSection6 { n: size("n")?, alpha: get("alpha")? },
            "biased_cycle" => FamilySpec::BiasedCycle { n: size("n")?, ell: get("ell")? },
            "fragile_bd" => FamilySpec::FragileBd { n: size("n")? },
            "ehrenfest" => FamilySpec::Ehrenfest {
                n: size("n")?,
                laziness: params.get("laziness").copied().unwrap_or_else(default_laziness),
            },
            "flip" => FamilySpec::Flip,
            "complete" => FamilySpec::Complete { n: size("n")? },
            "path" => FamilySpec::Path { n: size("n")? },
            other => return Err(Error::ParamError(format!("unknown family {other:?}"))),
        };
        Ok(spec)
    }

    /// Same family with the size parameter replaced. `flip` has no size.
    pub fn with_size(&self, size: usize) -> Self {
        match *self {
            FamilySpec::AfSection6 { alpha, .. } => FamilySpec::AfSection6 { n: size, alpha },
            FamilySpec::BiasedCycle { ell, .. } => FamilySpec::BiasedCycle { n: size, ell },
            FamilySpec::FragileBd { .. } => FamilySpec::FragileBd { n: size },
            FamilySpec::Ehrenfest { laziness, .. } => FamilySpec::Ehrenfest { n: size, laziness },
            FamilySpec::Flip => FamilySpec::Flip,
            FamilySpec::Complete { .. } => FamilySpec::Complete { n: size },
            FamilySpec::Path { .. } => FamilySpec::Path { n: size },
        }
    }

    pub fn size(&self) -> Option<usize> {
        match *self {
            FamilySpec::AfSection6 { n, .. }
            | FamilySpec::BiasedCycle { n, .. }
            | FamilySpec::FragileBd { n }
            | FamilySpec::Ehrenfest { n, .. }
            | FamilySpec::Complete { n }
            | FamilySpec::Path { n } => Some(n),
            FamilySpec::Flip => None,
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FamilySpec::AfSection6 { n, alpha } => write!(f, "af_section6(n={n},alpha={alpha})"),
            FamilySpec::BiasedCycle { n, ell } => write!(f, "biased_cycle(n={n},ell={ell})"),
            FamilySpec::FragileBd { n } => write!(f, "fragile_bd(n={n})"),
            FamilySpec::Ehrenfest { n, laziness } => write!(f, "ehrenfest(n={n},laziness={laziness})"),
            FamilySpec::Flip => write!(f, "flip"),
            FamilySpec::Complete { n } => write!(f, "complete(n={n})"),
            FamilySpec::Path { n } => write!(f, "path(n={n})"),
        }
    }
}

/// `s = ceil(n^{1/2 + alpha})`.
///
/// Exact integer powers (for instance `alpha = 1/2`) must not be pushed to
/// the next integer by round-off, so values within `1e-9` of an integer are
/// snapped first.
pub fn section6_s(n: usize, alpha: f64) -> usize {
    let v = (n as f64).powf(0.5 + alpha);
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r as usize
    } else {
        v.ceil() as usize
    }
}

pub fn make_chain(spec: &FamilySpec) -> Result<ChainSpec> {
    let label = spec.to_string();
    let p = match *spec {
        FamilySpec::AfSection6 { n, alpha } => af_section6(n, alpha)?,
        FamilySpec::BiasedCycle { n, ell } => biased_cycle(n, ell)?,
        FamilySpec::FragileBd { n } => fragile_bd(n)?,
        FamilySpec::Ehrenfest { n, laziness } => ehrenfest(n, laziness)?,
        FamilySpec::Flip => Array2::from_shape_vec((2, 2), vec![0.0, 1.0, 1.0, 0.0]).expect("2x2"),
        FamilySpec::Complete { n } => complete(n)?,
        FamilySpec::Path { n } => path(n)?,
    };
    ChainSpec::new(label, p)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::ParamError(format!("af_section6: alpha must lie in (0, 1/2], got {alpha}")));
    }
    Ok(())
}

fn af_section6(n: usize, alpha: f64) -> Result<Array2<f64>> {
    check_alpha(alpha)?;
    if n < 1 {
        return Err(Error::ParamError("af_section6: n must be >= 1".into()));
    }
    let s = section6_s(n, alpha);
    if s < 2 {
        return Err(Error::ParamError(format!("af_section6: s = ceil(n^(1/2+alpha)) = {s} < 2")));
    }
    let size = 2 * n + 2;
    let last = 2 * n + 1;
    let boundary = (2 * n) as i64 - (2 * s) as i64;
    let in_b = |i: usize| i as i64 >= boundary;

    let s_r = Ratio::from_integer(s as i64);
    let one = Ratio::from_integer(1i64);
    let hold_b = one / (Ratio::from_integer(3) * s_r);
    let up_b = Ratio::new(3, 4) - one / (Ratio::from_integer(4) * s_r);
    let up_plain = Ratio::new(3, 4);

    let mut rows: Vec<Vec<(usize, Ratio<i64>)>> = Vec::with_capacity(size);
    rows.push(vec![(1, one)]);
    for i in 1..=2 * n {
        let (hold, up) = if in_b(i) { (hold_b, up_b) } else { (Ratio::from_integer(0), up_plain) };
        let down = up / Ratio::from_integer(3);
        debug_assert_eq!(hold + up + down, one);
        rows.push(vec![(i - 1, down), (i, hold), (i + 1, up)]);
    }
    rows.push(vec![(last - 1, one - hold_b), (last, hold_b)]);

    let mut p = Array2::zeros((size, size));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, r) in row {
            p[[i, j]] = *r.numer() as f64 / *r.denom() as f64;
        }
    }
    Ok(p)
}

/// Even states, odd states, and `B = {i >= 2n - 2s}` of the `af_section6` chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section6Sets {
    pub even: Vec<usize>,
    pub odd: Vec<usize>,
    pub b: Vec<usize>,
    pub s: usize,
}

pub fn section6_even_odd_sets(n: usize, alpha: f64) -> Result<Section6Sets> {
    check_alpha(alpha)?;
    let s = section6_s(n, alpha);
    if n < 1 || s < 2 {
        return Err(Error::ParamError(format!("af_section6: need n >= 1 and s >= 2 (n={n}, s={s})")));
    }
    let even = (0..=n).map(|i| 2 * i).collect();
    let odd = (0..=n).map(|i| 2 * i + 1).collect();
    let lo = (2 * n).saturating_sub(2 * s);
    let b = (lo..=2 * n + 1).collect();
    Ok(Section6Sets { even, odd, b, s })
}

fn biased_cycle(n: usize, ell: f64) -> Result<Array2<f64>> {
    if n < 3 || !(ell > 0.0) {
        return Err(Error::ParamError(format!("biased_cycle: need n >= 3 and ell > 0 (n={n}, ell={ell})")));
    }
    let back = (n as f64).powf(-ell);
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        p[[i, (i + n - 1) % n]] = back;
        p[[i, (i + 1) % n]] = 1.0 - back;
    }
    Ok(p)
}

fn fragile_bd(n: usize) -> Result<Array2<f64>> {
    if !(3..=FRAGILE_BD_MAX_N).contains(&n) {
        return Err(Error::ParamError(format!("fragile_bd: need 3 <= n <= {FRAGILE_BD_MAX_N}, got {n}")));
    }
    let back = (-(n as f64)).exp();
    let mut p = Array2::zeros((n, n));
    // index k holds state k + 1
    p[[0, 1]] = 1.0;
    for k in 1..n - 1 {
        p[[k, k - 1]] = back;
        p[[k, k + 1]] = 1.0 - back;
    }
    p[[n - 1, n - 2]] = 1.0;
    Ok(p)
}

fn ehrenfest(n: usize, laziness: f64) -> Result<Array2<f64>> {
    if n < 1 || !(0.0..1.0).contains(&laziness) {
        return Err(Error::ParamError(format!("ehrenfest: need n >= 1 and laziness in [0,1) (n={n}, laziness={laziness})")));
    }
    let move_p = 1.0 - laziness;
    let mut p = Array2::zeros((n + 1, n + 1));
    for k in 0..=n {
        p[[k, k]] = laziness;
        if k < n {
            p[[k, k + 1]] = move_p * (n - k) as f64 / n as f64;
        }
        if k > 0 {
            p[[k, k - 1]] = move_p * k as f64 / n as f64;
        }
    }
    Ok(p)
}

fn complete(n: usize) -> Result<Array2<f64>> {
    if n < 2 {
        return Err(Error::ParamError(format!("complete: need n >= 2, got {n}")));
    }
    let w = 1.0 / (n - 1) as f64;
    Ok(Array2::from_shape_fn((n, n), |(x, y)| if x == y { 0.0 } else { w }))
}

fn path(n: usize) -> Result<Array2<f64>> {
    if n < 1 {
        return Err(Error::ParamError("path: need n >= 1".into()));
    }
    let mut p = Array2::zeros((n + 1, n + 1));
    p[[0, 0]] = 0.5;
    p[[n, n]] = 0.5;
    for k in 0..=n {
        if k < n {
            p[[k, k + 1]] = 0.5;
        }
        if k > 0 {
            p[[k, k - 1]] = 0.5;
        }
    }
    Ok(p)
}
