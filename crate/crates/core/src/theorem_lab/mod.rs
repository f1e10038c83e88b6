//! Numerical verifiers for the inequalities relating the four kernel families.
//!
//! * [`abelian`]: averaged-to-plain bounds with explicit constants. These must
//!   hold exactly.
//! * [`tauberian`]: plain-to-averaged bounds whose constant is fitted on a grid.
//! * [`sharpness`]: the biased interval chain on which the averaged kernel lags.
//! * [`tails`], [`hitting`], [`window`]: supporting quantities.

pub mod abelian;
pub mod hitting;
pub mod report;
pub mod sharpness;
pub mod tails;
pub mod tauberian;
pub mod window;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelMode};

pub use abelian::{check_abelian, AbelianReport};
pub use hitting::{birth_death_interval_sets, hitting_time_profile, hitting_times, HittingTable};
pub use report::{GridPoint, VerifierReport, SLACK_TOL};
pub use sharpness::{check_sharpness_section6, two_state_averaged, SharpnessReport};
pub use tails::{check_tail_bounds, TailKind};
pub use tauberian::{fit_tauberian, TauberianFit};
pub use window::CouplingWindow;

/// One entry of an `s` grid: a number, or `sqrt(t)` resolved per time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SValue {
    Fixed(f64),
    SqrtT,
}

impl SValue {
    pub fn resolve(self, t: f64) -> f64 {
        match self {
            SValue::Fixed(s) => s,
            SValue::SqrtT => t.sqrt(),
        }
    }
}

impl fmt::Display for SValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SValue::Fixed(s) => write!(f, "{s}"),
            SValue::SqrtT => f.write_str("sqrt"),
        }
    }
}

impl FromStr for SValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sqrt" | "sqrt_t" | "sqrt(t)" => Ok(SValue::SqrtT),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(SValue::Fixed)
                .ok_or_else(|| Error::GridError(format!("cannot parse s value {other:?}"))),
        }
    }
}

/// `ceil(x)` that ignores round-off just above an integer.
pub(crate) fn ceil_snap(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// Per-start distances for a batch of `(mode, t)` requests, evaluated in
/// parallel and looked up by exact time.
pub(crate) struct DistanceTable {
    map: BTreeMap<(KernelMode, u64), Vec<f64>>,
}

impl DistanceTable {
    pub(crate) fn build<K: Kernel + ?Sized>(kernel: &K, requests: impl IntoIterator<Item = (KernelMode, f64)>) -> Result<Self> {
        let keys: Vec<(KernelMode, u64)> = requests
            .into_iter()
            .map(|(m, t)| (m, t.to_bits()))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let values = keys
            .par_iter()
            .map(|&(m, bits)| kernel.distances_from_states(m, f64::from_bits(bits)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DistanceTable { map: keys.into_iter().zip(values).collect() })
    }

    pub(crate) fn get(&self, mode: KernelMode, t: f64) -> &[f64] {
        self.map.get(&(mode, t.to_bits())).expect("time requested before lookup")
    }

    pub(crate) fn worst(&self, mode: KernelMode, t: f64) -> f64 {
        self.get(mode, t).iter().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_value_parsing() {
        assert_eq!("sqrt".parse::<SValue>().unwrap(), SValue::SqrtT);
        assert_eq!("2.5".parse::<SValue>().unwrap(), SValue::Fixed(2.5));
        assert!("x".parse::<SValue>().is_err());
        assert_eq!(SValue::SqrtT.resolve(16.0), 4.0);
    }

    #[test]
    fn ceil_snap_absorbs_round_off() {
        assert_eq!(ceil_snap(2.0 * 7f64.sqrt() * 7f64.sqrt()), 14.0);
        assert_eq!(ceil_snap(3.2), 4.0);
        assert_eq!(ceil_snap(0.0), 0.0);
    }
}
