//! `r = 2 sqrt(2 t log s)`, `J = [(t - r) v 0, t + r]`, `m = ceil(r (sqrt s + 1))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingWindow {
    pub t: f64,
    pub s: f64,
    pub r: f64,
    pub j_lo: f64,
    pub j_hi: f64,
    pub m: f64,
}

impl CouplingWindow {
    pub fn new(t: f64, s: f64) -> Result<Self> {
        if !(t >= 1.0 && t.is_finite() && s >= 2.0 && s.ln() <= t) {
            return Err(Error::DomainError(format!("need t >= 1 and 2 <= s <= e^t, got t={t}, s={s}")));
        }
        let r = 2.0 * (2.0 * t * s.ln()).sqrt();
        let m = (r * (s.sqrt() + 1.0)).ceil();
        Ok(CouplingWindow { t, s, r, j_lo: (t - r).max(0.0), j_hi: t + r, m })
    }

    pub fn contains(&self, j: f64) -> bool {
        j >= self.j_lo && j <= self.j_hi
    }

    /// `(t + m - j) ^ m`, which is at least `r sqrt s` for every `j` in `J`.
    pub fn margin(&self, j: f64) -> f64 {
        (self.t + self.m - j).min(self.m)
    }
}
