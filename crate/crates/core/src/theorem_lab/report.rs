use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Slack below which a grid point counts as a violation.
pub const SLACK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: f64,
    /// The `s` coordinate, or `alpha` for reports indexed by `(t, alpha)`.
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl GridPoint {
    pub fn new(t: f64, s: f64, lhs: f64, rhs: f64) -> Self {
        GridPoint { t, s, lhs, rhs, slack: rhs - lhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub inequality_id: String,
    pub holds: bool,
    pub fitted_constant: Option<f64>,
    pub points: Vec<GridPoint>,
}

impl VerifierReport {
    pub fn new(inequality_id: impl Into<String>, points: Vec<GridPoint>, fitted_constant: Option<f64>) -> Self {
        let holds = points.iter().all(|p| p.slack >= -SLACK_TOL);
        VerifierReport { inequality_id: inequality_id.into(), holds, fitted_constant, points }
    }

    /// Smallest slack over the grid (`+inf` for an empty grid).
    pub fn min_slack(&self) -> f64 {
        self.points.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min)
    }

    pub fn worst_point(&self) -> Option<&GridPoint> {
        self.points.iter().min_by(|a, b| a.slack.total_cmp(&b.slack))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| crate::error::Error::Io(e.to_string()))
    }
}
