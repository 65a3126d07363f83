use std::collections::BTreeMap;

use serde::Serialize;

/// Relative slack tolerance: a point is violated when
/// rhs - lhs < -SLACK_EPS · max(1, |rhs|).
pub const SLACK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPoint {
    pub label: String,
    pub inputs: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BoundPoint {
    pub fn violated(&self) -> bool {
        self.slack < -SLACK_EPS * self.rhs.abs().max(1.0)
    }
}

/// Per-point (lhs, rhs) records of one inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub theorem: String,
    pub points: Vec<BoundPoint>,
    pub min_slack: f64,
    pub violated: bool,
    /// Free-form observations (route choices, flagged steps).
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(theorem: &str) -> BoundReport {
        BoundReport {
            theorem: theorem.to_string(),
            points: Vec::new(),
            min_slack: f64::INFINITY,
            violated: false,
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, label: &str, inputs: &[(&str, f64)], lhs: f64, rhs: f64) {
        let p = BoundPoint {
            label: label.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            lhs,
            rhs,
            slack: rhs - lhs,
        };
        self.violated |= p.violated();
        self.min_slack = self.min_slack.min(p.slack);
        self.points.push(p);
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    /// Smallest rhs over the points with the given label.
    pub fn best_rhs(&self, label: &str) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.label == label)
            .map(|p| p.rhs)
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.min(v))))
    }

    pub fn merge(&mut self, other: BoundReport) {
        for p in other.points {
            self.violated |= p.violated();
            self.min_slack = self.min_slack.min(p.slack);
            self.points.push(p);
        }
        self.notes.extend(other.notes);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violation_uses_relative_tolerance() {
        let mut r = BoundReport::new("t");
        r.push("a", &[], 1.0 + 1e-10, 1.0);
        assert!(!r.violated);
        r.push("b", &[], 1e6 * (1.0 + 1e-8), 1e6);
        assert!(r.violated);
        assert!(r.min_slack < 0.0);
    }
}
