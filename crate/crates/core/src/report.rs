//! Machine-readable outcome of a sampled hypothesis check or a diagnostic run.

use std::collections::BTreeMap;

use serde::Serialize;

/// Slack below which a check counts as violated.
pub const MARGIN_TOLERANCE: f64 = 1e-10;

/// The sample point that produced the worst margin.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub z: f64,
    pub u: f64,
    pub xi: f64,
    #[serde(flatten)]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub check: String,
    pub passed: bool,
    /// Smallest slack of the tested inequality; negative means violated.
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    pub trials: u64,
    pub seed: u64,
    pub sample_box: Option<[f64; 2]>,
    pub metrics: BTreeMap<String, f64>,
}

impl DiagnosticReport {
    pub fn new(check: impl Into<String>) -> Self {
        DiagnosticReport {
            check: check.into(),
            passed: true,
            worst_margin: f64::INFINITY,
            witness: None,
            trials: 0,
            seed: 0,
            sample_box: None,
            metrics: BTreeMap::new(),
        }
    }

    /// Records a sampled margin, keeping the witness of the smallest one.
    pub fn observe(&mut self, margin: f64, witness: impl FnOnce() -> Witness) {
        self.trials += 1;
        if margin < self.worst_margin || (margin.is_nan() && !self.worst_margin.is_nan()) {
            self.worst_margin = margin;
            self.witness = Some(witness());
        }
        if !(margin >= -MARGIN_TOLERANCE) {
            self.passed = false;
        }
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn set_metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    /// Number of recorded violations, if the check counted them.
    pub fn violations(&self) -> u64 {
        self.metrics.get("violations").copied().unwrap_or(0.0) as u64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_margin_and_witness() {
        let mut r = DiagnosticReport::new("demo");
        r.observe(1.0, || Witness { x: 1.0, ..Default::default() });
        r.observe(-0.5, || Witness { x: 2.0, ..Default::default() });
        r.observe(0.2, || Witness { x: 3.0, ..Default::default() });
        assert!(!r.passed);
        assert_eq!(r.worst_margin, -0.5);
        assert_eq!(r.witness.as_ref().unwrap().x, 2.0);
        assert_eq!(r.trials, 3);
    }

    #[test]
    fn tolerance_absorbs_rounding() {
        let mut r = DiagnosticReport::new("demo");
        r.observe(-1e-12, Witness::default);
        assert!(r.passed);
    }

    #[test]
    fn json_shape() {
        let mut w = Witness::default();
        w.extra.insert("t".into(), 0.5);
        let mut r = DiagnosticReport::new("demo");
        r.observe(0.0, || w);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["check", "passed", "worst_margin", "witness", "trials", "seed", "sample_box"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["witness"]["t"], 0.5);
    }
}
