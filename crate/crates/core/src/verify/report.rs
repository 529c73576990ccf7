//! Reproducible test reports.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Outcome of one statistical or exact check. Every report is reproducible
/// from its metadata: the seeds and sizes fully determine the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_std_error: Option<f64>,
    pub verdict: Verdict,
    pub seeds: Vec<u64>,
    pub sizes: BTreeMap<String, u64>,
    /// Auxiliary named quantities (per-component statistics, both sides of
    /// an identity, ...).
    pub details: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_fingerprint: Option<String>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, verdict: Verdict) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            threshold: None,
            p_value: None,
            mc_std_error: None,
            verdict,
            seeds: Vec::new(),
            sizes: BTreeMap::new(),
            details: BTreeMap::new(),
            config_fingerprint: None,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }

    pub fn with_p_value(mut self, p: f64) -> Self {
        self.p_value = Some(p);
        self
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.mc_std_error = Some(se);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds.push(seed);
        self
    }

    pub fn with_size(mut self, key: &str, n: u64) -> Self {
        self.sizes.insert(key.into(), n);
        self
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_has_stable_fields() {
        let r = TestReport::new("demo", 0.5, Verdict::Pass)
            .with_threshold(3.0)
            .with_seed(7)
            .with_size("samples", 100)
            .with_detail("lhs", 1.0);
        let json = r.to_json();
        for needle in ["\"name\": \"demo\"", "\"verdict\": \"pass\"", "\"samples\": 100"] {
            assert!(json.contains(needle), "missing {needle} in {json}");
        }
    }
}
