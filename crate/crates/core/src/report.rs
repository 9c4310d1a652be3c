//! Machine-readable verification reports.
//!
//! Records are sorted by name so assembly order never leaks into the output.
//! Floats are written by `serde_json` in shortest round-trip form; values that
//! are not finite are stored as `null` and fail their check.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value − target| ≤ tolerance`.
    Near,
    /// `value ≤ target`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Short statement of the property being checked.
    pub anchor: String,
    pub value: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    /// Informational records never fail the suite.
    pub informational: bool,
    pub pass: bool,
    /// Set when the computation behind the check raised an error.
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn near(name: &str, anchor: &str, value: f64, target: f64, tolerance: f64) -> Self {
        let pass = value.is_finite() && (value - target).abs() <= tolerance;
        Self::build(name, anchor, value, target, tolerance, Comparison::Near, pass)
    }

    pub fn at_most(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        let pass = value.is_finite() && value <= bound;
        Self::build(name, anchor, value, bound, 0.0, Comparison::AtMost, pass)
    }

    /// A boolean property, recorded as 1 (holds) or 0.
    pub fn holds(name: &str, anchor: &str, ok: bool) -> Self {
        Self::near(name, anchor, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
    }

    /// A failed check for a computation that raised an error.
    pub fn failed(name: &str, anchor: &str, error: &str) -> Self {
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value: None,
            target: 0.0,
            tolerance: 0.0,
            comparison: Comparison::Near,
            informational: false,
            pass: false,
            error: Some(error.to_string()),
        }
    }

    pub fn info(name: &str, anchor: &str, value: f64) -> Self {
        let mut r = Self::build(name, anchor, value, value, 0.0, Comparison::Near, true);
        r.informational = true;
        r
    }

    fn build(
        name: &str,
        anchor: &str,
        value: f64,
        target: f64,
        tolerance: f64,
        comparison: Comparison,
        pass: bool,
    ) -> Self {
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value: value.is_finite().then_some(value),
            target,
            tolerance,
            comparison,
            informational: false,
            pass,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub count: usize,
    pub failed: Vec<String>,
    pub records: Vec<CheckRecord>,
}

impl VerifyReport {
    pub fn new(mut records: Vec<CheckRecord>) -> Self {
        records.sort_by(|a, b| a.name.cmp(&b.name));
        let failed: Vec<String> =
            records.iter().filter(|r| !r.informational && !r.pass).map(|r| r.name.clone()).collect();
        VerifyReport { pass: failed.is_empty(), count: records.len(), failed, records }
    }

    /// True when some check could not be computed at all.
    pub fn has_errors(&self) -> bool {
        self.records.iter().any(|r| r.error.is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn emit(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_report_passes() {
        let r = VerifyReport::new(vec![]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["pass"], true);
        assert_eq!(v["count"], 0);
    }

    #[test]
    fn one_failure_fails_the_suite() {
        let r = VerifyReport::new(vec![
            CheckRecord::at_most("a", "x ≤ 1", 0.5, 1.0),
            CheckRecord::at_most("b", "x ≤ 1", 2.0, 1.0),
            CheckRecord::info("c", "reported", 7.0),
        ]);
        assert!(!r.pass);
        assert_eq!(r.failed, vec!["b".to_string()]);
    }

    #[test]
    fn errors_are_recorded() {
        let r = VerifyReport::new(vec![CheckRecord::failed("x", "anchor", "numerical failure: boom")]);
        assert!(!r.pass && r.has_errors());
        assert_eq!(r.records[0].anchor, "anchor");
    }

    #[test]
    fn non_finite_values_fail() {
        let r = CheckRecord::at_most("nan", "x ≤ 1", f64::NAN, 1.0);
        assert!(!r.pass && r.value.is_none());
    }

    #[test]
    fn records_are_sorted_by_name() {
        let r = VerifyReport::new(vec![
            CheckRecord::holds("z", "z", true),
            CheckRecord::holds("a", "a", true),
        ]);
        assert_eq!(r.records[0].name, "a");
    }

    proptest! {
        #[test]
        fn json_round_trip_is_exact(
            values in proptest::collection::vec((-1e300f64..1e300, 0.0f64..1.0, any::<bool>()), 0..20)
        ) {
            let records: Vec<CheckRecord> = values
                .iter()
                .enumerate()
                .map(|(k, (v, t, near))| {
                    let name = format!("check{k:02}");
                    if *near {
                        CheckRecord::near(&name, "anchor ⟨ν, k⟩", *v, *t, 1e-3)
                    } else {
                        CheckRecord::at_most(&name, "anchor", *t, *v)
                    }
                })
                .collect();
            let r = VerifyReport::new(records);
            let text = r.to_json().unwrap();
            let back = VerifyReport::parse(&text).unwrap();
            prop_assert_eq!(&back, &r);
            prop_assert_eq!(back.to_json().unwrap(), text);
        }
    }
}
