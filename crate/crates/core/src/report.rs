//! Verification reports: one entry per check, deterministic serialization.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Data pinpointing a failed check.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub vector: String,
    pub exponents: Option<(i64, i64)>,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CheckEntry {
    pub id: String,
    /// Name of the identity or statement being checked.
    pub anchor: String,
    pub passed: bool,
    pub detail: String,
    pub counterexample: Option<Counterexample>,
}

impl CheckEntry {
    pub fn pass(id: impl Into<String>, anchor: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { id: id.into(), anchor: anchor.into(), passed: true, detail: detail.into(), counterexample: None }
    }

    pub fn fail(id: impl Into<String>, anchor: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { id: id.into(), anchor: anchor.into(), passed: false, detail: detail.into(), counterexample: None }
    }

    pub fn with_counterexample(mut self, c: Counterexample) -> Self {
        self.counterexample = Some(c);
        self
    }

    /// Pass when `res` is `Ok`, otherwise fail with the error text.
    pub fn from_result(id: impl Into<String>, anchor: impl Into<String>, res: Result<String>) -> Self {
        match res {
            Ok(d) => Self::pass(id, anchor, d),
            Err(e) => Self::fail(id, anchor, e.to_string()),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<CheckEntry>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Format {
    Human,
    Machine,
}

impl VerificationReport {
    pub fn new(mut entries: Vec<CheckEntry>) -> Self {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        Self { entries }
    }

    pub fn extend(&mut self, more: impl IntoIterator<Item = CheckEntry>) {
        self.entries.extend(more);
        self.entries.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Machine => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Human => self.human(),
        }
    }

    fn human(&self) -> String {
        let width = self.entries.iter().map(|e| e.id.len()).max().unwrap_or(0);
        let mut out = String::new();
        for e in &self.entries {
            let tag = if e.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{tag}  {:width$}  {}", e.id, e.detail);
            if !e.passed {
                let _ = writeln!(out, "      identity: {}", e.anchor);
                if let Some(c) = &e.counterexample {
                    let _ = writeln!(out, "      vector:   {}", c.vector);
                    if let Some((a, b)) = c.exponents {
                        let _ = writeln!(out, "      at:       ({a}, {b})");
                    }
                    let _ = writeln!(out, "      expected: {}", c.expected);
                    let _ = writeln!(out, "      actual:   {}", c.actual);
                }
            }
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {} failed", self.entries.len(), failed);
        out
    }

    pub fn parse_machine(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> VerificationReport {
        VerificationReport::new(vec![
            CheckEntry::pass("b.two", "second", "ok"),
            CheckEntry::fail("a.one", "invariance of the form", "bad triple (e, f, h)").with_counterexample(Counterexample {
                vector: "e".into(),
                exponents: Some((1, -2)),
                expected: "0".into(),
                actual: "2".into(),
            }),
        ])
    }

    #[test]
    fn sorted_and_deterministic() {
        let r = sample();
        assert_eq!(r.entries[0].id, "a.one");
        assert_eq!(r.emit(Format::Machine), r.emit(Format::Machine));
        assert_eq!(r.emit(Format::Human), sample().emit(Format::Human));
    }

    #[test]
    fn failure_block_names_identity() {
        let h = sample().emit(Format::Human);
        assert!(h.contains("identity: invariance of the form"));
        assert!(h.contains("1 failed"));
    }

    #[test]
    fn empty_report_passes() {
        assert!(VerificationReport::default().all_passed());
    }

    fn arb_entry() -> impl Strategy<Value = CheckEntry> {
        ("[a-z.]{1,12}", "[ -~]{0,20}", any::<bool>(), "[ -~]{0,30}", proptest::option::of(("[ -~]{0,8}", proptest::option::of((-50i64..50, -50i64..50)))))
            .prop_map(|(id, anchor, passed, detail, ce)| CheckEntry {
                id,
                anchor,
                passed,
                detail,
                counterexample: ce.map(|(v, ex)| Counterexample { vector: v, exponents: ex, expected: "1/2".into(), actual: "-3".into() }),
            })
    }

    proptest! {
        #[test]
        fn machine_roundtrip(entries in proptest::collection::vec(arb_entry(), 0..6)) {
            let r = VerificationReport::new(entries);
            let back = VerificationReport::parse_machine(&r.emit(Format::Machine)).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
