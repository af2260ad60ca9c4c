//! Per-case and per-run reports, exit codes and CSV flattening.

use std::io;
use std::time::Duration;

use serde::Serialize;

use super::config::{CaseError, ExpectedBound};
use crate::bounds::{conjugate, BoundValue, ExponentUse, TheoremId};
use crate::property::PropertyReport;

/// Ordered by severity for exit-code purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseVerdict {
    Pass,
    HypothesisUnmet,
    Violation,
    InputError,
}

impl CaseVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseVerdict::Pass => "pass",
            CaseVerdict::HypothesisUnmet => "hypothesis_unmet",
            CaseVerdict::Violation => "violation",
            CaseVerdict::InputError => "input_error",
        }
    }

    /// `0` pass, `1` violation, `2` unmet hypothesis under `strict`, `3` input error.
    pub fn exit_code(self, strict: bool) -> i32 {
        match self {
            CaseVerdict::Pass => 0,
            CaseVerdict::HypothesisUnmet => {
                if strict {
                    2
                } else {
                    0
                }
            }
            CaseVerdict::Violation => 1,
            CaseVerdict::InputError => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Checked,
    Violated,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub theorem: TheoremId,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub rhs: Option<f64>,
    pub lhs: Option<f64>,
    pub slack: Option<f64>,
    pub status: BoundStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl BoundEntry {
    pub(crate) fn pending(theorem: TheoremId, q: Option<f64>) -> BoundEntry {
        let q = if matches!(theorem, TheoremId::C4_1 | TheoremId::C4_2) { Some(1.0) } else { q };
        let p = if theorem.exponent_use() == ExponentUse::Conjugate { q.map(conjugate) } else { None };
        BoundEntry { theorem, q, p, rhs: None, lhs: None, slack: None, status: BoundStatus::Checked, reason: None }
    }

    pub(crate) fn skip(&mut self, reason: String) {
        self.status = BoundStatus::Skipped;
        self.reason = Some(reason);
    }

    pub(crate) fn check(&mut self, v: &BoundValue, slack_tol: f64) {
        self.q = v.q;
        self.p = v.p;
        self.rhs = Some(v.rhs);
        self.lhs = Some(v.lhs);
        self.slack = Some(v.slack);
        self.status = if v.slack < -slack_tol || v.slack.is_nan() { BoundStatus::Violated } else { BoundStatus::Checked };
    }
}

/// A golden right-hand side next to the value computed for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenCheck {
    pub theorem: TheoremId,
    pub q: Option<f64>,
    pub expected: f64,
    pub actual: Option<f64>,
    pub tolerance: f64,
    pub ok: bool,
}

impl GoldenCheck {
    pub(crate) fn new(exp: &ExpectedBound, actual: Option<f64>) -> GoldenCheck {
        let ok = actual.is_some_and(|a| (a - exp.rhs).abs() <= exp.tolerance);
        GoldenCheck { theorem: exp.theorem, q: exp.q, expected: exp.rhs, actual, tolerance: exp.tolerance, ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub verdict: CaseVerdict,
    pub eta_value: Option<f64>,
    pub simpson_value: Option<f64>,
    pub mean_integral: Option<f64>,
    pub defect: Option<f64>,
    pub quadrature_error: Option<f64>,
    pub lemma_rhs: Option<f64>,
    pub lemma_error: Option<f64>,
    pub identity_residual: Option<f64>,
    pub bounds: Vec<BoundEntry>,
    pub hypotheses: Vec<PropertyReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub golden: Vec<GoldenCheck>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CaseReport {
    pub(crate) fn empty(name: &str) -> CaseReport {
        CaseReport {
            case: name.to_string(),
            verdict: CaseVerdict::Pass,
            eta_value: None,
            simpson_value: None,
            mean_integral: None,
            defect: None,
            quadrature_error: None,
            lemma_rhs: None,
            lemma_error: None,
            identity_residual: None,
            bounds: Vec::new(),
            hypotheses: Vec::new(),
            golden: Vec::new(),
            notes: Vec::new(),
            error: None,
        }
    }

    pub(crate) fn fail_input(&mut self, e: CaseError) {
        self.verdict = CaseVerdict::InputError;
        self.error = Some(e.to_string());
        self.bounds.clear();
    }

    pub fn exit_code(&self, strict: bool) -> i32 {
        self.verdict.exit_code(strict)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub hypothesis_unmet: usize,
    pub violation: usize,
    pub input_error: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub cases: Vec<CaseReport>,
    pub summary: Summary,
    /// Kept out of the JSON so identical runs serialize identically.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunReport {
    /// Sorts cases by name and tallies verdicts.
    pub fn new(mut cases: Vec<CaseReport>, wall_time: Duration) -> RunReport {
        cases.sort_by(|a, b| a.case.cmp(&b.case));
        let mut s = Summary { total: cases.len(), ..Summary::default() };
        for c in &cases {
            match c.verdict {
                CaseVerdict::Pass => s.pass += 1,
                CaseVerdict::HypothesisUnmet => s.hypothesis_unmet += 1,
                CaseVerdict::Violation => s.violation += 1,
                CaseVerdict::InputError => s.input_error += 1,
            }
        }
        RunReport { cases, summary: s, wall_time }
    }

    /// Worst case wins: any violation gives 1, then input errors 3, then strict unmet 2.
    pub fn exit_code(&self, strict: bool) -> i32 {
        let s = &self.summary;
        if s.violation > 0 {
            1
        } else if s.input_error > 0 {
            3
        } else if strict && s.hypothesis_unmet > 0 {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One row per (case, theorem, q).
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["case", "verdict", "theorem", "q", "p", "rhs", "lhs", "slack", "status", "reason"])?;
        let num = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
        for c in &self.cases {
            for b in &c.bounds {
                let status = match b.status {
                    BoundStatus::Checked => "checked",
                    BoundStatus::Violated => "violated",
                    BoundStatus::Skipped => "skipped",
                };
                w.write_record([
                    c.case.as_str(),
                    c.verdict.as_str(),
                    b.theorem.as_str(),
                    &num(b.q),
                    &num(b.p),
                    &num(b.rhs),
                    &num(b.lhs),
                    &num(b.slack),
                    status,
                    b.reason.as_deref().unwrap_or(""),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(name: &str, verdict: CaseVerdict) -> CaseReport {
        CaseReport { verdict, ..CaseReport::empty(name) }
    }

    #[test]
    fn exit_code_aggregation() {
        use CaseVerdict::*;
        let run = |vs: &[CaseVerdict]| RunReport::new(vs.iter().map(|&v| case("c", v)).collect(), Duration::ZERO);
        assert_eq!(run(&[]).exit_code(true), 0);
        assert_eq!(run(&[Pass, HypothesisUnmet]).exit_code(false), 0);
        assert_eq!(run(&[Pass, HypothesisUnmet]).exit_code(true), 2);
        assert_eq!(run(&[HypothesisUnmet, InputError]).exit_code(true), 3);
        assert_eq!(run(&[InputError, Violation, HypothesisUnmet]).exit_code(true), 1);
    }

    #[test]
    fn cases_sorted_and_counted() {
        let r = RunReport::new(vec![case("b", CaseVerdict::Pass), case("a", CaseVerdict::Violation)], Duration::from_secs(3));
        assert_eq!(r.cases[0].case, "a");
        assert_eq!(r.summary, Summary { total: 2, pass: 1, hypothesis_unmet: 0, violation: 1, input_error: 0 });
        assert!(!r.to_json().contains("wall"));
    }

    #[test]
    fn slack_classification() {
        let mut e = BoundEntry::pending(TheoremId::T3_1, None);
        let v = BoundValue { theorem: TheoremId::T3_1, q: None, p: None, rhs: 1.0, lhs: 1.0 + 5e-13, slack: -5e-13 };
        e.check(&v, 1e-12);
        assert_eq!(e.status, BoundStatus::Checked);
        e.check(&BoundValue { slack: -2e-12, ..v }, 1e-12);
        assert_eq!(e.status, BoundStatus::Violated);
    }

    #[test]
    fn csv_rows() {
        let mut c = case("x", CaseVerdict::Pass);
        let mut e = BoundEntry::pending(TheoremId::T3_2, Some(2.0));
        e.check(&BoundValue { theorem: TheoremId::T3_2, q: Some(2.0), p: Some(2.0), rhs: 0.5, lhs: 0.0, slack: 0.5 }, 1e-12);
        c.bounds.push(e);
        let mut s = BoundEntry::pending(TheoremId::T3_1, None);
        s.skip("no".into());
        c.bounds.push(s);
        let mut buf = Vec::new();
        RunReport::new(vec![c], Duration::ZERO).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "x,pass,T3.2,2.0,2.0,0.5,0.0,0.5,checked,");
        assert_eq!(lines[2], "x,pass,T3.1,,,,,,skipped,no");
    }
}
