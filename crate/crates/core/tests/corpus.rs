use simpson_invex::bounds::TheoremId;
use simpson_invex::runner::{run_config, run_corpus, BoundStatus, CaseConfig, CaseVerdict, RunOptions};

fn fixture(name: &str) -> CaseConfig {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    CaseConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn full_corpus_verdicts() {
    let report = run_corpus(None, &RunOptions::default());
    assert!(report.cases.len() >= 12);
    for c in &report.cases {
        let want = if c.case == "sin_unmet" { CaseVerdict::HypothesisUnmet } else { CaseVerdict::Pass };
        assert_eq!(c.verdict, want, "{}: {:?} {:?}", c.case, c.notes, c.error);
    }
    assert_eq!(report.exit_code(false), 0);
    assert_eq!(report.exit_code(true), 2);
    let names: Vec<_> = report.cases.iter().map(|c| c.case.clone()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn quartic_filter() {
    let report = run_corpus(Some("x4"), &RunOptions::default());
    assert_eq!(report.cases.len(), 1);
    let c = &report.cases[0];
    assert!((c.defect.unwrap() - 1.0 / 120.0).abs() < 1e-12);
    let classical = c.bounds.iter().find(|b| b.theorem == TheoremId::Classical).unwrap();
    assert!((classical.rhs.unwrap() - 1.0 / 120.0).abs() < 1e-12);
    assert!(classical.slack.unwrap() >= -1e-12);
}

#[test]
fn golden_values_hold() {
    let report = run_corpus(None, &RunOptions::default());
    let checked: usize = report.cases.iter().map(|c| c.golden.len()).sum();
    assert!(checked >= 10);
    for c in &report.cases {
        for g in &c.golden {
            assert!(g.ok, "{}: {g:?}", c.case);
        }
    }
}

#[test]
fn midpoint_case_uses_corollary() {
    let report = run_corpus(Some("sin_midpoint"), &RunOptions::default());
    let c = &report.cases[0];
    let mid = c.bounds.iter().find(|b| b.theorem == TheoremId::C4_2).unwrap();
    assert_eq!(mid.status, BoundStatus::Checked);
    assert!(mid.lhs.unwrap() < 1e-12);
    assert!((mid.rhs.unwrap() - 5.0 / 36.0 * 2.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn fixtures_are_rejected() {
    let bad = run_config(&fixture("bad_df.json"), &RunOptions::default());
    assert_eq!(bad.verdict, CaseVerdict::InputError);
    assert!(bad.error.unwrap().contains("derivative"));
    let eta = run_config(&fixture("invalid_eta.json"), &RunOptions::default());
    assert_eq!(eta.verdict, CaseVerdict::InputError);
    assert!(eta.error.unwrap().contains("InvalidEta"));
}
