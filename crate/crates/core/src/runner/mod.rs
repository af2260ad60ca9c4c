//! Case loading, the per-case check pipeline, corpus runs and tightness scans.
//!
//! A case runs as: invex-set gate, hypothesis checks per (theorem, q), defect and kernel
//! identity, then every applicable bound. A theorem whose hypothesis fails on samples is
//! reported as `skipped`; only a checked bound with negative slack is a violation.

pub mod config;
pub mod corpus;
pub mod report;
pub mod scan;

use std::collections::BTreeMap;

pub use config::{CaseConfig, CaseError, CorpusCase, EtaConfig, ExpectedBound, ToleranceOverrides, Tolerances};
pub use corpus::{bundled_configs, run_corpus};
pub use report::{BoundEntry, BoundStatus, CaseReport, CaseVerdict, GoldenCheck, RunReport, Summary};
pub use scan::{tightness_scan, ScanError, ScanSpec, ScanStatus, TightnessResult};

use crate::bounds::{ExponentUse, FunctionModel, Hypothesis, SimpsonCase, TheoremId};
use crate::expr::EvalError;
use crate::invexity::{check_invex_set, hypothesis_check, EtaMap, GridSpec, Mode};
use crate::property::PropertyReport;

/// Absolute slack allowed between the defect and the kernel integral, on top of both
/// quadrature error estimates.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub overrides: ToleranceOverrides,
    pub grid: GridSpec,
}

pub(crate) fn mode_of(h: Hypothesis) -> Option<Mode> {
    match h {
        Hypothesis::Preinvex => Some(Mode::Preinvex),
        Hypothesis::Prequasiinvex => Some(Mode::Prequasiinvex),
        Hypothesis::None => None,
    }
}

/// The exponents at which `theorem` is evaluated for the case's `q_list`.
pub(crate) fn exponents_for(theorem: TheoremId, q_list: &[f64]) -> Vec<Option<f64>> {
    match theorem.exponent_use() {
        ExponentUse::Fixed => vec![None],
        ExponentUse::AtLeastOne => q_list.iter().map(|&q| Some(q)).collect(),
        ExponentUse::Conjugate => q_list.iter().filter(|&&q| q > 1.0).map(|&q| Some(q)).collect(),
    }
}

/// Hypothesis reports keyed by `(mode, q)`, computed on demand and kept in first-use order.
pub(crate) struct HypothesisCache<'c> {
    model: &'c FunctionModel,
    eta: &'c EtaMap,
    grid: &'c GridSpec,
    tol: f64,
    index: BTreeMap<(u8, u64), usize>,
    pub reports: Vec<PropertyReport>,
}

impl<'c> HypothesisCache<'c> {
    pub(crate) fn new(model: &'c FunctionModel, eta: &'c EtaMap, grid: &'c GridSpec, tol: f64) -> Self {
        HypothesisCache { model, eta, grid, tol, index: BTreeMap::new(), reports: Vec::new() }
    }

    pub(crate) fn get(&mut self, mode: Mode, q: f64) -> Result<&PropertyReport, EvalError> {
        let key = (mode as u8, q.to_bits());
        let i = match self.index.get(&key) {
            Some(&i) => i,
            None => {
                let r = hypothesis_check(self.model, self.eta, &self.model.domain, q, mode, self.grid, self.tol)?;
                self.reports.push(r);
                self.index.insert(key, self.reports.len() - 1);
                self.reports.len() - 1
            }
        };
        Ok(&self.reports[i])
    }
}

fn theorem_list(case: &CorpusCase, sc: &SimpsonCase<'_>) -> Result<Vec<TheoremId>, CaseError> {
    match &case.theorems {
        Some(list) => {
            let mut seen = Vec::new();
            for t in list {
                if !seen.contains(t) {
                    seen.push(*t);
                }
            }
            if seen.contains(&TheoremId::C4_2) {
                sc.midpoint_lhs()?;
            }
            Ok(seen)
        }
        None => Ok(TheoremId::ALL
            .into_iter()
            .filter(|t| match t {
                TheoremId::Classical => case.model.d4sup.is_some(),
                TheoremId::C4_2 => sc.midpoint_lhs().is_ok(),
                _ => true,
            })
            .collect()),
    }
}

/// Runs every check on a validated case.
pub fn run_case(case: &CorpusCase, grid: &GridSpec) -> CaseReport {
    let mut report = CaseReport::empty(&case.name);
    report.eta_value = Some(case.eta_value);
    if let Err(e) = run_case_into(case, grid, &mut report) {
        report.fail_input(e);
    }
    report
}

fn run_case_into(case: &CorpusCase, grid: &GridSpec, report: &mut CaseReport) -> Result<(), CaseError> {
    let tol = case.tolerances;
    report.hypotheses.push(case.model.derivative_check.clone());
    let invex = check_invex_set(&case.domain, &case.eta, grid)?;
    let invex_ok = invex.passed();
    report.hypotheses.push(invex);
    if !invex_ok {
        report.notes.push(format!("K is not invex under eta `{}`; hypothesis-dependent theorems skipped", case.eta.name));
    }

    let sc = SimpsonCase::new(&case.model, case.a, case.b, case.eta_value, tol.oracle)?;
    let lemma = sc.lemma_rhs(tol.oracle)?;
    report.simpson_value = Some(sc.defect.simpson_value);
    report.mean_integral = Some(sc.defect.mean_integral);
    report.defect = Some(sc.defect.defect);
    report.quadrature_error = Some(sc.defect.quadrature_error);
    report.lemma_rhs = Some(lemma.value);
    report.lemma_error = Some(lemma.error_estimate);
    let residual = (sc.defect.defect - lemma.value).abs();
    report.identity_residual = Some(residual);
    let identity_ok = residual <= IDENTITY_TOL + sc.defect.quadrature_error + lemma.error_estimate;
    if !identity_ok {
        report.notes.push(format!("kernel identity residual {residual:e} exceeds its tolerance"));
    }

    let theorems = theorem_list(case, &sc)?;
    let mut cache = HypothesisCache::new(&case.model, &case.eta, grid, tol.invexity);
    let mut noted = Vec::new();
    for theorem in theorems {
        for q in exponents_for(theorem, &case.q_list) {
            let mut entry = BoundEntry::pending(theorem, q);
            if let Some(mode) = mode_of(theorem.hypothesis()) {
                let hq = theorem.hypothesis_exponent(q);
                if !invex_ok {
                    entry.skip("K is not invex under eta".into());
                    report.bounds.push(entry);
                    continue;
                }
                if !cache.get(mode, hq)?.passed() {
                    let power = if hq == 1.0 { "|f'|".to_string() } else { format!("|f'|^{hq}") };
                    entry.skip(format!("{power} is not {} on samples", mode_name(mode)));
                    report.bounds.push(entry);
                    if hq != 1.0 && cache.get(mode, 1.0)?.passed() && !noted.contains(&(mode, hq.to_bits())) {
                        noted.push((mode, hq.to_bits()));
                        report.notes.push(format!("|f'| is {} but |f'|^{hq} is not", mode_name(mode)));
                    }
                    continue;
                }
            }
            let value = sc.bound(theorem, q)?;
            entry.check(&value, tol.slack);
            report.bounds.push(entry);
        }
    }
    report.hypotheses.extend(cache.reports);

    for exp in &case.expected {
        let actual =
            report.bounds.iter().find(|b| b.theorem == exp.theorem && (exp.q.is_none() || b.q == exp.q)).and_then(|b| b.rhs);
        let actual = match actual {
            Some(v) => Some(v),
            None => sc.bound(exp.theorem, exp.q).ok().map(|b| b.rhs),
        };
        report.golden.push(GoldenCheck::new(exp, actual));
    }

    let violated = report.bounds.iter().any(|b| b.status == BoundStatus::Violated);
    let golden_failed = report.golden.iter().any(|g| !g.ok);
    let skipped = report.bounds.iter().any(|b| b.status == BoundStatus::Skipped);
    report.verdict = if violated || !identity_ok || golden_failed {
        CaseVerdict::Violation
    } else if skipped || !invex_ok {
        CaseVerdict::HypothesisUnmet
    } else {
        CaseVerdict::Pass
    };
    Ok(())
}

pub(crate) fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Preinvex => "preinvex",
        Mode::Prequasiinvex => "prequasiinvex",
    }
}

/// Validates and runs one config; load failures become an `input_error` report.
pub fn run_config(config: &CaseConfig, options: &RunOptions) -> CaseReport {
    match CorpusCase::from_config(config, &options.overrides) {
        Ok(case) => run_case(&case, &options.grid),
        Err(e) => {
            let mut r = CaseReport::empty(&config.name);
            r.fail_input(e);
            r
        }
    }
}
