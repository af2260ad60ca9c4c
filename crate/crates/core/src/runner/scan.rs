//! Grid search for the largest `|defect| / rhs` each theorem admits.

use serde::Serialize;
use thiserror::Error;

use super::config::Tolerances;
use super::{exponents_for, mode_of, HypothesisCache};
use crate::bounds::{BoundsError, FunctionModel, SimpsonCase, TheoremId};
use crate::expr::EvalError;
use crate::invexity::{check_invex_set, EtaMap, GridSpec, DEFAULT_TOL};

/// `K` is the model's domain.
#[derive(Debug, Clone)]
pub struct ScanSpec {
    pub model: FunctionModel,
    pub eta: EtaMap,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub q_list: Vec<f64>,
    pub steps: usize,
    /// `None` scans every theorem the model supports.
    pub theorems: Option<Vec<TheoremId>>,
    pub tolerances: Tolerances,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("{0}")]
    Bounds(#[from] BoundsError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Ok,
    AllCellsSkipped,
    HypothesisUnmet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessResult {
    pub theorem: TheoremId,
    pub status: ScanStatus,
    /// Largest `lhs / rhs` over evaluated cells.
    pub ratio: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub q: Option<f64>,
    pub evaluated: usize,
    pub skipped: usize,
    /// Cells whose slack fell below `-tolerances.slack`.
    pub violations: usize,
}

impl TightnessResult {
    fn new(theorem: TheoremId) -> TightnessResult {
        TightnessResult {
            theorem,
            status: ScanStatus::AllCellsSkipped,
            ratio: None,
            a: None,
            b: None,
            q: None,
            evaluated: 0,
            skipped: 0,
            violations: 0,
        }
    }

    fn offer(&mut self, ratio: f64, a: f64, b: f64, q: Option<f64>) {
        let better = match self.ratio {
            None => true,
            Some(r) => ratio > r || (ratio == r && lex_less((a, b, q), (self.a.unwrap(), self.b.unwrap(), self.q))),
        };
        if better {
            self.ratio = Some(ratio);
            (self.a, self.b, self.q) = (Some(a), Some(b), q);
        }
    }
}

fn lex_less(x: (f64, f64, Option<f64>), y: (f64, f64, Option<f64>)) -> bool {
    x.0.total_cmp(&y.0)
        .then(x.1.total_cmp(&y.1))
        .then_with(|| match (x.2, y.2) {
            (Some(p), Some(q)) => p.total_cmp(&q),
            (p, q) => p.is_some().cmp(&q.is_some()),
        })
        .is_lt()
}

fn axis(field: &'static str, (lo, hi): (f64, f64), steps: usize, spec: &ScanSpec) -> Result<Vec<f64>, ScanError> {
    let k = spec.model.domain;
    if !(lo <= hi) || !k.contains(lo, 0.0) || !k.contains(hi, 0.0) {
        return Err(ScanError::Invalid {
            field,
            message: format!("[{lo}, {hi}] must be an ordered range inside K = [{}, {}]", k.lo(), k.hi()),
        });
    }
    if lo == hi {
        return Ok(vec![lo]);
    }
    Ok((0..steps).map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 }).collect())
}

/// Scans `(a, b, q)` over the grid. Hypotheses are checked once on `K`; cells with
/// `eta(b, a) <= 0`, a path leaving `K`, `rhs = 0` or an unmet midpoint precondition are skipped.
pub fn tightness_scan(spec: &ScanSpec) -> Result<Vec<TightnessResult>, ScanError> {
    if spec.steps < 2 {
        return Err(ScanError::Invalid { field: "steps", message: format!("need at least 2, got {}", spec.steps) });
    }
    if spec.q_list.is_empty() || spec.q_list.iter().any(|q| !(*q >= 1.0 && q.is_finite())) {
        return Err(ScanError::Invalid {
            field: "q",
            message: "exponents must be a non-empty list of finite values >= 1".into(),
        });
    }
    let theorems: Vec<TheoremId> = match &spec.theorems {
        Some(t) => {
            if t.contains(&TheoremId::Classical) && spec.model.d4sup.is_none() {
                return Err(BoundsError::MissingFourthDerivative.into());
            }
            t.clone()
        }
        None => TheoremId::ALL.into_iter().filter(|t| *t != TheoremId::Classical || spec.model.d4sup.is_some()).collect(),
    };
    let a_axis = axis("a_range", spec.a_range, spec.steps, spec)?;
    let b_axis = axis("b_range", spec.b_range, spec.steps, spec)?;
    let k = spec.model.domain;

    let invex_ok = check_invex_set(&k, &spec.eta, &spec.grid)?.passed();
    let mut cache = HypothesisCache::new(&spec.model, &spec.eta, &spec.grid, spec.tolerances.invexity);
    // per theorem: the exponents whose hypothesis holds
    let mut plan = Vec::new();
    for &t in &theorems {
        let mut ok = Vec::new();
        for q in exponents_for(t, &spec.q_list) {
            let holds = match mode_of(t.hypothesis()) {
                None => true,
                Some(mode) => invex_ok && cache.get(mode, t.hypothesis_exponent(q))?.passed(),
            };
            if holds {
                ok.push(q);
            }
        }
        plan.push((t, ok));
    }

    let mut results: Vec<TightnessResult> = theorems.iter().map(|&t| TightnessResult::new(t)).collect();
    for &a in &a_axis {
        for &b in &b_axis {
            let eta_val = spec.eta.eval(b, a)?;
            let usable = eta_val > 0.0 && k.contains(a + eta_val, DEFAULT_TOL);
            let sc = if usable { Some(SimpsonCase::new(&spec.model, a, b, eta_val, spec.tolerances.oracle)?) } else { None };
            for ((theorem, qs), res) in plan.iter().zip(results.iter_mut()) {
                let Some(sc) = &sc else {
                    res.skipped += qs.len().max(1);
                    continue;
                };
                for &q in qs {
                    let v = match sc.bound(*theorem, q) {
                        Ok(v) => v,
                        Err(BoundsError::PreconditionUnmet { .. }) => {
                            res.skipped += 1;
                            continue;
                        }
                        Err(e) => return Err(e.into()),
                    };
                    if !(v.rhs > 0.0) {
                        res.skipped += 1;
                        continue;
                    }
                    res.evaluated += 1;
                    if v.slack < -spec.tolerances.slack {
                        res.violations += 1;
                    }
                    res.offer(v.lhs / v.rhs, a, b, v.q.or(q));
                }
            }
        }
    }
    for ((_, qs), res) in plan.iter().zip(results.iter_mut()) {
        res.status = if res.evaluated > 0 {
            ScanStatus::Ok
        } else if qs.is_empty() {
            ScanStatus::HypothesisUnmet
        } else {
            ScanStatus::AllCellsSkipped
        };
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invexity::Domain;

    fn spec(f: &str, df: &str, d4: Option<f64>, a: (f64, f64), b: (f64, f64), theorems: Option<Vec<TheoremId>>) -> ScanSpec {
        let model = FunctionModel::from_sources("s", f, df, None, d4, Domain::new(0.0, 1.0).unwrap()).unwrap();
        ScanSpec {
            model,
            eta: EtaMap::difference(),
            a_range: a,
            b_range: b,
            q_list: vec![1.0, 2.0],
            steps: 5,
            theorems,
            tolerances: Tolerances::default(),
            grid: GridSpec::grid(11, 11, 6),
        }
    }

    #[test]
    fn quartic_classical_is_sharp() {
        let r =
            tightness_scan(&spec("x^4", "4*x^3", Some(24.0), (0.0, 0.0), (1.0, 1.0), Some(vec![TheoremId::Classical]))).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].status, ScanStatus::Ok);
        assert!((r[0].ratio.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!((r[0].a, r[0].b), (Some(0.0), Some(1.0)));
    }

    #[test]
    fn exp_first_bound_ratio() {
        let r = tightness_scan(&spec("exp(x)", "exp(x)", None, (0.0, 0.0), (1.0, 1.0), Some(vec![TheoremId::T3_1]))).unwrap();
        let ratio = r[0].ratio.unwrap();
        assert!((ratio - 5.793_234_175_477_351e-4 / 0.258_214_015_865_211_5).abs() < 1e-9, "{ratio}");
        assert!((ratio - 2.2435e-3).abs() < 1e-7);
    }

    #[test]
    fn cubic_ratios_vanish() {
        let r = tightness_scan(&spec("x^3", "3*x^2", Some(0.0), (0.0, 0.5), (0.5, 1.0), None)).unwrap();
        for t in &r {
            if t.theorem == TheoremId::Classical {
                // rhs = 0 everywhere
                assert_eq!(t.status, ScanStatus::AllCellsSkipped);
            } else if t.theorem == TheoremId::C4_2 {
                assert_eq!(t.status, ScanStatus::AllCellsSkipped);
            } else {
                assert_eq!(t.status, ScanStatus::Ok, "{t:?}");
                assert!(t.ratio.unwrap() < 1e-12, "{t:?}");
            }
        }
    }

    #[test]
    fn exp_ratios_at_most_one() {
        let r = tightness_scan(&spec("exp(x)", "exp(x)", Some(std::f64::consts::E), (0.0, 0.5), (0.5, 1.0), None)).unwrap();
        for t in r.iter().filter(|t| t.status == ScanStatus::Ok) {
            assert!(t.ratio.unwrap() <= 1.0 + 1e-12, "{t:?}");
            assert_eq!(t.violations, 0);
        }
    }

    #[test]
    fn reversed_pairs_are_skipped() {
        let r = tightness_scan(&spec("x^2", "2*x", None, (0.5, 1.0), (0.0, 0.25), Some(vec![TheoremId::T3_1]))).unwrap();
        assert_eq!(r[0].status, ScanStatus::AllCellsSkipped);
        assert_eq!(r[0].skipped, 25);
    }

    #[test]
    fn unmet_hypothesis_reported() {
        let model = FunctionModel::from_sources("s", "sin(x)", "cos(x)", None, None, Domain::new(0.0, 3.0).unwrap()).unwrap();
        let s = ScanSpec {
            model,
            a_range: (0.0, 1.0),
            b_range: (2.0, 3.0),
            theorems: Some(vec![TheoremId::T3_1, TheoremId::T4_1]),
            ..spec("x", "1", None, (0.0, 0.0), (1.0, 1.0), None)
        };
        let r = tightness_scan(&s).unwrap();
        assert_eq!(r[0].status, ScanStatus::HypothesisUnmet);
        assert_eq!(r[1].status, ScanStatus::Ok);
    }

    #[test]
    fn input_validation() {
        let mut s = spec("x^2", "2*x", None, (0.0, 0.5), (0.5, 1.0), None);
        s.steps = 1;
        assert!(matches!(tightness_scan(&s), Err(ScanError::Invalid { field: "steps", .. })));
        s.steps = 3;
        s.a_range = (0.5, 2.0);
        assert!(matches!(tightness_scan(&s), Err(ScanError::Invalid { field: "a_range", .. })));
        s.a_range = (0.0, 0.5);
        s.theorems = Some(vec![TheoremId::Classical]);
        assert_eq!(tightness_scan(&s), Err(ScanError::Bounds(BoundsError::MissingFourthDerivative)));
    }
}
