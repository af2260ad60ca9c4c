//! The Simpson defect, the kernel integral identity, and the right-hand sides of the
//! preinvex / prequasiinvex bounds.
//!
//! Every bound has the form `|S - M| <= rhs`, where `S = (f(a) + 4 f(a + eta/2) + f(a + eta)) / 6`
//! and `M` is the mean of `f` over `[a, a + eta]`. The right-hand sides depend on `f` only
//! through `|f'(a)|` and `|f'(b)|`, so they are exposed both as pure functions of those
//! magnitudes and through [`SimpsonCase`], which also carries the defect.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{check_derivative, EvalError, Expr};
use crate::invexity::{Domain, EtaPath, InvexityError};
use crate::kernel::{self, moment_p};
use crate::property::{PropertyReport, Witness};
use crate::quadrature::{self, QuadratureError, QuadratureResult};

/// Interior sample count for the derivative gate.
pub const DERIVATIVE_GATE_POINTS: usize = 21;
/// Absolute agreement required between `F(hi) - F(lo)` and the numeric integral of `f`.
pub const ANTIDERIVATIVE_TOL: f64 = 1e-9;
/// Maximum `|f(a) - f(mid)|`, `|f(mid) - f(end)|` for the midpoint corollary.
pub const MIDPOINT_PRECONDITION_TOL: f64 = 1e-9;
/// Beyond this exponent power means are evaluated with max-scaling.
pub const LARGE_Q: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("InvalidEta: eta(b, a) = {0} must be positive")]
    InvalidEta(f64),
    #[error("DomainError: {0}")]
    Domain(#[from] InvexityError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("exponent q = {q} not allowed for {theorem} (needs {need})")]
    InvalidExponent { theorem: TheoremId, q: f64, need: &'static str },
    #[error("MissingFourthDerivative: the classical bound needs sup|f''''|")]
    MissingFourthDerivative,
    #[error("PreconditionUnmet: midpoint corollary needs f(a) = f(mid) = f(a + eta), got {fa}, {fm}, {fe}")]
    PreconditionUnmet { fa: f64, fm: f64, fe: f64 },
    #[error("derivative check failed: {0}")]
    DerivativeMismatch(String),
    #[error("antiderivative disagrees with quadrature by {0:e}")]
    AntiderivativeMismatch(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// `f`, `f'`, and optional exact-integral and fourth-derivative data on a domain.
#[derive(Debug, Clone)]
pub struct FunctionModel {
    pub name: String,
    pub f: Expr,
    pub df: Expr,
    pub antiderivative: Option<Expr>,
    pub d4sup: Option<f64>,
    pub domain: Domain,
    /// Derivative-gate report produced at construction.
    pub derivative_check: PropertyReport,
}

impl FunctionModel {
    /// Builds a model, rejecting it when `df` fails the finite-difference gate on `domain`
    /// or when `antiderivative` disagrees with quadrature of `f` over `domain`.
    pub fn new(
        name: impl Into<String>,
        f: Expr,
        df: Expr,
        antiderivative: Option<Expr>,
        d4sup: Option<f64>,
        domain: Domain,
    ) -> Result<FunctionModel, BoundsError> {
        if let Some(d4) = d4sup {
            if !(d4 >= 0.0 && d4.is_finite()) {
                return Err(BoundsError::InvalidModel(format!("d4sup must be a finite non-negative number, got {d4}")));
            }
        }
        let derivative_check = check_derivative(&f, &df, domain.lo(), domain.hi(), DERIVATIVE_GATE_POINTS)?;
        if !derivative_check.passed() {
            return Err(BoundsError::DerivativeMismatch(format!(
                "df disagrees with finite differences of f (relative mismatch {:.3e}{})",
                derivative_check.worst_violation,
                match derivative_check.witness {
                    Some(Witness::Point { x }) => format!(" at x = {x}"),
                    _ => String::new(),
                }
            )));
        }
        let model = FunctionModel { name: name.into(), f, df, antiderivative, d4sup, domain, derivative_check };
        if let Some(big_f) = &model.antiderivative {
            let exact = big_f.eval(&[domain.hi()])? - big_f.eval(&[domain.lo()])?;
            let numeric = model.integrate_f(domain.lo(), domain.hi(), ANTIDERIVATIVE_TOL * 1e-2)?;
            let gap = (exact - numeric.value).abs();
            if gap > ANTIDERIVATIVE_TOL + numeric.error_estimate {
                return Err(BoundsError::AntiderivativeMismatch(gap));
            }
        }
        Ok(model)
    }

    /// Parses the three expressions over `x` and builds the model.
    pub fn from_sources(
        name: impl Into<String>,
        f: &str,
        df: &str,
        antiderivative: Option<&str>,
        d4sup: Option<f64>,
        domain: Domain,
    ) -> Result<FunctionModel, ModelSourceError> {
        let parse =
            |field: &'static str, s: &str| Expr::parse(s, &["x"]).map_err(|e| ModelSourceError::Parse { field, error: e });
        let f = parse("f", f)?;
        let df = parse("df", df)?;
        let big_f = antiderivative.map(|s| parse("F", s)).transpose()?;
        Ok(FunctionModel::new(name, f, df, big_f, d4sup, domain)?)
    }

    pub fn f_at(&self, x: f64) -> Result<f64, EvalError> {
        self.f.eval(&[x])
    }

    pub fn df_at(&self, x: f64) -> Result<f64, EvalError> {
        self.df.eval(&[x])
    }

    fn integrate_f(&self, lo: f64, hi: f64, tol: f64) -> Result<QuadratureResult, BoundsError> {
        integrate_expr(|x| self.f.eval(&[x]), lo, hi, &[], tol)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelSourceError {
    #[error("field `{field}`: {error}")]
    Parse { field: &'static str, error: crate::expr::ParseError },
    #[error(transparent)]
    Model(#[from] BoundsError),
}

// Expression errors inside an integrand surface as NaN to the integrator; the first one is
// kept and reported instead of the generic non-finite error.
fn integrate_expr<G>(g: G, lo: f64, hi: f64, breakpoints: &[f64], tol: f64) -> Result<QuadratureResult, BoundsError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    let failure: RefCell<Option<EvalError>> = RefCell::new(None);
    let result = quadrature::integrate_with_breakpoints(
        |x| match g(x) {
            Ok(y) => y,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        breakpoints,
        tol,
    );
    match (result, failure.into_inner()) {
        (Err(_), Some(e)) => Err(BoundsError::Eval(e)),
        (r, _) => Ok(r?),
    }
}

/// Left-hand side shared by every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimpsonDefect {
    pub simpson_value: f64,
    pub mean_integral: f64,
    pub defect: f64,
    /// Error estimate on `mean_integral` (zero when an antiderivative was used).
    pub quadrature_error: f64,
}

fn check_path(model: &FunctionModel, a: f64, eta_val: f64) -> Result<EtaPath, BoundsError> {
    if !(eta_val > 0.0) {
        return Err(BoundsError::InvalidEta(eta_val));
    }
    Ok(EtaPath::new(a, eta_val, &model.domain)?)
}

pub fn simpson_defect(model: &FunctionModel, a: f64, eta_val: f64, oracle_tol: f64) -> Result<SimpsonDefect, BoundsError> {
    let path = check_path(model, a, eta_val)?;
    let end = path.end();
    let fa = model.f_at(a)?;
    let fm = model.f_at(path.point(0.5))?;
    let fe = model.f_at(end)?;
    let simpson_value = (fa + 4.0 * fm + fe) / 6.0;
    let (mean_integral, quadrature_error) = match &model.antiderivative {
        Some(big_f) => ((big_f.eval(&[end])? - big_f.eval(&[a])?) / eta_val, 0.0),
        None => {
            let r = model.integrate_f(a, end, oracle_tol * eta_val)?;
            (r.value / eta_val, r.error_estimate / eta_val)
        }
    };
    Ok(SimpsonDefect { simpson_value, mean_integral, defect: simpson_value - mean_integral, quadrature_error })
}

fn kernel_m(t: f64) -> f64 {
    if t < 0.5 {
        t - 1.0 / 6.0
    } else {
        t - 5.0 / 6.0
    }
}

/// `eta · ∫_0^1 m(t) f'(a + t·eta) dt`, integrated panel-wise at the kernel's kinks and jump.
/// The returned error estimate is already scaled by `eta`.
pub fn lemma_rhs(model: &FunctionModel, a: f64, eta_val: f64, oracle_tol: f64) -> Result<QuadratureResult, BoundsError> {
    check_path(model, a, eta_val)?;
    let r = integrate_expr(
        |t| Ok(kernel_m(t) * model.df_at(a + t * eta_val)?),
        0.0,
        1.0,
        &[1.0 / 6.0, 0.5, 5.0 / 6.0],
        oracle_tol / eta_val,
    )?;
    Ok(QuadratureResult { value: eta_val * r.value, error_estimate: eta_val * r.error_estimate, evaluations: r.evaluations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "T3.1")]
    T3_1,
    #[serde(rename = "T3.2")]
    T3_2,
    #[serde(rename = "T3.3")]
    T3_3,
    #[serde(rename = "T3.4")]
    T3_4,
    #[serde(rename = "T4.1")]
    T4_1,
    #[serde(rename = "T4.2")]
    T4_2,
    #[serde(rename = "T4.3")]
    T4_3,
    #[serde(rename = "C4.1")]
    C4_1,
    #[serde(rename = "C4.2")]
    C4_2,
    #[serde(rename = "CLASSICAL")]
    Classical,
}

/// Which property of `|f'|^q` a theorem assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Preinvex,
    Prequasiinvex,
    None,
}

/// How a theorem uses the exponent list of a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentUse {
    /// No exponent (or a fixed q = 1).
    Fixed,
    /// Every q >= 1.
    AtLeastOne,
    /// Every q > 1, with conjugate p = q / (q - 1).
    Conjugate,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        TheoremId::T3_1,
        TheoremId::T3_2,
        TheoremId::T3_3,
        TheoremId::T3_4,
        TheoremId::T4_1,
        TheoremId::T4_2,
        TheoremId::T4_3,
        TheoremId::C4_1,
        TheoremId::C4_2,
        TheoremId::Classical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::T3_1 => "T3.1",
            TheoremId::T3_2 => "T3.2",
            TheoremId::T3_3 => "T3.3",
            TheoremId::T3_4 => "T3.4",
            TheoremId::T4_1 => "T4.1",
            TheoremId::T4_2 => "T4.2",
            TheoremId::T4_3 => "T4.3",
            TheoremId::C4_1 => "C4.1",
            TheoremId::C4_2 => "C4.2",
            TheoremId::Classical => "CLASSICAL",
        }
    }

    pub fn hypothesis(self) -> Hypothesis {
        match self {
            TheoremId::T3_1 | TheoremId::T3_2 | TheoremId::T3_3 | TheoremId::T3_4 => Hypothesis::Preinvex,
            TheoremId::T4_1 | TheoremId::T4_2 | TheoremId::T4_3 | TheoremId::C4_1 | TheoremId::C4_2 => Hypothesis::Prequasiinvex,
            TheoremId::Classical => Hypothesis::None,
        }
    }

    pub fn exponent_use(self) -> ExponentUse {
        match self {
            TheoremId::T3_2 | TheoremId::T3_3 | TheoremId::T4_2 | TheoremId::T4_3 => ExponentUse::Conjugate,
            TheoremId::T3_4 | TheoremId::T4_1 => ExponentUse::AtLeastOne,
            _ => ExponentUse::Fixed,
        }
    }

    /// Exponent at which the hypothesis is checked when the theorem is used with `q`.
    pub fn hypothesis_exponent(self, q: Option<f64>) -> f64 {
        match self.exponent_use() {
            ExponentUse::Fixed => 1.0,
            _ => q.unwrap_or(1.0),
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TheoremId::ALL.into_iter().find(|t| t.as_str().eq_ignore_ascii_case(s)).ok_or_else(|| format!("unknown theorem `{s}`"))
    }
}

/// `p = q / (q - 1)`.
pub fn conjugate(q: f64) -> f64 {
    q / (q - 1.0)
}

/// `(∑ w_i x_i^q)^{1/q}` for non-negative `x_i`.
pub fn power_mean(weights: &[f64], xs: &[f64], q: f64) -> f64 {
    if q == 1.0 {
        return weights.iter().zip(xs).map(|(w, x)| w * x).sum();
    }
    if q > LARGE_Q {
        let m = xs.iter().copied().fold(0.0_f64, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = weights.iter().zip(xs).map(|(w, x)| w * (x / m).powf(q)).sum();
        return m * s.powf(1.0 / q);
    }
    let s: f64 = weights.iter().zip(xs).map(|(w, x)| w * x.powf(q)).sum();
    s.powf(1.0 / q)
}

/// `moment_p(p)^{1/p}`, through logs when the moment itself is tiny.
fn moment_root(p: f64) -> f64 {
    if p > kernel::LOG_SPACE_THRESHOLD {
        (kernel::ln_moment_p(p).expect("p >= 1") / p).exp()
    } else {
        moment_p(p).expect("p >= 1").powf(1.0 / p)
    }
}

fn two_moment_root(p: f64) -> f64 {
    2f64.powf(1.0 / p) * moment_root(p)
}

fn require_q(theorem: TheoremId, q: f64) -> Result<f64, BoundsError> {
    let ok = match theorem.exponent_use() {
        ExponentUse::Conjugate => q > 1.0 && q.is_finite(),
        ExponentUse::AtLeastOne => q >= 1.0 && q.is_finite(),
        ExponentUse::Fixed => true,
    };
    if ok {
        Ok(q)
    } else {
        let need = if theorem.exponent_use() == ExponentUse::Conjugate { "q > 1" } else { "q >= 1" };
        Err(BoundsError::InvalidExponent { theorem, q, need })
    }
}

/// `(5/72) eta (|f'(a)| + |f'(b)|)`.
pub fn rhs_t3_1(eta: f64, da: f64, db: f64) -> f64 {
    5.0 / 72.0 * eta * (da + db)
}

/// Hölder on each half of the kernel, with weights `(3/8, 1/8)` and `(1/8, 3/8)`.
pub fn rhs_t3_2(eta: f64, da: f64, db: f64, q: f64) -> Result<f64, BoundsError> {
    require_q(TheoremId::T3_2, q)?;
    let (w_big, w_small) = kernel::half_weights();
    let p = conjugate(q);
    let halves = power_mean(&[w_big, w_small], &[da, db], q) + power_mean(&[w_small, w_big], &[da, db], q);
    Ok(eta * moment_root(p) * halves)
}

/// Hölder over the whole kernel.
pub fn rhs_t3_3(eta: f64, da: f64, db: f64, q: f64) -> Result<f64, BoundsError> {
    require_q(TheoremId::T3_3, q)?;
    let p = conjugate(q);
    Ok(eta * two_moment_root(p) * power_mean(&[0.5, 0.5], &[da, db], q))
}

/// Power-mean estimate with weighted kernel moments `(61, 29)/1296` and `(29, 61)/1296`.
pub fn rhs_t3_4(eta: f64, da: f64, db: f64, q: f64) -> Result<f64, BoundsError> {
    require_q(TheoremId::T3_4, q)?;
    let (la, lb, ra, rb) = kernel::weighted_moments();
    let first = moment_p(1.0).expect("p = 1");
    let halves = power_mean(&[la, lb], &[da, db], q) + power_mean(&[ra, rb], &[da, db], q);
    Ok(eta * first.powf(1.0 - 1.0 / q) * halves)
}

/// `(5/36) eta max(|f'(a)|^q, |f'(b)|^q)^{1/q}`, which is `(5/36) eta max(|f'(a)|, |f'(b)|)`.
pub fn rhs_t4_1(eta: f64, da: f64, db: f64, q: f64) -> Result<f64, BoundsError> {
    require_q(TheoremId::T4_1, q)?;
    Ok(5.0 / 36.0 * eta * da.max(db))
}

/// `2 eta moment_p(p)^{1/p} (max/2)^{1/q}`.
pub fn rhs_t4_2(eta: f64, da: f64, db: f64, q: f64) -> Result<f64, BoundsError> {
    require_q(TheoremId::T4_2, q)?;
    let p = conjugate(q);
    Ok(2.0 * eta * moment_root(p) * da.max(db) * 0.5f64.powf(1.0 / q))
}

/// `eta (2 moment_p(p))^{1/p} (max/2)^{1/q}`.
pub fn rhs_t4_3(eta: f64, da: f64, db: f64, q: f64) -> Result<f64, BoundsError> {
    require_q(TheoremId::T4_3, q)?;
    let p = conjugate(q);
    Ok(eta * two_moment_root(p) * da.max(db) * 0.5f64.powf(1.0 / q))
}

/// `(5/36) eta max(|f'(a)|, |f'(b)|)`, shared by both corollaries.
pub fn rhs_c4(eta: f64, da: f64, db: f64) -> f64 {
    5.0 / 36.0 * eta * da.max(db)
}

/// `sup|f''''| eta^4 / 2880`.
pub fn rhs_classical(eta: f64, d4sup: f64) -> f64 {
    d4sup * eta.powi(4) / 2880.0
}

/// One theorem's right-hand side next to the left-hand side it bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub theorem: TheoremId,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub rhs: f64,
    /// `|defect|`, or `|f(mid) - mean|` for the midpoint corollary.
    pub lhs: f64,
    /// `rhs - (lhs - quadrature_error)`; negative beyond the slack tolerance is a violation.
    pub slack: f64,
}

/// A model, the pair `(a, b)` and `eta(b, a)`, with the defect and `|f'|` at `a`, `b`.
#[derive(Debug, Clone)]
pub struct SimpsonCase<'m> {
    pub model: &'m FunctionModel,
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub defect: SimpsonDefect,
    pub da: f64,
    pub db: f64,
}

impl<'m> SimpsonCase<'m> {
    pub fn new(model: &'m FunctionModel, a: f64, b: f64, eta_val: f64, oracle_tol: f64) -> Result<SimpsonCase<'m>, BoundsError> {
        let defect = simpson_defect(model, a, eta_val, oracle_tol)?;
        let da = model.df_at(a)?.abs();
        let db = model.df_at(b)?.abs();
        Ok(SimpsonCase { model, a, b, eta: eta_val, defect, da, db })
    }

    pub fn lemma_rhs(&self, oracle_tol: f64) -> Result<QuadratureResult, BoundsError> {
        lemma_rhs(self.model, self.a, self.eta, oracle_tol)
    }

    /// Checks the midpoint corollary's precondition and returns `|f(mid) - mean|`.
    pub fn midpoint_lhs(&self) -> Result<f64, BoundsError> {
        let fa = self.model.f_at(self.a)?;
        let fm = self.model.f_at(self.a + self.eta / 2.0)?;
        let fe = self.model.f_at(self.a + self.eta)?;
        if (fa - fm).abs() > MIDPOINT_PRECONDITION_TOL || (fm - fe).abs() > MIDPOINT_PRECONDITION_TOL {
            return Err(BoundsError::PreconditionUnmet { fa, fm, fe });
        }
        Ok((fm - self.defect.mean_integral).abs())
    }

    /// Evaluates `theorem` at exponent `q` (ignored by theorems without one).
    pub fn bound(&self, theorem: TheoremId, q: Option<f64>) -> Result<BoundValue, BoundsError> {
        let (eta, da, db) = (self.eta, self.da, self.db);
        let need_q = || q.ok_or(BoundsError::InvalidExponent { theorem, q: f64::NAN, need: "an exponent" });
        let mut lhs = self.defect.defect.abs();
        let (rhs, q_out, p_out) = match theorem {
            TheoremId::T3_1 => (rhs_t3_1(eta, da, db), None, None),
            TheoremId::T3_2 => {
                let q = need_q()?;
                (rhs_t3_2(eta, da, db, q)?, Some(q), Some(conjugate(q)))
            }
            TheoremId::T3_3 => {
                let q = need_q()?;
                (rhs_t3_3(eta, da, db, q)?, Some(q), Some(conjugate(q)))
            }
            TheoremId::T3_4 => {
                let q = need_q()?;
                (rhs_t3_4(eta, da, db, q)?, Some(q), None)
            }
            TheoremId::T4_1 => {
                let q = need_q()?;
                (rhs_t4_1(eta, da, db, q)?, Some(q), None)
            }
            TheoremId::T4_2 => {
                let q = need_q()?;
                (rhs_t4_2(eta, da, db, q)?, Some(q), Some(conjugate(q)))
            }
            TheoremId::T4_3 => {
                let q = need_q()?;
                (rhs_t4_3(eta, da, db, q)?, Some(q), Some(conjugate(q)))
            }
            TheoremId::C4_1 => (rhs_c4(eta, da, db), Some(1.0), None),
            TheoremId::C4_2 => {
                lhs = self.midpoint_lhs()?;
                (rhs_c4(eta, da, db), Some(1.0), None)
            }
            TheoremId::Classical => {
                let d4 = self.model.d4sup.ok_or(BoundsError::MissingFourthDerivative)?;
                (rhs_classical(eta, d4), None, None)
            }
        };
        let slack = rhs - (lhs - self.defect.quadrature_error);
        Ok(BoundValue { theorem, q: q_out, p: p_out, rhs, lhs, slack })
    }
}
