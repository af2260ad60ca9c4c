//! JSON case files and their validation into runnable cases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundsError, FunctionModel, ModelSourceError, TheoremId};
use crate::expr::{EvalError, ParseError};
use crate::invexity::{Domain, EtaMap, DEFAULT_TOL};
use crate::quadrature::ORACLE_TOL;

pub const DEFAULT_Q: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

/// Numeric knobs; every field falls back to its default when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute quadrature tolerance for means and the kernel identity.
    pub oracle: f64,
    /// A bound is violated when its slack drops below `-slack`.
    pub slack: f64,
    /// Excess allowed by the sampled invexity / preinvexity checks.
    pub invexity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { oracle: ORACLE_TOL, slack: 1e-12, invexity: DEFAULT_TOL }
    }
}

/// Command-line style overrides, applied on top of the case file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ToleranceOverrides {
    pub oracle: Option<f64>,
    pub slack: Option<f64>,
    pub invexity: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerances) -> Tolerances {
        Tolerances {
            oracle: self.oracle.unwrap_or(base.oracle),
            slack: self.slack.unwrap_or(base.slack),
            invexity: self.invexity.unwrap_or(base.invexity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaConfig {
    /// `difference`, `abs_example` or `expression`.
    pub kind: String,
    /// Expression over `v` and `u`, required for `expression`.
    #[serde(default)]
    pub value: Option<String>,
}

impl EtaConfig {
    pub fn difference() -> EtaConfig {
        EtaConfig { kind: "difference".into(), value: None }
    }

    pub fn to_map(&self) -> Result<EtaMap, CaseError> {
        match (self.kind.as_str(), &self.value) {
            ("difference", _) => Ok(EtaMap::difference()),
            ("abs_example", _) => Ok(EtaMap::abs_example()),
            ("expression", Some(src)) => EtaMap::expression(src).map_err(|error| CaseError::Parse { field: "eta.value", error }),
            ("expression", None) => {
                Err(CaseError::Field { field: "eta.value", message: "required for kind `expression`".into() })
            }
            (other, _) => Err(CaseError::Field {
                field: "eta.kind",
                message: format!("unknown kind `{other}` (expected difference, abs_example or expression)"),
            }),
        }
    }
}

/// A golden right-hand side expected for one theorem at one exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedBound {
    pub theorem: TheoremId,
    #[serde(default)]
    pub q: Option<f64>,
    pub rhs: f64,
    pub tolerance: f64,
}

/// On-disk case description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub f: String,
    pub df: String,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub antiderivative: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d4sup: Option<f64>,
    pub eta: EtaConfig,
    #[serde(rename = "K")]
    pub domain: [f64; 2],
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_q")]
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorems: Option<Vec<TheoremId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<ExpectedBound>,
}

fn default_q() -> Vec<f64> {
    DEFAULT_Q.to_vec()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("invalid case file at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("field `{field}`: {error}")]
    Parse { field: &'static str, error: ParseError },
    #[error("{0}")]
    Bounds(#[from] BoundsError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

impl From<ModelSourceError> for CaseError {
    fn from(e: ModelSourceError) -> Self {
        match e {
            ModelSourceError::Parse { field, error } => CaseError::Parse { field, error },
            ModelSourceError::Model(b) => CaseError::Bounds(b),
        }
    }
}

impl CaseConfig {
    pub fn from_json(text: &str) -> Result<CaseConfig, CaseError> {
        serde_json::from_str(text).map_err(|e| CaseError::Json { line: e.line(), column: e.column(), message: e.to_string() })
    }
}

/// A validated case: parsed expressions, derivative gate passed, `eta(b, a) > 0` and the
/// path `[a, a + eta(b, a)]` inside `K`.
#[derive(Debug, Clone)]
pub struct CorpusCase {
    pub name: String,
    pub model: FunctionModel,
    pub eta: EtaMap,
    pub domain: Domain,
    pub a: f64,
    pub b: f64,
    pub eta_value: f64,
    pub q_list: Vec<f64>,
    /// `None` means every applicable theorem.
    pub theorems: Option<Vec<TheoremId>>,
    pub tolerances: Tolerances,
    pub expected: Vec<ExpectedBound>,
}

impl CorpusCase {
    /// Validates `config`; `overrides` win over the file, which wins over the defaults.
    pub fn from_config(config: &CaseConfig, overrides: &ToleranceOverrides) -> Result<CorpusCase, CaseError> {
        let tolerances = overrides.apply(config.tolerances.unwrap_or_default());
        if !(tolerances.oracle > 0.0 && tolerances.oracle.is_finite()) {
            return Err(CaseError::Field {
                field: "tolerances.oracle",
                message: format!("must be positive, got {}", tolerances.oracle),
            });
        }
        for (field, v) in [("tolerances.slack", tolerances.slack), ("tolerances.invexity", tolerances.invexity)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CaseError::Field { field, message: format!("must be non-negative, got {v}") });
            }
        }
        let [lo, hi] = config.domain;
        let domain = Domain::new(lo, hi).map_err(|e| CaseError::Field { field: "K", message: e.to_string() })?;
        for (field, x) in [("a", config.a), ("b", config.b)] {
            if !domain.contains(x, 0.0) {
                return Err(CaseError::Field { field, message: format!("{x} is outside K = [{lo}, {hi}]") });
            }
        }
        if config.q.is_empty() {
            return Err(CaseError::Field { field: "q", message: "at least one exponent is required".into() });
        }
        if let Some(bad) = config.q.iter().find(|q| !(**q >= 1.0 && q.is_finite())) {
            return Err(CaseError::Field { field: "q", message: format!("exponents must be finite and >= 1, got {bad}") });
        }
        let eta = config.eta.to_map()?;
        let eta_value = eta.eval(config.b, config.a)?;
        if !(eta_value > 0.0) {
            return Err(BoundsError::InvalidEta(eta_value).into());
        }
        let end = config.a + eta_value;
        if !domain.contains(end, DEFAULT_TOL) {
            return Err(CaseError::Field {
                field: "eta",
                message: format!("path end a + eta(b, a) = {end} leaves K = [{lo}, {hi}]"),
            });
        }
        if let Some(ts) = &config.theorems {
            if ts.contains(&TheoremId::Classical) && config.d4sup.is_none() {
                return Err(BoundsError::MissingFourthDerivative.into());
            }
        }
        let model = FunctionModel::from_sources(
            config.name.clone(),
            &config.f,
            &config.df,
            config.antiderivative.as_deref(),
            config.d4sup,
            domain,
        )?;
        Ok(CorpusCase {
            name: config.name.clone(),
            model,
            eta,
            domain,
            a: config.a,
            b: config.b,
            eta_value,
            q_list: config.q.clone(),
            theorems: config.theorems.clone(),
            tolerances,
            expected: config.expected.clone(),
        })
    }
}
