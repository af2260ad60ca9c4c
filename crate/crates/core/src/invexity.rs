//! Sampled checks for invex sets and for preinvex / prequasiinvex functions.
//!
//! The definitions quantify over every `u, v` in `K` and every `t` in `[0, 1]`. The
//! checkers evaluate them on a lexicographic grid over `K × K × [0, 1]` plus a seeded
//! layer of uniform random triples; a passing report is evidence on those samples only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::FunctionModel;
use crate::expr::{EvalError, Expr, ParseError};
use crate::property::{Property, PropertyReport, Witness, WorstTracker};

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvexityError {
    #[error("invalid domain [{lo}, {hi}]: need finite lo < hi")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("eta path from {base} with step {step} leaves [{lo}, {hi}]")]
    PathOutsideDomain { base: f64, step: f64, lo: f64, hi: f64 },
}

/// Closed interval `K = [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain {
    lo: f64,
    hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Domain, InvexityError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Domain { lo, hi })
        } else {
            Err(InvexityError::InvalidDomain { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Distance from `x` to the interval (zero inside).
    pub fn excess(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.excess(x) <= tol
    }

    fn lerp(&self, s: f64) -> f64 {
        self.lo + (self.hi - self.lo) * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EtaKind {
    /// `eta(v, u) = v - u`, the convex case.
    Difference,
    /// `v - u` when `u, v` share a sign (zero counts as either), `u - v` otherwise.
    AbsExample,
    Expression(Expr),
}

/// The bifunction `eta(v, u)` defining the invex structure.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaMap {
    pub kind: EtaKind,
    pub name: String,
}

impl EtaMap {
    pub fn difference() -> EtaMap {
        EtaMap { kind: EtaKind::Difference, name: "difference".into() }
    }

    pub fn abs_example() -> EtaMap {
        EtaMap { kind: EtaKind::AbsExample, name: "abs_example".into() }
    }

    /// An expression over the variables `v` and `u`, in that order.
    pub fn expression(source: &str) -> Result<EtaMap, ParseError> {
        let e = Expr::parse(source, &["v", "u"])?;
        Ok(EtaMap { name: source.to_string(), kind: EtaKind::Expression(e) })
    }

    pub fn eval(&self, v: f64, u: f64) -> Result<f64, EvalError> {
        match &self.kind {
            EtaKind::Difference => Ok(v - u),
            EtaKind::AbsExample => {
                let same_sign = (v <= 0.0 && u <= 0.0) || (v >= 0.0 && u >= 0.0);
                Ok(if same_sign { v - u } else { u - v })
            }
            EtaKind::Expression(e) => e.eval(&[v, u]),
        }
    }
}

/// The segment `t ↦ base + t·step`, `t ∈ [0, 1]`, checked to lie inside a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaPath {
    base: f64,
    step: f64,
}

impl EtaPath {
    pub fn new(base: f64, step: f64, domain: &Domain) -> Result<EtaPath, InvexityError> {
        let end = base + step;
        if domain.contains(base, DEFAULT_TOL) && domain.contains(end, DEFAULT_TOL) {
            Ok(EtaPath { base, step })
        } else {
            Err(InvexityError::PathOutsideDomain { base, step, lo: domain.lo, hi: domain.hi })
        }
    }

    pub fn point(&self, t: f64) -> f64 {
        self.base + t * self.step
    }

    pub fn end(&self) -> f64 {
        self.base + self.step
    }
}

/// Sample layout: `u × v × t` grid nodes followed by `random` uniform triples.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub u: usize,
    pub v: usize,
    pub t: usize,
    pub random: usize,
    pub seed: u64,
    /// Triples tested before the grid, e.g. the witness of an earlier coarser run.
    pub extra: Vec<(f64, f64, f64)>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { u: 41, v: 41, t: 21, random: 2000, seed: 0x5eed_2024, extra: Vec::new() }
    }
}

impl GridSpec {
    pub fn grid(u: usize, v: usize, t: usize) -> GridSpec {
        GridSpec { u, v, t, random: 0, ..GridSpec::default() }
    }

    /// Adds the witness of `report`, if any, to the triples tested first.
    pub fn retesting(mut self, report: &PropertyReport) -> GridSpec {
        if let Some(Witness::Triple { u, v, t }) = report.witness {
            self.extra.push((u, v, t));
        }
        self
    }

    fn nodes(n: usize) -> impl Iterator<Item = f64> + Clone {
        (0..n).map(move |i| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Preinvex,
    Prequasiinvex,
}

impl Mode {
    fn property(self) -> Property {
        match self {
            Mode::Preinvex => Property::Preinvex,
            Mode::Prequasiinvex => Property::Prequasiinvex,
        }
    }

    /// Amount by which `g(point)` exceeds the right-hand side of the definition.
    fn excess(self, at_point: f64, gu: f64, gv: f64, t: f64) -> f64 {
        let rhs = match self {
            Mode::Preinvex => (1.0 - t) * gu + t * gv,
            Mode::Prequasiinvex => gu.max(gv),
        };
        let e = at_point - rhs;
        if e.is_nan() {
            f64::INFINITY
        } else {
            e
        }
    }
}

fn for_each_triple<F>(domain: &Domain, grid: &GridSpec, mut visit: F) -> Result<(), EvalError>
where
    F: FnMut(f64, f64, f64) -> Result<(), EvalError>,
{
    for &(u, v, t) in &grid.extra {
        visit(u, v, t)?;
    }
    for su in GridSpec::nodes(grid.u) {
        let u = domain.lerp(su);
        for sv in GridSpec::nodes(grid.v) {
            let v = domain.lerp(sv);
            for t in GridSpec::nodes(grid.t) {
                visit(u, v, t)?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    for _ in 0..grid.random {
        let (su, sv, t): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        visit(domain.lerp(su), domain.lerp(sv), t)?;
    }
    Ok(())
}

/// Checks `u + t·eta(v, u) ∈ K` on samples; the excess is the distance outside `K`.
pub fn check_invex_set(domain: &Domain, eta: &EtaMap, grid: &GridSpec) -> Result<PropertyReport, EvalError> {
    let mut worst = WorstTracker::new();
    for_each_triple(domain, grid, |u, v, t| {
        let point = u + t * eta.eval(v, u)?;
        let excess = if point.is_nan() { f64::INFINITY } else { domain.excess(point) };
        worst.record(excess, Witness::Triple { u, v, t });
        Ok(())
    })?;
    Ok(worst.finish(Property::InvexSet, None, DEFAULT_TOL))
}

/// Shared driver for both function properties. `g` may be called outside `K` when the
/// set is not invex; the caller is expected to have checked the set first.
pub fn check_property<G>(
    mode: Mode,
    g: G,
    eta: &EtaMap,
    domain: &Domain,
    grid: &GridSpec,
    tol: f64,
) -> Result<PropertyReport, EvalError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    check_property_q(mode, g, eta, domain, grid, tol, None)
}

fn check_property_q<G>(
    mode: Mode,
    g: G,
    eta: &EtaMap,
    domain: &Domain,
    grid: &GridSpec,
    tol: f64,
    exponent_q: Option<f64>,
) -> Result<PropertyReport, EvalError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    let mut worst = WorstTracker::new();
    // grid nodes repeat across the u/v loops; cache g there
    let cache_u: Vec<f64> = GridSpec::nodes(grid.u).map(|s| g(domain.lerp(s))).collect::<Result<_, _>>()?;
    let cache_v: Vec<f64> = GridSpec::nodes(grid.v).map(|s| g(domain.lerp(s))).collect::<Result<_, _>>()?;
    let lookup = |x: f64, nodes: usize, cache: &[f64]| -> Option<f64> {
        if nodes < 2 {
            return None;
        }
        let idx = ((x - domain.lo) / (domain.hi - domain.lo) * (nodes - 1) as f64).round();
        let i = idx as usize;
        (idx >= 0.0 && i < nodes && domain.lerp(i as f64 / (nodes - 1) as f64) == x).then(|| cache[i])
    };
    for_each_triple(domain, grid, |u, v, t| {
        let gu = match lookup(u, grid.u, &cache_u) {
            Some(val) => val,
            None => g(u)?,
        };
        let gv = match lookup(v, grid.v, &cache_v) {
            Some(val) => val,
            None => g(v)?,
        };
        let point = u + t * eta.eval(v, u)?;
        let excess = mode.excess(g(point)?, gu, gv, t);
        worst.record(excess, Witness::Triple { u, v, t });
        Ok(())
    })?;
    Ok(worst.finish(mode.property(), exponent_q, tol))
}

/// `g(u + t·eta(v, u)) <= (1 - t) g(u) + t g(v)` on samples.
pub fn check_preinvex<G>(g: G, eta: &EtaMap, domain: &Domain, grid: &GridSpec, tol: f64) -> Result<PropertyReport, EvalError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    check_property(Mode::Preinvex, g, eta, domain, grid, tol)
}

/// `g(u + t·eta(v, u)) <= max(g(u), g(v))` on samples.
pub fn check_prequasiinvex<G>(g: G, eta: &EtaMap, domain: &Domain, grid: &GridSpec, tol: f64) -> Result<PropertyReport, EvalError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    check_property(Mode::Prequasiinvex, g, eta, domain, grid, tol)
}

/// `|x|^q`, taking the absolute value first so fractional `q` never sees a negative base.
pub fn abs_pow(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        x.abs()
    } else {
        x.abs().powf(q)
    }
}

/// Runs the requested check on `u ↦ |f'(u)|^q`.
pub fn hypothesis_check(
    model: &FunctionModel,
    eta: &EtaMap,
    domain: &Domain,
    q: f64,
    mode: Mode,
    grid: &GridSpec,
    tol: f64,
) -> Result<PropertyReport, EvalError> {
    assert!(q >= 1.0, "hypothesis exponent must be >= 1");
    let g = |x: f64| Ok(abs_pow(model.df.eval(&[x])?, q));
    check_property_q(mode, g, eta, domain, grid, tol, Some(q))
}
