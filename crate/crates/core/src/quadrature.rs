//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Every panel carries a computed error estimate `|K15 - G7|`. The panel with the largest
//! estimate is bisected until the summed estimate meets the requested absolute tolerance.
//! Panels are summed in left-to-right order at the end, so results do not depend on the
//! order in which panels were refined.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_MAX_EVALS: usize = 1_000_000;

/// Default absolute tolerance used by the inequality checks.
pub const ORACLE_TOL: f64 = 1e-11;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("evaluation budget of {budget} exhausted (value {value}, error estimate {error_estimate:e})")]
    BudgetExhausted { budget: usize, value: f64, error_estimate: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("invalid integration request: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Max-heap on error; ties go to the leftmost panel.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn gk15<F: FnMut(f64) -> f64>(g: &mut F, lo: f64, hi: f64) -> Result<Panel, QuadratureError> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |x: f64| {
        let y = g(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };
    let fc = eval(centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(WGK[..7].iter()).enumerate() {
        let dx = half * x;
        let pair = eval(centre - dx)? + eval(centre + dx)?;
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Panel { lo, hi, value: kronrod * half, error: ((kronrod - gauss) * half).abs() })
}

/// Adaptive integrator with an evaluation budget.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub max_evals: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { max_evals: DEFAULT_MAX_EVALS }
    }
}

impl Integrator {
    pub fn integrate<F: FnMut(f64) -> f64>(
        &self,
        g: F,
        lo: f64,
        hi: f64,
        abs_tol: f64,
    ) -> Result<QuadratureResult, QuadratureError> {
        self.integrate_with_breakpoints(g, lo, hi, &[], abs_tol)
    }

    /// Integrates each segment between consecutive breakpoints as its own set of panels;
    /// the reported error estimate is the sum over all panels.
    pub fn integrate_with_breakpoints<F: FnMut(f64) -> f64>(
        &self,
        mut g: F,
        lo: f64,
        hi: f64,
        breakpoints: &[f64],
        abs_tol: f64,
    ) -> Result<QuadratureResult, QuadratureError> {
        if !(lo <= hi) {
            return Err(QuadratureError::InvalidInput(format!("lower limit {lo} exceeds upper limit {hi}")));
        }
        if !(abs_tol > 0.0) {
            return Err(QuadratureError::InvalidInput(format!("tolerance must be positive, got {abs_tol}")));
        }
        let mut edges = Vec::with_capacity(breakpoints.len() + 2);
        edges.push(lo);
        for &b in breakpoints {
            if !(b > *edges.last().unwrap() && b < hi) {
                return Err(QuadratureError::InvalidInput(format!(
                    "breakpoints must be strictly increasing inside ({lo}, {hi}), got {b}"
                )));
            }
            edges.push(b);
        }
        edges.push(hi);
        if lo == hi {
            return Ok(QuadratureResult { value: 0.0, error_estimate: 0.0, evaluations: 0 });
        }

        let mut evaluations = 0;
        let mut heap = BinaryHeap::new();
        for w in edges.windows(2) {
            heap.push(gk15(&mut g, w[0], w[1])?);
            evaluations += 15;
        }
        let mut total_error: f64 = heap.iter().map(|p| p.error).sum();

        loop {
            if total_error <= abs_tol {
                // re-sum to shed accumulated drift before accepting
                total_error = sum_errors(&heap);
                if total_error <= abs_tol {
                    break;
                }
            }
            let worst = heap.pop().expect("at least one panel");
            let mid = 0.5 * (worst.lo + worst.hi);
            if evaluations + 30 > self.max_evals || !(mid > worst.lo && mid < worst.hi) {
                heap.push(worst);
                let (value, error_estimate) = (sum_values(&heap), sum_errors(&heap));
                return Err(QuadratureError::BudgetExhausted { budget: self.max_evals, value, error_estimate });
            }
            let left = gk15(&mut g, worst.lo, mid)?;
            let right = gk15(&mut g, mid, worst.hi)?;
            evaluations += 30;
            total_error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
        }
        Ok(QuadratureResult { value: sum_values(&heap), error_estimate: total_error, evaluations })
    }
}

fn sorted_panels(heap: &BinaryHeap<Panel>) -> Vec<Panel> {
    let mut panels: Vec<Panel> = heap.iter().copied().collect();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    panels
}

fn sum_values(heap: &BinaryHeap<Panel>) -> f64 {
    neumaier_sum(sorted_panels(heap).iter().map(|p| p.value))
}

fn sum_errors(heap: &BinaryHeap<Panel>) -> f64 {
    neumaier_sum(sorted_panels(heap).iter().map(|p| p.error))
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// [`Integrator::integrate`] with the default budget.
pub fn integrate<F: FnMut(f64) -> f64>(g: F, lo: f64, hi: f64, abs_tol: f64) -> Result<QuadratureResult, QuadratureError> {
    Integrator::default().integrate(g, lo, hi, abs_tol)
}

/// [`Integrator::integrate_with_breakpoints`] with the default budget.
pub fn integrate_with_breakpoints<F: FnMut(f64) -> f64>(
    g: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    abs_tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    Integrator::default().integrate_with_breakpoints(g, lo, hi, breakpoints, abs_tol)
}
