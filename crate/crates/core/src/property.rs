//! Sampled property verdicts shared by the derivative gate and the invexity checkers.

use std::cmp::Ordering;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    InvexSet,
    Preinvex,
    Prequasiinvex,
    Derivative,
}

impl Property {
    pub fn as_str(self) -> &'static str {
        match self {
            Property::InvexSet => "invex_set",
            Property::Preinvex => "preinvex",
            Property::Prequasiinvex => "prequasiinvex",
            Property::Derivative => "derivative",
        }
    }
}

/// `VerifiedOnSamples` is sampling evidence over a finite set of points, not a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    VerifiedOnSamples,
    Violated,
}

/// Location of the worst sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Triple { u: f64, v: f64, t: f64 },
    Point { x: f64 },
}

impl Witness {
    fn key(&self) -> [f64; 3] {
        match *self {
            Witness::Triple { u, v, t } => [u, v, t],
            Witness::Point { x } => [x, 0.0, 0.0],
        }
    }

    fn lex_cmp(&self, other: &Witness) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    /// Exponent applied to `|f'|` before testing, when the check is about `|f'|^q`.
    pub exponent_q: Option<f64>,
    pub verdict: Verdict,
    /// Largest excess over the inequality seen on any sample, clipped at zero.
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub samples: usize,
    pub tolerance: f64,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::VerifiedOnSamples
    }
}

/// Running maximum of the excess with a deterministic witness: larger excess wins,
/// equal excesses keep the lexicographically smallest witness.
#[derive(Debug, Clone)]
pub(crate) struct WorstTracker {
    excess: f64,
    witness: Option<Witness>,
    samples: usize,
}

impl WorstTracker {
    pub(crate) fn new() -> Self {
        WorstTracker { excess: f64::NEG_INFINITY, witness: None, samples: 0 }
    }

    pub(crate) fn record(&mut self, excess: f64, witness: Witness) {
        self.samples += 1;
        let better = match excess.total_cmp(&self.excess) {
            Ordering::Greater => true,
            Ordering::Equal => self.witness.as_ref().is_none_or(|w| witness.lex_cmp(w) == Ordering::Less),
            Ordering::Less => false,
        };
        if better {
            self.excess = excess;
            self.witness = Some(witness);
        }
    }

    pub(crate) fn finish(self, property: Property, exponent_q: Option<f64>, tolerance: f64) -> PropertyReport {
        let violated = self.excess > tolerance;
        PropertyReport {
            property,
            exponent_q,
            verdict: if violated { Verdict::Violated } else { Verdict::VerifiedOnSamples },
            worst_violation: self.excess.max(0.0),
            witness: if violated { self.witness } else { None },
            samples: self.samples,
            tolerance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_keep_smallest_witness_regardless_of_order() {
        let a = Witness::Triple { u: -1.0, v: 0.0, t: 0.5 };
        let b = Witness::Triple { u: -1.0, v: 0.5, t: 0.1 };
        let mut fwd = WorstTracker::new();
        fwd.record(0.3, a);
        fwd.record(0.3, b);
        let mut rev = WorstTracker::new();
        rev.record(0.3, b);
        rev.record(0.3, a);
        let (r1, r2) = (fwd.finish(Property::Preinvex, None, 1e-12), rev.finish(Property::Preinvex, None, 1e-12));
        assert_eq!(r1.witness, Some(a));
        assert_eq!(r1, r2);
    }

    #[test]
    fn verified_report_has_no_witness() {
        let mut w = WorstTracker::new();
        w.record(-0.5, Witness::Point { x: 0.2 });
        let r = w.finish(Property::Derivative, None, 1e-4);
        assert!(r.passed());
        assert_eq!(r.witness, None);
        assert_eq!(r.worst_violation, 0.0);
        assert_eq!(r.samples, 1);
    }
}
