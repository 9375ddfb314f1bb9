//! Scalar band constraints on zonotope factors, `g·β ∈ [lo, hi]`.
//!
//! This is the constrained-zonotope special case with a two-row constraint
//! matrix `A = [-g; g]`, `b = [-lo; hi]`, which is all a scalar-output network
//! preimage needs.

use super::interval::{Interval, IntervalVector};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FactorConstraint {
    pub coeffs: Vec<f64>,
    /// Lower end of the band; `lo > hi` encodes an empty band.
    pub lo: f64,
    pub hi: f64,
}

/// Number of full passes over all factors during contraction.
pub const CONTRACTION_SWEEPS: usize = 2;

impl FactorConstraint {
    pub fn new(coeffs: Vec<f64>, lo: f64, hi: f64) -> Self {
        Self { coeffs, lo, hi }
    }

    pub fn num_factors(&self) -> usize {
        self.coeffs.len()
    }

    /// `‖g‖₁`, i.e. the radius of `{g·β | β ∈ [-1, 1]^q}`.
    pub fn reach(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, g| acc + g.abs())
    }

    /// Whether some `β ∈ [-1, 1]^q` satisfies the band.
    pub fn is_feasible(&self) -> bool {
        let r = self.reach();
        self.lo <= self.hi && self.lo <= r && -r <= self.hi
    }

    /// Interval constraint propagation on the factor box.
    ///
    /// Each factor is narrowed to `(band - Σ_{k≠j} g_k·β_k) / g_j` using the
    /// current bounds of the other factors. The result contains every feasible
    /// factor vector.
    pub fn contract(&self) -> Result<IntervalVector> {
        if !self.is_feasible() {
            return Err(Error::ContractViolation(format!(
                "contracting an infeasible constraint (band [{}, {}], reach {})",
                self.lo,
                self.hi,
                self.reach()
            )));
        }
        let q = self.num_factors();
        let band = Interval::ordered(self.lo, self.hi);
        let mut beta = vec![Interval::ordered(-1.0, 1.0); q];
        for _ in 0..CONTRACTION_SWEEPS {
            for j in 0..q {
                let gj = self.coeffs[j];
                if gj == 0.0 {
                    continue;
                }
                let rest = (0..q)
                    .filter(|&k| k != j)
                    .fold(Interval::point(0.0), |acc, k| acc + beta[k].scale(self.coeffs[k]));
                let cand = (band - rest).scale(1.0 / gj);
                beta[j] = match beta[j].intersect(&cand) {
                    Some(iv) => iv,
                    // only reachable through rounding at a touching contact
                    None if cand.hi() < beta[j].lo() => Interval::point(beta[j].lo()),
                    None => Interval::point(beta[j].hi()),
                };
            }
        }
        Ok(IntervalVector::new(beta))
    }
}
