//! Interval and zonotope arithmetic.

mod constraint;
mod interval;
mod zonotope;

pub use constraint::{FactorConstraint, CONTRACTION_SWEEPS};
pub use interval::{Interval, IntervalVector};
pub use zonotope::Zonotope;

pub(crate) use zonotope::abs_sum;
