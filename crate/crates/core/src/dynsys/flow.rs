//! Enclosures of the vector field image `f(Z)`.

use super::system::SystemSpec;
use crate::error::{invalid, Result};
use crate::setcore::{Interval, IntervalVector, Zonotope};

/// Default number of bisection rounds for interval range bounding.
pub const DEFAULT_NONLINEAR_SUBSPLITS: u32 = 2;

/// A strategy producing a zonotope that contains `{f(x) | x ∈ Z}`.
pub trait FlowEnclosure: Send + Sync {
    fn name(&self) -> &'static str;
    fn enclose(&self, sys: &SystemSpec, z: &Zonotope) -> Result<Zonotope>;
}

/// Exact image of affine dynamics.
#[derive(Clone, Copy, Debug, Default)]
pub struct AffineFlow;

impl FlowEnclosure for AffineFlow {
    fn name(&self) -> &'static str {
        "affine"
    }

    fn enclose(&self, sys: &SystemSpec, z: &Zonotope) -> Result<Zonotope> {
        let (a, k) = sys
            .affine_form()
            .ok_or_else(|| invalid(format!("{} has non-affine dynamics", sys.name)))?;
        z.affine(a, k)
    }
}

/// Interval range bounding over `2^subsplits` slabs of the widest dimension.
#[derive(Clone, Copy, Debug)]
pub struct IntervalFlow {
    pub subsplits: u32,
}

impl FlowEnclosure for IntervalFlow {
    fn name(&self) -> &'static str {
        "interval"
    }

    fn enclose(&self, sys: &SystemSpec, z: &Zonotope) -> Result<Zonotope> {
        let hull = z.interval_hull();
        Ok(Zonotope::from_interval(&range_over_slabs(sys, &hull, self.subsplits)?))
    }
}

pub(crate) fn range_over_slabs(
    sys: &SystemSpec,
    hull: &IntervalVector,
    subsplits: u32,
) -> Result<IntervalVector> {
    let dim = hull.widest_dims(1)[0];
    let pieces = hull.split_dim(dim, 1usize << subsplits);
    let mut acc: Option<Vec<Interval>> = None;
    for piece in &pieces {
        let ranges = sys
            .dynamics
            .iter()
            .map(|e| e.range(piece))
            .collect::<Result<Vec<_>>>()?;
        acc = Some(match acc {
            None => ranges,
            Some(prev) => prev.iter().zip(&ranges).map(|(a, b)| a.hull(b)).collect(),
        });
    }
    Ok(IntervalVector::new(acc.expect("at least one slab")))
}

/// Looks up a flow strategy by name.
pub fn flow_strategy(name: &str, subsplits: u32) -> Result<Box<dyn FlowEnclosure>> {
    match name {
        "affine" => Ok(Box::new(AffineFlow)),
        "interval" => Ok(Box::new(IntervalFlow { subsplits })),
        _ => Err(invalid(format!(
            "unknown flow enclosure '{name}' (expected affine or interval)"
        ))),
    }
}

/// The strategy matching the system: exact for affine dynamics, range
/// bounding otherwise.
pub fn default_flow(sys: &SystemSpec, subsplits: u32) -> Box<dyn FlowEnclosure> {
    if sys.is_linear() {
        Box::new(AffineFlow)
    } else {
        Box::new(IntervalFlow { subsplits })
    }
}

/// Encloses `f(Z)`; exact for affine systems, interval range bounding with
/// `subsplits` bisection rounds otherwise.
pub fn flow_enclose(sys: &SystemSpec, z: &Zonotope, subsplits: u32) -> Result<Zonotope> {
    if z.dim() != sys.dim() {
        return Err(invalid(format!(
            "set of dimension {} for a {}-dimensional system",
            z.dim(),
            sys.dim()
        )));
    }
    default_flow(sys, subsplits).enclose(sys, z)
}
