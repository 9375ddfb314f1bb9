//! Set-based certificate losses. A total of exactly zero proves that the
//! network is a barrier certificate for the system.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use serde::Serialize;

use crate::dynsys::{default_flow, SystemSpec};
use crate::error::{invalid, Result};
use crate::neural::{dot_upper_with_adjoint, hash_signs, nn_forward_set, nn_gradset, LossGraph, Network};
use crate::setcore::{Interval, Zonotope};
use crate::zeroset::ZeroCover;

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroTerm {
    pub index: usize,
    /// Upper bound of the Lie derivative enclosure on the box.
    pub upper: f64,
    pub hinge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub l_unsafe: f64,
    pub l_init: f64,
    pub l_zero: f64,
    pub total: f64,
    pub epsilon: f64,
    pub zero_terms: Vec<ZeroTerm>,
}

impl LossBreakdown {
    pub fn from_parts(l_unsafe: f64, l_init: f64, l_zero: f64, epsilon: f64, zero_terms: Vec<ZeroTerm>) -> Self {
        Self {
            l_unsafe,
            l_init,
            l_zero,
            total: l_unsafe + l_init + l_zero,
            epsilon,
            zero_terms,
        }
    }

    pub fn is_verified(&self) -> bool {
        self.total == 0.0
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("loss margin must be positive, got {eps}")));
    }
    Ok(())
}

#[inline]
fn hinge(v: f64) -> f64 {
    v.max(0.0)
}

/// `Σ max(0, -b_U + ε)` over the lower output bounds of the unsafe sets.
pub fn loss_unsafe(net: &Network, unsafe_sets: &[Zonotope], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let mut total = 0.0;
    for z in unsafe_sets {
        let (y, _) = nn_forward_set(net, z)?;
        total += hinge(-y.bounds_1d().lo() + eps);
    }
    Ok(total)
}

/// `Σ max(0, b̄_I)` over the upper output bounds of the initial sets.
pub fn loss_init(net: &Network, initial_sets: &[Zonotope]) -> Result<f64> {
    let mut total = 0.0;
    for z in initial_sets {
        let (y, _) = nn_forward_set(net, z)?;
        total += hinge(y.bounds_1d().hi());
    }
    Ok(total)
}

/// Encloses `{∇B(x)ᵀf(x) | x ∈ Xi}` by the inner product of the gradient set
/// with the flow enclosure.
pub fn lie_enclose(net: &Network, sys: &SystemSpec, xi: &Zonotope, subsplits: u32) -> Result<Interval> {
    let (_, trace) = nn_forward_set(net, xi)?;
    let gs = nn_gradset(net, &trace)?;
    let f = crate::dynsys::flow_enclose(sys, xi, subsplits)?;
    Ok(gs.set.dot(&f)?.bounds_1d())
}

/// `Σᵢ max(0, b̄₀,ᵢ + ε)` over the cover boxes.
pub fn loss_zero(net: &Network, sys: &SystemSpec, cover: &ZeroCover, eps: f64, subsplits: u32) -> Result<f64> {
    Ok(evaluate(net, sys, cover, eps, subsplits, false)?.0.l_zero)
}

pub fn total_loss(net: &Network, sys: &SystemSpec, cover: &ZeroCover, eps: f64, subsplits: u32) -> Result<LossBreakdown> {
    Ok(evaluate(net, sys, cover, eps, subsplits, false)?.0)
}

/// Loss plus the recorded graph of its active hinges, for
/// [`crate::neural::param_grad`]. The cover is a constant of the graph.
pub fn total_loss_with_graph(
    net: &Network,
    sys: &SystemSpec,
    cover: &ZeroCover,
    eps: f64,
    subsplits: u32,
) -> Result<(LossBreakdown, LossGraph)> {
    let (b, g) = evaluate(net, sys, cover, eps, subsplits, true)?;
    Ok((b, g.expect("recorded")))
}

fn check_dims(net: &Network, sys: &SystemSpec) -> Result<()> {
    if net.input_dim() != sys.dim() {
        return Err(invalid(format!(
            "network on R^{} for the {}-dimensional system {}",
            net.input_dim(),
            sys.dim(),
            sys.name
        )));
    }
    Ok(())
}

fn evaluate(
    net: &Network,
    sys: &SystemSpec,
    cover: &ZeroCover,
    eps: f64,
    subsplits: u32,
    record: bool,
) -> Result<(LossBreakdown, Option<LossGraph>)> {
    check_eps(eps)?;
    check_dims(net, sys)?;
    let mut graph = record.then(LossGraph::new);

    let mut l_unsafe = 0.0;
    for z in &sys.unsafe_sets {
        let (y, trace) = nn_forward_set(net, z)?;
        let v = -y.bounds_1d().lo() + eps;
        if v > 0.0 {
            l_unsafe += v;
            if let Some(g) = graph.as_mut() {
                g.add_output_bound(trace, false, -1.0);
            }
        }
    }

    let mut l_init = 0.0;
    for z in &sys.initial_sets {
        let (y, trace) = nn_forward_set(net, z)?;
        let v = y.bounds_1d().hi();
        if v > 0.0 {
            l_init += v;
            if let Some(g) = graph.as_mut() {
                g.add_output_bound(trace, true, 1.0);
            }
        }
    }

    let flow = default_flow(sys, subsplits);
    let mut l_zero = 0.0;
    let mut zero_terms = Vec::with_capacity(cover.len());
    for (index, xi) in cover.boxes.iter().enumerate() {
        let (_, trace) = nn_forward_set(net, xi)?;
        let gs = nn_gradset(net, &trace)?;
        let f = flow.enclose(sys, xi)?;
        let (upper, _, _) = dot_upper_with_adjoint(&gs.set, &f);
        let v = upper + eps;
        let h = hinge(v);
        zero_terms.push(ZeroTerm { index, upper, hinge: h });
        if v > 0.0 {
            l_zero += v;
            if let Some(g) = graph.as_mut() {
                g.add_lie_upper(trace, gs, f, 1.0);
            }
        }
    }

    Ok((
        LossBreakdown::from_parts(l_unsafe, l_init, l_zero, eps, zero_terms),
        graph,
    ))
}

/// Hash of every discrete choice made while evaluating the loss: hinge
/// activity, absolute-value signs and enclosure candidates. The loss is
/// smooth in θ wherever this stays constant.
pub fn branch_signature(net: &Network, sys: &SystemSpec, cover: &ZeroCover, eps: f64, subsplits: u32) -> Result<u64> {
    check_eps(eps)?;
    check_dims(net, sys)?;
    let mut h = DefaultHasher::new();
    for (sets, lower) in [(&sys.unsafe_sets, true), (&sys.initial_sets, false)] {
        for z in sets {
            let (y, trace) = nn_forward_set(net, z)?;
            trace.hash_branches(&mut h);
            let b = y.bounds_1d();
            let active = if lower { -b.lo() + eps > 0.0 } else { b.hi() > 0.0 };
            h.write_u8(active as u8);
        }
    }
    let flow = default_flow(sys, subsplits);
    for xi in &cover.boxes {
        let (_, trace) = nn_forward_set(net, xi)?;
        let gs = nn_gradset(net, &trace)?;
        trace.hash_branches(&mut h);
        gs.hash_branches(&mut h);
        let f = flow.enclose(sys, xi)?;
        let prod = gs.set.dot(&f)?;
        hash_signs(prod.generators().iter().copied(), &mut h);
        let (upper, _, _) = dot_upper_with_adjoint(&gs.set, &f);
        h.write_u8((upper + eps > 0.0) as u8);
    }
    Ok(h.finish())
}
