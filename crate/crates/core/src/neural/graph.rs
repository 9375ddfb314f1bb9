//! A recorded scalar loss over set bounds, differentiated by hand-written
//! adjoints of each set operation.

use ndarray::{Array1, Array2};

use super::network::Network;
use super::propagate::{
    dot_upper_with_adjoint, forward_set_backward, gradset_backward, sgn, GradientSet, SetTrace,
};
use crate::error::{Error, Result};
use crate::setcore::Zonotope;

#[derive(Clone, Debug)]
enum Term {
    /// `weight · (upper or lower bound of hull(B(X)))`.
    OutputBound { trace: SetTrace, upper: bool, weight: f64 },
    /// `weight · upper bound of hull(𝒢ᵀF)` with a constant flow set `F`.
    LieUpper {
        trace: SetTrace,
        grads: GradientSet,
        flow: Zonotope,
        weight: f64,
    },
}

/// Linear combination of set bounds, each linked to the forward trace that
/// produced it. Hinges are resolved when terms are added: an inactive hinge
/// contributes nothing.
#[derive(Clone, Debug, Default)]
pub struct LossGraph {
    terms: Vec<Term>,
}

impl LossGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn add_output_bound(&mut self, trace: SetTrace, upper: bool, weight: f64) {
        self.terms.push(Term::OutputBound { trace, upper, weight });
    }

    pub fn add_lie_upper(&mut self, trace: SetTrace, grads: GradientSet, flow: Zonotope, weight: f64) {
        self.terms.push(Term::LieUpper {
            trace,
            grads,
            flow,
            weight,
        });
    }

    /// Multiplies every term by `k`.
    pub fn scale(&mut self, k: f64) {
        for t in &mut self.terms {
            match t {
                Term::OutputBound { weight, .. } | Term::LieUpper { weight, .. } => *weight *= k,
            }
        }
    }
}

/// Reverse-mode gradient of the recorded loss with respect to θ.
pub fn param_grad(net: &Network, graph: &LossGraph) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; net.num_params()];
    for term in &graph.terms {
        match term {
            Term::OutputBound { trace, upper, weight } => {
                trace.check_fresh(net)?;
                let y = trace.output();
                if y.dim() != 1 {
                    return Err(Error::ContractViolation(format!(
                        "loss root has dimension {}, expected a scalar",
                        y.dim()
                    )));
                }
                let side = if *upper { 1.0 } else { -1.0 };
                let dc = Array1::from(vec![*weight]);
                let dg = y.generators().mapv(|v| weight * side * sgn(v));
                forward_set_backward(net, trace, dc.view(), dg.view(), None, &mut grad);
            }
            Term::LieUpper {
                trace,
                grads,
                flow,
                weight,
            } => {
                trace.check_fresh(net)?;
                grads.check_fresh(net)?;
                let (_, dc, dg) = dot_upper_with_adjoint(&grads.set, flow);
                let hull = gradset_backward(
                    net,
                    grads,
                    (dc * *weight).view(),
                    (dg * *weight).view(),
                    &mut grad,
                );
                let y = trace.output();
                let zc = Array1::zeros(1);
                let zg = Array2::zeros((1, y.num_generators()));
                forward_set_backward(net, trace, zc.view(), zg.view(), Some(&hull), &mut grad);
            }
        }
    }
    Ok(grad)
}
