//! Warm start: regress `B` toward a radial profile that is negative on the
//! initial sets and crosses zero on the way to the nearest unsafe set.

use super::adam::{adam_step, AdamParams, AdamState};
use crate::dynsys::SystemSpec;
use crate::error::Result;
use crate::neural::Network;
use crate::setcore::IntervalVector;

pub const PRETRAIN_SAMPLES: usize = 256;
pub const PRETRAIN_BATCH: usize = 8;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// Halton point `index` (starting at 1) scaled into `domain`.
pub fn halton_point(index: u64, domain: &IntervalVector) -> Vec<f64> {
    assert!(domain.dim() <= PRIMES.len(), "Halton sequence supports up to 16 dimensions");
    domain
        .iter()
        .zip(PRIMES)
        .map(|(iv, p)| iv.lo() + iv.width() * radical_inverse(index, p))
        .collect()
}

/// Euclidean distance from `c` to the closest point of `h`.
fn distance_to_box(c: &[f64], h: &IntervalVector) -> f64 {
    h.iter()
        .zip(c)
        .map(|(iv, &ci)| {
            let e = (iv.lo() - ci).max(ci - iv.hi()).max(0.0);
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

/// Radius of the bowl around an initial set: its hull radius, widened up to
/// the nearest unsafe hull so the bowl's rim lies between the two.
fn bowl_radius(sys: &SystemSpec, c: &[f64], hull_radius: f64) -> f64 {
    let gap = sys
        .unsafe_sets
        .iter()
        .map(|u| distance_to_box(c, &u.interval_hull()))
        .fold(f64::INFINITY, f64::min);
    let rho = if gap.is_finite() { gap.max(hull_radius) } else { hull_radius };
    rho.max(f64::MIN_POSITIVE)
}

/// Radial profile of the pretraining target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetShape {
    /// `‖x − c‖² − ρ²`. A linear network fitted to it places its zero plane
    /// between the initial and unsafe sets.
    Quadratic,
    /// `1 − 2·exp(−ln 2 · ‖x − c‖²/ρ²)`, bounded to `[−1, 1]` like the tanh
    /// layers fitting it.
    Gaussian,
}

impl TargetShape {
    pub fn for_network(net: &Network) -> Self {
        if net.num_tanh_neurons() == 0 {
            Self::Quadratic
        } else {
            Self::Gaussian
        }
    }

    /// Both shapes are zero at `d2 = ρ²`.
    fn eval(self, d2: f64, rho: f64) -> f64 {
        match self {
            Self::Quadratic => d2 - rho * rho,
            Self::Gaussian => 1.0 - 2.0 * (-std::f64::consts::LN_2 * d2 / (rho * rho)).exp(),
        }
    }
}

/// `min` over initial sets of the profile around the set's center `c`, with
/// `ρ` from [`bowl_radius`].
pub fn radial_target(sys: &SystemSpec, x: &[f64], shape: TargetShape) -> f64 {
    sys.initial_sets
        .iter()
        .map(|z| {
            let c = z.center();
            let rho = bowl_radius(sys, c.as_slice().unwrap(), z.interval_hull().max_radius());
            let d2: f64 = x.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            shape.eval(d2, rho)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Mean squared error against [`radial_target`], shaped for `net`, over
/// fresh Halton points, minimized with Adam in minibatches.
pub fn pretrain(net: &mut Network, sys: &SystemSpec, epochs: usize, adam: &AdamParams) -> Result<()> {
    if sys.initial_sets.is_empty() || epochs == 0 {
        return Ok(());
    }
    let shape = TargetShape::for_network(net);
    let mut state = AdamState::new(net.num_params());
    let mut theta = net.params();
    let mut index = 1u64;
    for _ in 0..epochs {
        for _ in 0..PRETRAIN_SAMPLES / PRETRAIN_BATCH {
            let mut grad = vec![0.0; theta.len()];
            for _ in 0..PRETRAIN_BATCH {
                let x = halton_point(index, &sys.state_space);
                index += 1;
                let (b, db) = net.param_gradient(&x)?;
                let r = b - radial_target(sys, &x, shape);
                let k = 2.0 * r / PRETRAIN_BATCH as f64;
                for (g, d) in grad.iter_mut().zip(&db) {
                    *g += k * d;
                }
            }
            adam_step(&mut state, &mut theta, &grad, adam);
            net.set_params(&theta)?;
        }
    }
    Ok(())
}
