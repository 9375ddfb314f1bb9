//! Empirical corroboration of a certificate by simulating trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynsys::SystemSpec;
use crate::error::{invalid, Error, Result};
use crate::neural::Network;

pub const SIM_DT: f64 = 1e-3;
/// Largest certificate value tolerated along a trajectory.
const B_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub trajectories: usize,
    pub steps: usize,
    /// Trajectories stopped at the state-space boundary before the horizon.
    pub left_state_space: usize,
    pub max_certificate: f64,
}

fn rk4_step(sys: &SystemSpec, x: &[f64], dt: f64) -> Result<Vec<f64>> {
    let add = |a: &[f64], k: &[f64], s: f64| a.iter().zip(k).map(|(u, v)| u + s * v).collect::<Vec<_>>();
    let k1 = sys.eval(x)?;
    let k2 = sys.eval(&add(x, &k1, 0.5 * dt))?;
    let k3 = sys.eval(&add(x, &k2, 0.5 * dt))?;
    let k4 = sys.eval(&add(x, &k3, dt))?;
    Ok((0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Simulates `count` trajectories from uniformly sampled initial states for
/// `horizon` time units with fixed-step RK4, stopping each at the state-space
/// boundary. Fails on the first state inside an unsafe set or with
/// `B(x) > 1e-6`.
pub fn simulate_check(net: &Network, sys: &SystemSpec, horizon: f64, count: usize, seed: u64) -> Result<SimReport> {
    if net.input_dim() != sys.dim() {
        return Err(invalid("network and system dimensions differ"));
    }
    if sys.initial_sets.is_empty() {
        return Err(invalid("system has no initial set to sample from"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (horizon / SIM_DT).round() as usize;
    let mut report = SimReport {
        trajectories: count,
        steps: 0,
        left_state_space: 0,
        max_certificate: f64::NEG_INFINITY,
    };
    for k in 0..count {
        let z = &sys.initial_sets[k % sys.initial_sets.len()];
        let beta: Vec<f64> = (0..z.num_generators()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut x = z.eval_factors(&beta).to_vec();
        for step in 0..=steps {
            let t = step as f64 * SIM_DT;
            if !sys.state_space.contains_point(&x) {
                report.left_state_space += 1;
                break;
            }
            if let Some(u) = sys.unsafe_sets.iter().position(|u| u.contains_point(&x, 0.0)) {
                return Err(Error::ContractViolation(format!(
                    "trajectory {k} entered unsafe set {u} at t = {t:.3} (x = {x:?})"
                )));
            }
            let b = net.forward(&x)?;
            report.max_certificate = report.max_certificate.max(b);
            if b > B_TOL {
                return Err(Error::ContractViolation(format!(
                    "trajectory {k} reached B = {b:e} at t = {t:.3} (x = {x:?})"
                )));
            }
            if step == steps {
                break;
            }
            x = rk4_step(sys, &x, SIM_DT)?;
            report.steps += 1;
        }
    }
    Ok(report)
}
