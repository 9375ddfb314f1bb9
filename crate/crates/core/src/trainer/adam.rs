use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

/// Moment estimates and step count.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `theta` in place.
pub fn adam_step(state: &mut AdamState, theta: &mut [f64], grad: &[f64], p: &AdamParams) {
    assert_eq!(theta.len(), grad.len(), "parameter and gradient lengths differ");
    assert_eq!(state.m.len(), grad.len(), "optimizer state has the wrong length");
    state.t += 1;
    let c1 = 1.0 - p.beta1.powi(state.t as i32);
    let c2 = 1.0 - p.beta2.powi(state.t as i32);
    for i in 0..theta.len() {
        let g = grad[i];
        state.m[i] = p.beta1 * state.m[i] + (1.0 - p.beta1) * g;
        state.v[i] = p.beta2 * state.v[i] + (1.0 - p.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        theta[i] -= p.eta * m_hat / (v_hat.sqrt() + p.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: AdamParams = AdamParams {
        eta: 0.1,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
    };

    #[test]
    fn zero_gradient_keeps_theta() {
        let mut s = AdamState::new(3);
        let mut theta = vec![1.0, -2.0, 0.5];
        adam_step(&mut s, &mut theta, &[0.0; 3], &P);
        assert_eq!(theta, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_eta_times_sign() {
        let mut s = AdamState::new(3);
        let mut theta = vec![0.0; 3];
        let g = [3.0, -0.25, 1e-3];
        adam_step(&mut s, &mut theta, &g, &P);
        for (t, gi) in theta.iter().zip(g) {
            // m̂ = g, v̂ = g², so the step is η·g/(|g| + eps)
            let expect = -P.eta * gi / (gi.abs() + P.eps);
            assert!((t - expect).abs() < 1e-15);
            assert!((t + P.eta * gi.signum()).abs() < 1e-5 * P.eta / gi.abs().min(1.0));
        }
    }

    #[test]
    fn deterministic() {
        let mut a = AdamState::new(2);
        let mut b = a.clone();
        let (mut ta, mut tb) = (vec![1.0, 2.0], vec![1.0, 2.0]);
        for k in 0..5 {
            let g = [0.3 * k as f64, -1.0];
            adam_step(&mut a, &mut ta, &g, &P);
            adam_step(&mut b, &mut tb, &g, &P);
        }
        assert_eq!(ta, tb);
        assert_eq!(a, b);
    }
}
