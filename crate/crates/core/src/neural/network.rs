use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::activation::tanh_prime;
use crate::error::{invalid, Result};

static NEXT_REVISION: AtomicU64 = AtomicU64::new(1);

fn fresh_revision() -> u64 {
    NEXT_REVISION.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Linear { w: Array2<f64>, b: Array1<f64> },
    Tanh,
}

/// Named architectures, expanded for a given input dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchPreset {
    /// One linear layer straight to the output.
    N1,
    /// linear, tanh, linear with 8 hidden neurons.
    N2,
    /// linear, tanh, linear, tanh, linear with 5 hidden neurons.
    N3,
}

impl ArchPreset {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "N1" => Some(Self::N1),
            "N2" => Some(Self::N2),
            "N3" => Some(Self::N3),
            _ => None,
        }
    }

    pub fn hidden(self) -> Vec<usize> {
        match self {
            Self::N1 => vec![],
            Self::N2 => vec![8],
            Self::N3 => vec![5, 5],
        }
    }

    pub fn widths(self, input: usize) -> Vec<usize> {
        layer_widths(input, &self.hidden())
    }
}

/// Per-layer output widths `[ν₀, ν₁, …, ν_κ]` for an MLP with the given
/// hidden widths, each hidden linear layer followed by tanh.
pub fn layer_widths(input: usize, hidden: &[usize]) -> Vec<usize> {
    let mut w = vec![input];
    for &h in hidden {
        w.push(h);
        w.push(h);
    }
    w.push(1);
    w
}

/// The feed-forward certificate `B_θ: Rⁿ → R`.
///
/// Layer `k` (one-based) is linear for odd `k` and tanh for even `k`.
/// Every parameter change assigns a new revision so stale set traces can be
/// detected.
#[derive(Clone, Debug)]
pub struct Network {
    layers: Vec<Layer>,
    revision: u64,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Glorot-uniform weights, zero biases, from a seeded ChaCha8 stream.
pub fn nn_init(widths: &[usize], seed: u64) -> Result<Network> {
    validate_widths(widths)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for k in 1..widths.len() {
        if k % 2 == 0 {
            layers.push(Layer::Tanh);
            continue;
        }
        let (fan_in, fan_out) = (widths[k - 1], widths[k]);
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.gen_range(-a..a));
        layers.push(Layer::Linear {
            w,
            b: Array1::zeros(fan_out),
        });
    }
    Network::from_layers(layers)
}

fn validate_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 || widths.len() % 2 != 0 {
        return Err(invalid(format!(
            "layer widths {widths:?}: need an odd number of layers (linear, tanh, …, linear)"
        )));
    }
    if widths.iter().any(|&w| w == 0) {
        return Err(invalid(format!("layer widths {widths:?}: zero width")));
    }
    if *widths.last().unwrap() != 1 {
        return Err(invalid(format!("layer widths {widths:?}: output width must be 1")));
    }
    for k in (2..widths.len()).step_by(2) {
        if widths[k] != widths[k - 1] {
            return Err(invalid(format!(
                "layer widths {widths:?}: tanh layer {k} changes width"
            )));
        }
    }
    Ok(())
}

impl Network {
    /// Checks alternation (linear first and last, no adjacent tanh layers),
    /// shape chaining and a scalar output.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid("network has no layers"));
        }
        let mut width: Option<usize> = None;
        for (k, layer) in layers.iter().enumerate() {
            let expect_linear = k % 2 == 0;
            match layer {
                Layer::Linear { w, b } => {
                    if !expect_linear {
                        return Err(invalid(format!("layer {} must be tanh", k + 1)));
                    }
                    if w.nrows() == 0 || w.ncols() == 0 || b.len() != w.nrows() {
                        return Err(invalid(format!("layer {} has inconsistent shapes", k + 1)));
                    }
                    if let Some(prev) = width {
                        if w.ncols() != prev {
                            return Err(invalid(format!(
                                "layer {} expects {} inputs, previous layer gives {prev}",
                                k + 1,
                                w.ncols()
                            )));
                        }
                    }
                    if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                        return Err(invalid(format!("layer {} has non-finite parameters", k + 1)));
                    }
                    width = Some(w.nrows());
                }
                Layer::Tanh => {
                    if expect_linear {
                        return Err(invalid(format!("layer {} must be linear", k + 1)));
                    }
                }
            }
        }
        if !matches!(layers.last(), Some(Layer::Linear { .. })) {
            return Err(invalid("last layer must be linear"));
        }
        if width != Some(1) {
            return Err(invalid("network output must be scalar"));
        }
        Ok(Self {
            layers,
            revision: fresh_revision(),
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub(crate) fn revision(&self) -> u64 {
        self.revision
    }

    pub fn input_dim(&self) -> usize {
        match &self.layers[0] {
            Layer::Linear { w, .. } => w.ncols(),
            Layer::Tanh => unreachable!("validated"),
        }
    }

    /// `[ν₀, ν₁, …, ν_κ]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut out = vec![self.input_dim()];
        for layer in &self.layers {
            let prev = *out.last().unwrap();
            out.push(match layer {
                Layer::Linear { w, .. } => w.nrows(),
                Layer::Tanh => prev,
            });
        }
        out
    }

    pub fn num_tanh_neurons(&self) -> usize {
        let widths = self.widths();
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Tanh))
            .map(|(k, _)| widths[k + 1])
            .sum()
    }

    pub fn num_params(&self) -> usize {
        self.linear_layers().map(|(w, b)| w.len() + b.len()).sum()
    }

    pub(crate) fn linear_layers(&self) -> impl Iterator<Item = (&Array2<f64>, &Array1<f64>)> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Linear { w, b } => Some((w, b)),
            Layer::Tanh => None,
        })
    }

    /// θ as the concatenation of each linear layer's `W` (row-major) and `b`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.linear_layers() {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(invalid(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite parameter"));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            if let Layer::Linear { w, b } = layer {
                for v in w.iter_mut().chain(b.iter_mut()) {
                    *v = theta[off];
                    off += 1;
                }
            }
        }
        self.revision = fresh_revision();
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(invalid(format!(
                "input of dimension {} for a network on R^{}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// `B(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Linear { w, b } => {
                    next.clear();
                    next.extend(w.rows().into_iter().zip(b).map(|(row, bi)| {
                        row.iter().zip(&a).fold(*bi, |acc, (wij, aj)| acc + wij * aj)
                    }));
                    std::mem::swap(&mut a, &mut next);
                }
                Layer::Tanh => a.iter_mut().for_each(|v| *v = v.tanh()),
            }
        }
        Ok(a[0])
    }

    /// Activations entering each layer, plus the output.
    fn activations(&self, x: &[f64]) -> Vec<Array1<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(Array1::from(x.to_vec()));
        for layer in &self.layers {
            let a = acts.last().unwrap();
            let next = match layer {
                Layer::Linear { w, b } => w.dot(a) + b,
                Layer::Tanh => a.mapv(f64::tanh),
            };
            acts.push(next);
        }
        acts
    }

    /// `∇ₓB(x)` by backpropagation.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let acts = self.activations(x);
        let mut g = Array1::from(vec![1.0]);
        for (k, layer) in self.layers.iter().enumerate().rev() {
            g = match layer {
                Layer::Linear { w, .. } => w.t().dot(&g),
                Layer::Tanh => &g * &acts[k].mapv(tanh_prime),
            };
        }
        Ok(g.to_vec())
    }

    /// `B(x)` and `∂B(x)/∂θ` in [`Network::params`] order.
    pub fn param_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        let acts = self.activations(x);
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::new();
        let mut g = Array1::from(vec![1.0]);
        for (k, layer) in self.layers.iter().enumerate().rev() {
            g = match layer {
                Layer::Linear { w, .. } => {
                    let a = &acts[k];
                    let dw = Array2::from_shape_fn(w.raw_dim(), |(i, j)| g[i] * a[j]);
                    grads.push((dw, g.clone()));
                    w.t().dot(&g)
                }
                Layer::Tanh => &g * &acts[k].mapv(tanh_prime),
            };
        }
        let mut out = Vec::with_capacity(self.num_params());
        for (dw, db) in grads.iter().rev() {
            out.extend(dw.iter());
            out.extend(db.iter());
        }
        Ok((acts.last().unwrap()[0], out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn presets_expand_to_layer_widths() {
        assert_eq!(ArchPreset::N2.widths(3), vec![3, 8, 8, 1]);
        assert_eq!(ArchPreset::N1.widths(4), vec![4, 1]);
        assert_eq!(ArchPreset::N3.widths(2), vec![2, 5, 5, 5, 5, 1]);
        let net = nn_init(&ArchPreset::N2.widths(3), 0).unwrap();
        assert_eq!(net.num_layers(), 3);
        assert_eq!(net.num_tanh_neurons(), 8);
        assert!(matches!(net.layers()[1], Layer::Tanh));
    }

    #[test]
    fn rejects_malformed_architectures() {
        assert!(nn_init(&[2], 0).is_err());
        assert!(nn_init(&[2, 3], 0).is_err());
        assert!(nn_init(&[2, 3, 4, 1], 0).is_err());
        assert!(nn_init(&[2, 0, 0, 1], 0).is_err());
        assert!(nn_init(&[2, 3, 3], 0).is_err());
        let w = array![[1.0, 2.0]];
        let b = array![0.0];
        assert!(Network::from_layers(vec![Layer::Tanh]).is_err());
        assert!(Network::from_layers(vec![
            Layer::Linear { w: w.clone(), b: b.clone() },
            Layer::Tanh,
        ])
        .is_err());
        assert!(Network::from_layers(vec![
            Layer::Linear { w: w.clone(), b: b.clone() },
            Layer::Linear { w, b },
        ])
        .is_err());
    }

    #[test]
    fn same_seed_same_network() {
        let a = nn_init(&[2, 8, 8, 1], 42).unwrap();
        let b = nn_init(&[2, 8, 8, 1], 42).unwrap();
        let c = nn_init(&[2, 8, 8, 1], 43).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn glorot_bounds_hold_for_many_seeds() {
        for seed in 0..1000 {
            let net = nn_init(&[3, 5, 5, 5, 5, 1], seed).unwrap();
            for (w, b) in net.linear_layers() {
                let a = (6.0 / (w.ncols() + w.nrows()) as f64).sqrt();
                assert!(w.iter().all(|v| v.abs() <= a));
                assert!(b.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn linear_and_zero_networks() {
        let net = Network::from_layers(vec![Layer::Linear {
            w: array![[2.0, -1.0]],
            b: array![0.5],
        }])
        .unwrap();
        assert_eq!(net.forward(&[1.0, 3.0]).unwrap(), -0.5);
        assert_eq!(net.input_gradient(&[7.0, 7.0]).unwrap(), vec![2.0, -1.0]);
        assert!(net.forward(&[1.0]).is_err());

        let mut z = nn_init(&[2, 4, 4, 1], 1).unwrap();
        z.set_params(&vec![0.0; z.num_params()]).unwrap();
        assert_eq!(z.forward(&[3.0, -2.0]).unwrap(), 0.0);
    }

    #[test]
    fn params_round_trip_and_bump_revision() {
        let mut net = nn_init(&[2, 3, 3, 1], 9).unwrap();
        let rev = net.revision();
        let theta = net.params();
        assert_eq!(theta.len(), 2 * 3 + 3 + 3 + 1);
        net.set_params(&theta).unwrap();
        assert_eq!(net.params(), theta);
        assert_ne!(net.revision(), rev);
        assert!(net.set_params(&theta[1..]).is_err());
    }

    #[test]
    fn pointwise_gradients_match_finite_differences() {
        let net = nn_init(&[2, 5, 5, 5, 5, 1], 3).unwrap();
        let x = [0.3, -0.8];
        let h = 1e-6;
        let g = net.input_gradient(&x).unwrap();
        for i in 0..2 {
            let mut p = x;
            let mut m = x;
            p[i] += h;
            m[i] -= h;
            let fd = (net.forward(&p).unwrap() - net.forward(&m).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
        let (v, dtheta) = net.param_gradient(&x).unwrap();
        assert_eq!(v, net.forward(&x).unwrap());
        let theta = net.params();
        let mut probe = net.clone();
        for k in 0..theta.len() {
            let mut t = theta.clone();
            t[k] += h;
            probe.set_params(&t).unwrap();
            let fp = probe.forward(&x).unwrap();
            t[k] -= 2.0 * h;
            probe.set_params(&t).unwrap();
            let fm = probe.forward(&x).unwrap();
            assert!(((fp - fm) / (2.0 * h) - dtheta[k]).abs() < 1e-8, "param {k}");
        }
    }
}
