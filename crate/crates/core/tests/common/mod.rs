//! Randomized soundness trials shared by the property tests and the
//! acceptance harness. Each trial returns the number of violations found.

#![allow(dead_code)]

use barrier_core::certloss::lie_enclose;
use barrier_core::dynsys::{builtin, SystemSpec};
use barrier_core::neural::{nn_forward_set, nn_gradset, nn_init, ArchPreset, Layer, Network};
use barrier_core::setcore::{IntervalVector, Zonotope};
use barrier_core::zeroset::{enclose_zero_set, SplitDims, ZeroParams};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ARCHS: [ArchPreset; 3] = [ArchPreset::N1, ArchPreset::N2, ArchPreset::N3];

/// Systems covering affine, polynomial and transcendental flows in 2 to 4
/// dimensions.
pub const SYSTEMS: [&str; 5] = ["polynomial", "darboux", "exponential", "lyapunov", "peruffo"];

pub fn system(name: &str) -> SystemSpec {
    builtin(name, None).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pointwise `B(x)` straight from the layer list.
pub fn oracle_forward(net: &Network, x: &[f64]) -> f64 {
    let mut v: Vec<f64> = x.to_vec();
    for layer in net.layers() {
        v = match layer {
            Layer::Linear { w, b } => (0..w.nrows())
                .map(|i| b[i] + (0..w.ncols()).map(|j| w[[i, j]] * v[j]).sum::<f64>())
                .collect(),
            Layer::Tanh => v.iter().map(|a| a.tanh()).collect(),
        };
    }
    v[0]
}

/// Pointwise `∇ₓB(x)` by the chain rule over the layer list.
pub fn oracle_gradient(net: &Network, x: &[f64]) -> Vec<f64> {
    let mut acts = vec![x.to_vec()];
    for layer in net.layers() {
        let v = acts.last().unwrap();
        let next = match layer {
            Layer::Linear { w, b } => (0..w.nrows())
                .map(|i| b[i] + (0..w.ncols()).map(|j| w[[i, j]] * v[j]).sum::<f64>())
                .collect(),
            Layer::Tanh => v.iter().map(|a| a.tanh()).collect(),
        };
        acts.push(next);
    }
    let mut g = vec![1.0];
    for (k, layer) in net.layers().iter().enumerate().rev() {
        g = match layer {
            Layer::Linear { w, .. } => (0..w.ncols())
                .map(|j| (0..w.nrows()).map(|i| w[[i, j]] * g[i]).sum())
                .collect(),
            Layer::Tanh => g
                .iter()
                .zip(&acts[k])
                .map(|(gi, a)| gi * (1.0 - a.tanh().powi(2)))
                .collect(),
        };
    }
    g
}

/// A network with random parameters at a random scale, so trials reach both
/// the near-linear and the saturated parts of tanh.
pub fn random_net(r: &mut ChaCha8Rng, n: usize, arch: ArchPreset) -> Network {
    let mut net = nn_init(&arch.widths(n), r.gen()).unwrap();
    let scale = [0.5, 1.0, 2.0, 4.0][r.gen_range(0..4)];
    let theta: Vec<f64> = net
        .params()
        .iter()
        .map(|t| scale * t + r.gen_range(-0.5..0.5))
        .collect();
    net.set_params(&theta).unwrap();
    net
}

/// A random sub-box of `domain` whose width ranges from tiny to full.
pub fn random_box(r: &mut ChaCha8Rng, domain: &IntervalVector) -> IntervalVector {
    let frac = 10f64.powf(r.gen_range(-3.0..0.0));
    let (lo, hi): (Vec<f64>, Vec<f64>) = domain
        .iter()
        .map(|d| {
            let w = d.width() * frac;
            let a = d.lo() + r.gen::<f64>() * (d.width() - w);
            (a, a + w)
        })
        .unzip();
    IntervalVector::from_bounds(&lo, &hi).unwrap()
}

/// A box inside `domain` with up to two extra random generators.
pub fn random_zonotope(r: &mut ChaCha8Rng, domain: &IntervalVector) -> Zonotope {
    let b = Zonotope::from_interval(&random_box(r, domain));
    let n = b.dim();
    let extra = r.gen_range(0..3);
    if extra == 0 {
        return b;
    }
    let scale = b.interval_hull().max_radius();
    let g = Array2::from_shape_fn((n, extra), |_| scale * r.gen_range(-0.5..0.5));
    let z = Zonotope::new(Array1::zeros(n), g).unwrap();
    b.minkowski(&z).unwrap()
}

/// A point of `z`, with factors at the vertices now and then.
pub fn sample(r: &mut ChaCha8Rng, z: &Zonotope) -> Vec<f64> {
    let beta: Vec<f64> = (0..z.num_generators())
        .map(|_| if r.gen_bool(0.2) { [-1.0, 1.0][r.gen_range(0..2)] } else { r.gen_range(-1.0..=1.0) })
        .collect();
    z.eval_factors(&beta).to_vec()
}

fn tol(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

/// Samples `points` states of a random set and checks `B(x)` against the
/// forward enclosure.
pub fn forward_trial(r: &mut ChaCha8Rng, sys: &SystemSpec, arch: ArchPreset, points: usize) -> usize {
    let net = random_net(r, sys.dim(), arch);
    let z = random_zonotope(r, &sys.state_space);
    let (y, _) = nn_forward_set(&net, &z).unwrap();
    let iv = y.bounds_1d();
    (0..points)
        .filter(|_| {
            let v = oracle_forward(&net, &sample(r, &z));
            v < iv.lo() - tol(v) || v > iv.hi() + tol(v)
        })
        .count()
}

/// Checks `∇B(x)` against the interval hull of the gradient set.
pub fn gradient_trial(r: &mut ChaCha8Rng, sys: &SystemSpec, arch: ArchPreset, points: usize) -> usize {
    let net = random_net(r, sys.dim(), arch);
    let z = random_zonotope(r, &sys.state_space);
    let (_, trace) = nn_forward_set(&net, &z).unwrap();
    let hull = nn_gradset(&net, &trace).unwrap().set.interval_hull();
    (0..points)
        .filter(|_| {
            let g = oracle_gradient(&net, &sample(r, &z));
            hull.iter().zip(&g).any(|(iv, &v)| v < iv.lo() - tol(v) || v > iv.hi() + tol(v))
        })
        .count()
}

/// Checks `∇B(x)ᵀf(x)` against the Lie-derivative enclosure of a random box.
pub fn lie_trial(r: &mut ChaCha8Rng, sys: &SystemSpec, arch: ArchPreset, points: usize) -> usize {
    let net = random_net(r, sys.dim(), arch);
    let xi = Zonotope::from_interval(&random_box(r, &sys.state_space));
    let subsplits = r.gen_range(1..=3);
    let iv = lie_enclose(&net, sys, &xi, subsplits).unwrap();
    (0..points)
        .filter(|_| {
            let x = sample(r, &xi);
            let f = sys.eval(&x).unwrap();
            let v: f64 = oracle_gradient(&net, &x).iter().zip(&f).map(|(a, b)| a * b).sum();
            v < iv.lo() - tol(v) || v > iv.hi() + tol(v)
        })
        .count()
}

/// Same network with its output bias shifted by `delta`.
fn shift_output(net: &Network, delta: f64) -> Network {
    let mut layers = net.layers().to_vec();
    if let Some(Layer::Linear { b, .. }) = layers.last_mut() {
        b[0] += delta;
    }
    Network::from_layers(layers).unwrap()
}

/// A root of `B` on the segment `[a, b]` when the endpoint signs differ.
fn bisect(net: &Network, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let at = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };
    let (mut lo, mut hi) = (0.0, 1.0);
    let flo = oracle_forward(net, a);
    if flo.signum() == oracle_forward(net, b).signum() {
        return None;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if oracle_forward(net, &at(mid)).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(at(0.5 * (lo + hi)))
}

pub fn random_zero_params(r: &mut ChaCha8Rng, n: usize) -> ZeroParams {
    let split_dims = if r.gen_bool(0.5) { SplitDims::All } else { SplitDims::Count(r.gen_range(1..=n)) };
    let splits = if n > 2 { 2 } else { r.gen_range(2..=3) };
    ZeroParams::new(r.gen_range(1..=2), splits, split_dims).unwrap()
}

/// Plants a root at a random state, then checks it and `roots - 1` roots
/// found by bisection against the zero cover. Returns
/// `(violations, roots checked)`.
pub fn zero_cover_trial(r: &mut ChaCha8Rng, sys: &SystemSpec, arch: ArchPreset, roots: usize) -> (usize, usize) {
    let x = &sys.state_space;
    let base = random_net(r, sys.dim(), arch);
    let domain = Zonotope::from_interval(x);
    let p = sample(r, &domain);
    let net = shift_output(&base, -oracle_forward(&base, &p));
    let cover = enclose_zero_set(&net, x, &random_zero_params(r, sys.dim())).unwrap();
    let mut found = vec![p];
    let mut attempts = 0;
    while found.len() < roots && attempts < 20 * roots {
        attempts += 1;
        let a = sample(r, &domain);
        let b = sample(r, &domain);
        if let Some(root) = bisect(&net, &a, &b) {
            found.push(root);
        }
    }
    let bad = found
        .iter()
        .filter(|q| oracle_forward(&net, q).abs() < 1e-9 && !cover.contains_point(q, 1e-9))
        .count();
    (bad, found.len())
}

/// Relative error between the set-loss gradient and central differences at
/// a random θ on `sys`, with the zero cover held fixed. `None` when some
/// discrete branch flips within `10h` of θ along a coordinate, so the caller
/// draws again.
pub fn finite_difference_trial(r: &mut ChaCha8Rng, sys: &SystemSpec, arch: ArchPreset, h: f64) -> Option<f64> {
    use barrier_core::certloss::{branch_signature, total_loss, total_loss_with_graph};
    use barrier_core::neural::param_grad;
    use barrier_core::trainer::TrainConfig;

    let cfg = TrainConfig::for_benchmark(&sys.name, Some(sys.dim())).unwrap();
    let (eps, sub) = (cfg.epsilon, cfg.lie_subsplits);
    let net = random_net(r, sys.dim(), arch);
    let cover = enclose_zero_set(&net, &sys.state_space, &cfg.zero).unwrap();
    let theta = net.params();
    let sig = branch_signature(&net, sys, &cover, eps, sub).unwrap();
    let mut probe = net.clone();
    let mut shifted = |k: usize, d: f64| {
        let mut t = theta.clone();
        t[k] += d;
        probe.set_params(&t).unwrap();
        probe.clone()
    };
    let mut fd = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        // a branch flip inside (-10h, 10h) shows at one of the ends
        for d in [10.0 * h, -10.0 * h] {
            if branch_signature(&shifted(k, d), sys, &cover, eps, sub).unwrap() != sig {
                return None;
            }
        }
        let lp = total_loss(&shifted(k, h), sys, &cover, eps, sub).unwrap().total;
        let lm = total_loss(&shifted(k, -h), sys, &cover, eps, sub).unwrap().total;
        fd.push((lp - lm) / (2.0 * h));
    }
    let (_, graph) = total_loss_with_graph(&net, sys, &cover, eps, sub).unwrap();
    let g = param_grad(&net, &graph).unwrap();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let scale = norm(&g).max(norm(&fd));
    Some(if scale == 0.0 { 0.0 } else { norm(&diff) / scale })
}
