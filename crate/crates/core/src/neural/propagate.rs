//! Set propagation through the network and the matching adjoints.
//!
//! Forward: linear layers map zonotopes exactly, tanh layers use the
//! per-neuron secant enclosure and append one generator per neuron, so the
//! first `q₀` columns of every layer set stay tied to the input factors.
//!
//! Backward: the gradient set starts at `⟨1, ∅⟩`, is mapped by `Wᵀ` through
//! linear layers and multiplied coordinatewise by the derivative range
//! `[m ± r]` of each tanh neuron, which adds one column per neuron.

use std::hash::Hasher;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::activation::{deriv_bounds_with_jacobian, enclose_with_jacobian, ActEnclosure, EncloseJacobian};
use super::network::{Layer, Network};
use crate::error::{invalid, Error, Result};
use crate::setcore::{IntervalVector, Zonotope};

/// Pre-activation bounds and enclosure coefficients of one tanh layer.
#[derive(Clone, Debug)]
pub struct TanhRecord {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub coeffs: Vec<ActEnclosure>,
    pub(crate) jac: Vec<EncloseJacobian>,
}

impl TanhRecord {
    pub fn pre_activation_hull(&self) -> IntervalVector {
        IntervalVector::from_bounds(&self.lower, &self.upper).expect("ordered bounds")
    }
}

/// Everything [`nn_forward_set`] computed, kept for the gradient set and
/// the parameter adjoints.
#[derive(Clone, Debug)]
pub struct SetTrace {
    revision: u64,
    /// Generator count of the input set.
    pub q0: usize,
    /// `H₀ … H_κ`: the input set followed by each layer's output set.
    pub sets: Vec<Zonotope>,
    /// One entry per layer, `Some` for tanh layers.
    pub tanh: Vec<Option<TanhRecord>>,
}

impl SetTrace {
    pub fn output(&self) -> &Zonotope {
        self.sets.last().expect("non-empty trace")
    }

    /// Feeds every discrete choice of the forward pass into `h`: signs of
    /// generator entries and which candidates bound each tanh remainder.
    pub(crate) fn hash_branches(&self, h: &mut impl Hasher) {
        for z in &self.sets {
            hash_signs(z.generators().iter().copied(), h);
        }
        for rec in self.tanh.iter().flatten() {
            for j in &rec.jac {
                // the two endpoints tie exactly under the secant slope
                let class = |k: u8| if k <= 1 { 0 } else { k };
                h.write_u8(class(j.branch.0));
                h.write_u8(class(j.branch.1));
            }
            for (l, u) in rec.lower.iter().zip(&rec.upper) {
                h.write_u8(((*l > 0.0) as u8) | (((*u < 0.0) as u8) << 1) | (((u.abs() >= l.abs()) as u8) << 2));
            }
        }
    }

    pub(crate) fn check_fresh(&self, net: &Network) -> Result<()> {
        if self.revision != net.revision() {
            return Err(Error::ContractViolation(
                "set trace was computed for different network parameters".into(),
            ));
        }
        Ok(())
    }
}

/// Enclosure of `B(X)`, a one-dimensional zonotope.
pub fn nn_forward_set(net: &Network, x: &Zonotope) -> Result<(Zonotope, SetTrace)> {
    if x.dim() != net.input_dim() {
        return Err(invalid(format!(
            "input set of dimension {} for a network on R^{}",
            x.dim(),
            net.input_dim()
        )));
    }
    let mut sets = Vec::with_capacity(net.num_layers() + 1);
    let mut tanh = Vec::with_capacity(net.num_layers());
    sets.push(x.clone());
    for layer in net.layers() {
        let h = sets.last().unwrap();
        let (next, rec) = match layer {
            Layer::Linear { w, b } => (h.affine(w, b)?, None),
            Layer::Tanh => {
                let (z, rec) = tanh_forward(h);
                (z, Some(rec))
            }
        };
        sets.push(next);
        tanh.push(rec);
    }
    let trace = SetTrace {
        revision: net.revision(),
        q0: x.num_generators(),
        sets,
        tanh,
    };
    Ok((trace.output().clone(), trace))
}

fn tanh_forward(h: &Zonotope) -> (Zonotope, TanhRecord) {
    let (c, g) = (h.center(), h.generators());
    let (nu, q) = g.dim();
    let mut rec = TanhRecord {
        lower: Vec::with_capacity(nu),
        upper: Vec::with_capacity(nu),
        coeffs: Vec::with_capacity(nu),
        jac: Vec::with_capacity(nu),
    };
    let mut center = Array1::zeros(nu);
    let mut gens = Array2::zeros((nu, q + nu));
    for i in 0..nu {
        let r = crate::setcore::abs_sum(g.row(i));
        let (l, u) = (c[i] - r, c[i] + r);
        let (e, jac) = enclose_with_jacobian(l, u);
        center[i] = e.lambda * c[i] + e.mu;
        for j in 0..q {
            gens[[i, j]] = e.lambda * g[[i, j]];
        }
        gens[[i, q + i]] = e.delta;
        rec.lower.push(l);
        rec.upper.push(u);
        rec.coeffs.push(e);
        rec.jac.push(jac);
    }
    (Zonotope::from_raw(center, gens), rec)
}

/// Derivative range of one tanh layer in midpoint-radius form.
#[derive(Clone, Debug)]
struct DerivRecord {
    m: Vec<f64>,
    r: Vec<f64>,
    /// `|cᵢ| + Σⱼ|Gᵢⱼ|` of the incoming gradient set.
    s: Vec<f64>,
    jac: Vec<[[f64; 2]; 2]>,
}

/// Enclosure of `{∇ₓB(x) | x ∈ X}`.
#[derive(Clone, Debug)]
pub struct GradientSet {
    pub set: Zonotope,
    revision: u64,
    /// Gradient set on the output side of each layer.
    outer: Vec<Zonotope>,
    deriv: Vec<Option<DerivRecord>>,
}

pub fn nn_gradset(net: &Network, trace: &SetTrace) -> Result<GradientSet> {
    trace.check_fresh(net)?;
    let kappa = net.num_layers();
    let mut outer = vec![Zonotope::point(Array1::zeros(0)); kappa];
    let mut deriv: Vec<Option<DerivRecord>> = vec![None; kappa];
    let mut cur = Zonotope::point(Array1::from(vec![1.0]));
    for k in (0..kappa).rev() {
        let next = match &net.layers()[k] {
            Layer::Linear { w, .. } => {
                Zonotope::from_raw(w.t().dot(&cur.center()), w.t().dot(&cur.generators()))
            }
            Layer::Tanh => {
                let rec = trace.tanh[k].as_ref().expect("tanh record");
                let (z, d) = deriv_scale(&cur, rec);
                deriv[k] = Some(d);
                z
            }
        };
        outer[k] = std::mem::replace(&mut cur, next);
    }
    Ok(GradientSet {
        set: cur,
        revision: net.revision(),
        outer,
        deriv,
    })
}

fn deriv_scale(z: &Zonotope, rec: &TanhRecord) -> (Zonotope, DerivRecord) {
    let (c, g) = (z.center(), z.generators());
    let (nu, q) = g.dim();
    let mut d = DerivRecord {
        m: Vec::with_capacity(nu),
        r: Vec::with_capacity(nu),
        s: Vec::with_capacity(nu),
        jac: Vec::with_capacity(nu),
    };
    let mut center = Array1::zeros(nu);
    let mut gens = Array2::zeros((nu, q + nu));
    for i in 0..nu {
        let (lo, hi, jac) = deriv_bounds_with_jacobian(rec.lower[i], rec.upper[i]);
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let s = c[i].abs() + crate::setcore::abs_sum(g.row(i));
        center[i] = m * c[i];
        for j in 0..q {
            gens[[i, j]] = m * g[[i, j]];
        }
        gens[[i, q + i]] = r * s;
        d.m.push(m);
        d.r.push(r);
        d.s.push(s);
        d.jac.push(jac);
    }
    (Zonotope::from_raw(center, gens), d)
}

/// Subgradient of `|x|` with value 0 at 0.
#[inline]
pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Offsets of each linear layer's `W` block in θ (its `b` block follows).
fn param_offsets(net: &Network) -> Vec<usize> {
    let mut off = 0;
    net.layers()
        .iter()
        .map(|l| {
            let here = off;
            if let Layer::Linear { w, b } = l {
                off += w.len() + b.len();
            }
            here
        })
        .collect()
}

/// Adjoints of the pre-activation bounds `(∂/∂l, ∂/∂u)`, per layer and neuron.
pub(crate) type HullAdjoint = Vec<Option<Vec<(f64, f64)>>>;

/// Accumulates into `grad` the θ-gradient of a scalar function of the output
/// set with adjoints `(dc, dG)`, plus extra adjoints on the pre-activation
/// bounds.
pub(crate) fn forward_set_backward(
    net: &Network,
    trace: &SetTrace,
    dc_out: ArrayView1<'_, f64>,
    dg_out: ArrayView2<'_, f64>,
    hull_adj: Option<&HullAdjoint>,
    grad: &mut [f64],
) {
    let offsets = param_offsets(net);
    let mut dc = dc_out.to_owned();
    let mut dg = dg_out.to_owned();
    for k in (0..net.num_layers()).rev() {
        let input = &trace.sets[k];
        let (c, g) = (input.center(), input.generators());
        match &net.layers()[k] {
            Layer::Linear { w, b } => {
                let (rows, cols) = w.dim();
                let q = g.ncols();
                let base = offsets[k];
                for i in 0..rows {
                    for j in 0..cols {
                        let mut acc = dc[i] * c[j];
                        for col in 0..q {
                            acc += dg[[i, col]] * g[[j, col]];
                        }
                        grad[base + i * cols + j] += acc;
                    }
                }
                let bbase = base + w.len();
                for i in 0..b.len() {
                    grad[bbase + i] += dc[i];
                }
                if k > 0 {
                    dc = w.t().dot(&dc);
                    dg = w.t().dot(&dg);
                }
            }
            Layer::Tanh => {
                let rec = trace.tanh[k].as_ref().expect("tanh record");
                let (nu, q) = g.dim();
                let extra = hull_adj.and_then(|h| h[k].as_ref());
                let mut dc_in = Array1::zeros(nu);
                let mut dg_in = Array2::zeros((nu, q));
                for i in 0..nu {
                    let e = &rec.coeffs[i];
                    let mut dlam = dc[i] * c[i];
                    for j in 0..q {
                        dlam += dg[[i, j]] * g[[i, j]];
                    }
                    let adj = [dlam, dc[i], dg[[i, q + i]]];
                    let jac = &rec.jac[i];
                    let (mut dl, mut du) = (0.0, 0.0);
                    for t in 0..3 {
                        dl += jac.dl[t] * adj[t];
                        du += jac.du[t] * adj[t];
                    }
                    if let Some(x) = extra {
                        dl += x[i].0;
                        du += x[i].1;
                    }
                    dc_in[i] = e.lambda * dc[i] + dl + du;
                    let spread = du - dl;
                    for j in 0..q {
                        dg_in[[i, j]] = e.lambda * dg[[i, j]] + spread * sgn(g[[i, j]]);
                    }
                }
                dc = dc_in;
                dg = dg_in;
            }
        }
    }
}

/// Accumulates the θ-gradient of a scalar function of the gradient set with
/// adjoints `(dc, dG)` on `gs.set`. Returns the adjoints this induces on the
/// forward pre-activation bounds.
pub(crate) fn gradset_backward(
    net: &Network,
    gs: &GradientSet,
    dc_in: ArrayView1<'_, f64>,
    dg_in: ArrayView2<'_, f64>,
    grad: &mut [f64],
) -> HullAdjoint {
    let offsets = param_offsets(net);
    let mut hull: HullAdjoint = vec![None; net.num_layers()];
    let mut dc = dc_in.to_owned();
    let mut dg = dg_in.to_owned();
    for k in 0..net.num_layers() {
        let out = &gs.outer[k];
        let (c, g) = (out.center(), out.generators());
        match &net.layers()[k] {
            Layer::Linear { w, .. } => {
                // result = Wᵀ·out
                let (rows, cols) = w.dim();
                let q = g.ncols();
                let base = offsets[k];
                for i in 0..rows {
                    for j in 0..cols {
                        let mut acc = c[i] * dc[j];
                        for col in 0..q {
                            acc += g[[i, col]] * dg[[j, col]];
                        }
                        grad[base + i * cols + j] += acc;
                    }
                }
                dc = w.dot(&dc);
                dg = w.dot(&dg);
            }
            Layer::Tanh => {
                let d = gs.deriv[k].as_ref().expect("derivative record");
                let (nu, q) = g.dim();
                let mut dc_out = Array1::zeros(nu);
                let mut dg_out = Array2::zeros((nu, q));
                let mut adj = Vec::with_capacity(nu);
                for i in 0..nu {
                    let mut dm = dc[i] * c[i];
                    for j in 0..q {
                        dm += dg[[i, j]] * g[[i, j]];
                    }
                    let dextra = dg[[i, q + i]];
                    let dr = dextra * d.s[i];
                    let ds = dextra * d.r[i];
                    dc_out[i] = d.m[i] * dc[i] + ds * sgn(c[i]);
                    for j in 0..q {
                        dg_out[[i, j]] = d.m[i] * dg[[i, j]] + ds * sgn(g[[i, j]]);
                    }
                    let (dlo, dhi) = (0.5 * (dm - dr), 0.5 * (dm + dr));
                    let jac = &d.jac[i];
                    adj.push((
                        dlo * jac[0][0] + dhi * jac[1][0],
                        dlo * jac[0][1] + dhi * jac[1][1],
                    ));
                }
                hull[k] = Some(adj);
                dc = dc_out;
                dg = dg_out;
            }
        }
    }
    hull
}

pub(crate) fn hash_signs(values: impl Iterator<Item = f64>, h: &mut impl Hasher) {
    let mut word = 0u64;
    let mut n = 0;
    for v in values {
        word = (word << 2) | (sgn(v) + 1.0) as u64;
        n += 1;
        if n == 32 {
            h.write_u64(word);
            word = 0;
            n = 0;
        }
    }
    h.write_u64(word);
}

impl GradientSet {
    pub(crate) fn hash_branches(&self, h: &mut impl Hasher) {
        for z in self.outer.iter().chain(std::iter::once(&self.set)) {
            hash_signs(z.center().iter().copied(), h);
            hash_signs(z.generators().iter().copied(), h);
        }
    }

    pub(crate) fn check_fresh(&self, net: &Network) -> Result<()> {
        if self.revision != net.revision() {
            return Err(Error::ContractViolation(
                "gradient set was computed for different network parameters".into(),
            ));
        }
        Ok(())
    }
}

/// Upper bound of `hull(𝒢ᵀF)` and its adjoints with respect to `𝒢`'s center
/// and generators.
pub(crate) fn dot_upper_with_adjoint(gs: &Zonotope, f: &Zonotope) -> (f64, Array1<f64>, Array2<f64>) {
    let (cg, gg) = (gs.center(), gs.generators());
    let (cf, gf) = (f.center(), f.generators());
    let (n, qg) = gg.dim();
    let qf = gf.ncols();
    let mut dc = cf.to_owned();
    let mut dg = Array2::zeros((n, qg));
    // radius accumulated in generator order, matching `Zonotope::dot` + hull
    let mut r = 0.0;
    let cg_gf = cg.dot(&gf);
    for j in 0..qf {
        r += cg_gf[j].abs();
        let sj = sgn(cg_gf[j]);
        if sj != 0.0 {
            dc.scaled_add(sj, &gf.column(j));
        }
    }
    let gg_cf = gg.t().dot(&cf);
    for i in 0..qg {
        r += gg_cf[i].abs();
        let si = sgn(gg_cf[i]);
        if si != 0.0 {
            dg.column_mut(i).scaled_add(si, &cf);
        }
    }
    let cross = gg.t().dot(&gf);
    for i in 0..qg {
        let mut col = dg.column_mut(i);
        for j in 0..qf {
            let v = cross[[i, j]];
            r += v.abs();
            let sij = sgn(v);
            if sij != 0.0 {
                col.scaled_add(sij, &gf.column(j));
            }
        }
    }
    let upper = cg.dot(&cf) + r;
    (upper, dc, dg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{nn_init, tanh_prime};
    use crate::setcore::Interval;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box(n: usize) -> Zonotope {
        Zonotope::from_interval(&IntervalVector::cube(n, -1.0, 1.0).unwrap())
    }

    #[test]
    fn linear_network_is_exact_and_appends_nothing() {
        let net = Network::from_layers(vec![Layer::Linear {
            w: array![[2.0, -1.0]],
            b: array![0.5],
        }])
        .unwrap();
        let (y, trace) = nn_forward_set(&net, &unit_box(2)).unwrap();
        assert_eq!(y.center(), array![0.5]);
        assert_eq!(y.generators(), array![[2.0, -1.0]]);
        let gs = nn_gradset(&net, &trace).unwrap();
        assert_eq!(gs.set.center(), array![2.0, -1.0]);
        assert_eq!(gs.set.num_generators(), 0);
    }

    #[test]
    fn generator_bookkeeping() {
        let net = nn_init(&[3, 5, 5, 5, 5, 1], 2).unwrap();
        let x = unit_box(3);
        let (y, trace) = nn_forward_set(&net, &x).unwrap();
        assert_eq!(trace.q0, 3);
        assert_eq!(y.num_generators(), 3 + 10);
        assert_eq!(trace.sets[0], x);
        // a point input keeps only the appended columns
        let (yp, _) = nn_forward_set(&net, &Zonotope::point(array![0.1, 0.2, 0.3])).unwrap();
        assert_eq!(yp.num_generators(), 10);
        assert!(yp.bounds_1d().contains(net.forward(&[0.1, 0.2, 0.3]).unwrap()));
    }

    #[test]
    fn stale_trace_is_a_contract_violation() {
        let mut net = nn_init(&[2, 4, 4, 1], 0).unwrap();
        let (_, trace) = nn_forward_set(&net, &unit_box(2)).unwrap();
        let theta = net.params();
        net.set_params(&theta).unwrap();
        assert!(matches!(nn_gradset(&net, &trace), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn scalar_tanh_gradient_closed_form() {
        let w = 1.7;
        let net = Network::from_layers(vec![
            Layer::Linear { w: array![[w]], b: array![0.0] },
            Layer::Tanh,
            Layer::Linear { w: array![[1.0]], b: array![0.0] },
        ])
        .unwrap();
        let x = Zonotope::from_interval(&IntervalVector::cube(1, 0.0, 1.0).unwrap());
        let (_, trace) = nn_forward_set(&net, &x).unwrap();
        let hull = nn_gradset(&net, &trace).unwrap().set.interval_hull()[0];
        let exact = Interval::new(w * tanh_prime(w), w * tanh_prime(0.0)).unwrap();
        assert!(hull.lo() <= exact.lo() + 1e-15 && exact.hi() <= hull.hi() + 1e-15);
        assert!((hull.hi() - w).abs() < 1e-12);
    }

    #[test]
    fn sampled_points_inside_forward_and_gradient_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for widths in [vec![2, 8, 8, 1], vec![3, 5, 5, 5, 5, 1]] {
            for seed in 0..10 {
                let net = nn_init(&widths, seed).unwrap();
                let n = widths[0];
                let c = Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0));
                let g = Array2::from_shape_fn((n, n + 1), |_| rng.gen_range(-0.5..0.5));
                let x = Zonotope::new(c, g).unwrap();
                let (y, trace) = nn_forward_set(&net, &x).unwrap();
                let yh = y.bounds_1d();
                let gh = nn_gradset(&net, &trace).unwrap().set.interval_hull();
                for _ in 0..100 {
                    let beta: Vec<f64> = (0..x.num_generators()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let p = x.eval_factors(&beta).to_vec();
                    let v = net.forward(&p).unwrap();
                    assert!(yh.lo() - 1e-12 <= v && v <= yh.hi() + 1e-12);
                    for (iv, d) in gh.iter().zip(net.input_gradient(&p).unwrap()) {
                        assert!(iv.lo() - 1e-12 <= d && d <= iv.hi() + 1e-12);
                    }
                }
            }
        }
    }
}
