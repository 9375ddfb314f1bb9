//! Box covers of the zero-level set `{x ∈ X | B(x) = 0}` by branch and bound
//! with preimage pruning.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::neural::{nn_forward_set, Network};
use crate::setcore::{abs_sum, FactorConstraint, Interval, IntervalVector, Zonotope};

pub const DEFAULT_MAX_BOXES: usize = 1 << 16;

/// Relative widening of the preimage band.
pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitDims {
    /// Every dimension of the state space.
    All,
    Count(usize),
}

impl SplitDims {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            SplitDims::All => n,
            SplitDims::Count(k) => k,
        }
    }
}

/// `(ι, s, s_dim)`: iterations, parts per split dimension and how many of the
/// widest dimensions are split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroParams {
    pub iterations: usize,
    pub splits: usize,
    pub split_dims: SplitDims,
    pub max_boxes: usize,
}

impl ZeroParams {
    pub fn new(iterations: usize, splits: usize, split_dims: SplitDims) -> Result<Self> {
        let p = Self {
            iterations,
            splits,
            split_dims,
            max_boxes: DEFAULT_MAX_BOXES,
        };
        p.validate(None)?;
        Ok(p)
    }

    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        if self.iterations == 0 || self.splits == 0 {
            return Err(invalid(format!("zero-set parameters {self}: ι and s must be ≥ 1")));
        }
        if let SplitDims::Count(k) = self.split_dims {
            if k == 0 {
                return Err(invalid(format!("zero-set parameters {self}: s_dim must be ≥ 1")));
            }
            if let Some(n) = dim {
                if k > n {
                    return Err(invalid(format!(
                        "zero-set parameters {self}: s_dim exceeds the state dimension {n}"
                    )));
                }
            }
        }
        if self.max_boxes == 0 {
            return Err(invalid("box cap must be positive"));
        }
        Ok(())
    }

    /// Same splits with `extra` more iterations.
    pub fn refined(&self, extra: usize) -> Self {
        Self {
            iterations: self.iterations + extra,
            ..*self
        }
    }
}

impl fmt::Display for ZeroParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.split_dims {
            SplitDims::All => write!(f, "{}-{}-n", self.iterations, self.splits),
            SplitDims::Count(k) => write!(f, "{}-{}-{k}", self.iterations, self.splits),
        }
    }
}

/// Parses `ι-s-s_dim` or `ι,s,s_dim`, where `s_dim` is a count or `n`.
impl FromStr for ZeroParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['-', ',']).map(str::trim).collect();
        let bad = || invalid(format!("zero-set parameters '{s}': expected ι-s-s_dim, e.g. 2-8-n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let iterations = parts[0].parse().map_err(|_| bad())?;
        let splits = parts[1].parse().map_err(|_| bad())?;
        let split_dims = if parts[2].eq_ignore_ascii_case("n") {
            SplitDims::All
        } else {
            SplitDims::Count(parts[2].parse().map_err(|_| bad())?)
        };
        Self::new(iterations, splits, split_dims)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroCover {
    /// Axis-aligned boxes, sorted lexicographically by center.
    pub boxes: Vec<Zonotope>,
    pub iterations_used: usize,
    pub discarded_count: usize,
}

impl ZeroCover {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn hulls(&self) -> Vec<IntervalVector> {
        self.boxes.iter().map(Zonotope::interval_hull).collect()
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(|b| b.interval_hull().volume()).sum()
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        self.boxes.iter().any(|b| {
            b.interval_hull()
                .iter()
                .zip(x)
                .all(|(iv, &v)| iv.lo() - tol <= v && v <= iv.hi() + tol)
        })
    }
}

/// Necessary condition for `B(x) = 0` on `Xi` as a band on its factors:
/// `g·β ∈ [-c_y - r, -c_y + r]` with `g` the output's first `q₀` generator
/// entries and `r` the absolute sum of the remaining ones.
pub fn preimage_constrain(net: &Network, xi: &Zonotope) -> Result<FactorConstraint> {
    let (y, trace) = nn_forward_set(net, xi)?;
    let q0 = trace.q0;
    let row = y.generators().row(0).to_owned();
    let g = row.slice(ndarray::s![..q0]).to_vec();
    let r = abs_sum(row.slice(ndarray::s![q0..]));
    let cy = y.center()[0];
    // absorbs rounding in the forward pass, so a zero exact up to round-off
    // is never pruned
    let slack = ROUNDING_SLACK * (1.0 + cy.abs() + r + abs_sum(row.view()));
    Ok(FactorConstraint::new(g, -cy - r - slack, -cy + r + slack))
}

/// Tightens a box to the part where `B` may vanish, or `None` if it cannot.
///
/// The contracted factor box is mapped back through the box's center and
/// radii, which gives a box again.
fn prune_box(net: &Network, bx: &IntervalVector) -> Result<Option<IntervalVector>> {
    let z = Zonotope::from_interval(bx);
    let cons = preimage_constrain(net, &z)?;
    if !cons.is_feasible() {
        return Ok(None);
    }
    let beta = cons.contract()?;
    let mut out = bx.clone();
    // factor j of a box zonotope belongs to the j-th dimension of positive width
    let active = (0..bx.dim()).filter(|&i| bx[i].rad() > 0.0);
    for (j, i) in active.enumerate() {
        let (c, r) = (bx[i].mid(), bx[i].rad());
        let lo = (c + r * beta[j].lo()).max(bx[i].lo());
        let hi = (c + r * beta[j].hi()).min(bx[i].hi());
        out.set(i, Interval::ordered(lo.min(hi), hi.max(lo)));
    }
    Ok(Some(out))
}

/// Splits each of the `k` widest dimensions of positive width into `parts`.
fn split_widest(bx: &IntervalVector, k: usize, parts: usize) -> Vec<IntervalVector> {
    let dims: Vec<usize> = bx
        .widest_dims(k)
        .into_iter()
        .filter(|&d| bx[d].width() > 0.0)
        .collect();
    let mut out = vec![bx.clone()];
    for d in dims {
        out = out.iter().flat_map(|b| b.split_dim(d, parts)).collect();
    }
    out
}

/// Covers the zero-level set of `net` inside `x`.
pub fn enclose_zero_set(net: &Network, x: &IntervalVector, p: &ZeroParams) -> Result<ZeroCover> {
    p.validate(Some(x.dim()))?;
    if x.dim() != net.input_dim() {
        return Err(invalid(format!(
            "state space of dimension {} for a network on R^{}",
            x.dim(),
            net.input_dim()
        )));
    }
    let k = p.split_dims.resolve(x.dim());
    let mut work = vec![x.clone()];
    let mut discarded = 0;
    for _ in 0..p.iterations {
        let mut next = Vec::new();
        for bx in &work {
            match prune_box(net, bx)? {
                None => discarded += 1,
                Some(tight) => {
                    next.extend(split_widest(&tight, k, p.splits));
                    if next.len() > p.max_boxes {
                        return Err(Error::ResourceLimit {
                            cap: p.max_boxes,
                            iterations: p.iterations,
                            splits: p.splits,
                            split_dims: k,
                        });
                    }
                }
            }
        }
        work = next;
    }
    let mut boxes = Vec::with_capacity(work.len());
    for bx in &work {
        match prune_box(net, bx)? {
            None => discarded += 1,
            Some(tight) => boxes.push(tight),
        }
    }
    boxes.sort_by(|a, b| {
        a.center()
            .iter()
            .zip(b.center())
            .map(|(u, v)| u.total_cmp(&v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(ZeroCover {
        boxes: boxes.iter().map(Zonotope::from_interval).collect(),
        iterations_used: p.iterations,
        discarded_count: discarded,
    })
}
