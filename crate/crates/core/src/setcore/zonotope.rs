//! Zonotopes `⟨c, G⟩ = { c + Gβ | β ∈ [-1, 1]^q }`.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::interval::{Interval, IntervalVector};
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZonotopeRepr", into = "ZonotopeRepr")]
pub struct Zonotope {
    center: Array1<f64>,
    generators: Array2<f64>,
}

impl Zonotope {
    /// Builds a zonotope, dropping all-zero generator columns.
    pub fn new(center: Array1<f64>, generators: Array2<f64>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(invalid(format!(
                "generator matrix has {} rows, center has {} entries",
                generators.nrows(),
                center.len()
            )));
        }
        if center.iter().chain(generators.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("zonotope entries must be finite"));
        }
        let keep: Vec<usize> = (0..generators.ncols())
            .filter(|&j| generators.column(j).iter().any(|&v| v != 0.0))
            .collect();
        let generators = if keep.len() == generators.ncols() {
            generators
        } else {
            generators.select(Axis(1), &keep)
        };
        Ok(Self { center, generators })
    }

    /// Builds without validation or column pruning. Set propagation relies on
    /// columns keeping their position even when they become zero.
    pub(crate) fn from_raw(center: Array1<f64>, generators: Array2<f64>) -> Self {
        debug_assert_eq!(center.len(), generators.nrows());
        Self { center, generators }
    }

    pub fn point(center: Array1<f64>) -> Self {
        let n = center.len();
        Self {
            center,
            generators: Array2::zeros((n, 0)),
        }
    }

    /// Box zonotope: midpoints as center, radii on the diagonal. Zero-width
    /// dimensions contribute no generator.
    pub fn from_interval(iv: &IntervalVector) -> Self {
        let n = iv.dim();
        let center = Array1::from(iv.center());
        let active: Vec<usize> = (0..n).filter(|&i| iv[i].rad() > 0.0).collect();
        let mut generators = Array2::zeros((n, active.len()));
        for (j, &i) in active.iter().enumerate() {
            generators[[i, j]] = iv[i].rad();
        }
        Self { center, generators }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> ArrayView1<'_, f64> {
        self.center.view()
    }

    pub fn generators(&self) -> ArrayView2<'_, f64> {
        self.generators.view()
    }

    /// `W·Z + b`, exact.
    pub fn affine(&self, w: &Array2<f64>, b: &Array1<f64>) -> Result<Zonotope> {
        if w.ncols() != self.dim() {
            return Err(invalid(format!(
                "affine map expects {} columns, zonotope has dimension {}",
                w.ncols(),
                self.dim()
            )));
        }
        if b.len() != w.nrows() {
            return Err(invalid(format!(
                "offset has {} entries, map has {} rows",
                b.len(),
                w.nrows()
            )));
        }
        Ok(Self::from_raw(w.dot(&self.center) + b, w.dot(&self.generators)))
    }

    /// Linear map without offset.
    pub fn linear(&self, w: &Array2<f64>) -> Result<Zonotope> {
        self.affine(w, &Array1::zeros(w.nrows()))
    }

    /// Minkowski sum `Z₁ ⊕ Z₂`, exact.
    pub fn minkowski(&self, other: &Zonotope) -> Result<Zonotope> {
        self.check_same_dim(other, "Minkowski sum")?;
        let generators = concatenate(Axis(1), &[self.generators.view(), other.generators.view()])
            .expect("row counts agree");
        Ok(Self::from_raw(&self.center + &other.center, generators))
    }

    /// Enclosure of the inner product `{x₁ᵀx₂ | xᵢ ∈ Zᵢ}` as a 1-D zonotope.
    ///
    /// Generator layout: `[c₁ᵀG₂, G₁ᵀc₂, G₁(·,1)ᵀG₂, …, G₁(·,q₁)ᵀG₂]`.
    pub fn dot(&self, other: &Zonotope) -> Result<Zonotope> {
        self.check_same_dim(other, "inner product")?;
        let (q1, q2) = (self.num_generators(), other.num_generators());
        let c = self.center.dot(&other.center);
        let mut g = Vec::with_capacity(q2 + q1 + q1 * q2);
        g.extend(self.center.dot(&other.generators).iter());
        g.extend(self.generators.t().dot(&other.center).iter());
        let cross = self.generators.t().dot(&other.generators);
        g.extend(cross.iter());
        let m = g.len();
        Ok(Self::from_raw(
            Array1::from(vec![c]),
            Array2::from_shape_vec((1, m), g).expect("shape"),
        ))
    }

    /// Tight box enclosure `cᵢ ± Σⱼ|Gᵢⱼ|`.
    pub fn interval_hull(&self) -> IntervalVector {
        self.center
            .iter()
            .zip(self.generators.rows())
            .map(|(&c, row)| {
                let r = abs_sum(row);
                Interval::ordered(c - r, c + r)
            })
            .collect()
    }

    /// Interval hull of a one-dimensional zonotope.
    pub fn bounds_1d(&self) -> Interval {
        debug_assert_eq!(self.dim(), 1);
        self.interval_hull()[0]
    }

    /// Member point for a factor vector `β`.
    pub fn eval_factors(&self, beta: &[f64]) -> Array1<f64> {
        assert_eq!(beta.len(), self.num_generators(), "factor count mismatch");
        &self.center + &self.generators.dot(&ArrayView1::from(beta))
    }

    /// Returns the box if every generator is axis-aligned and no two share a row.
    pub fn as_box(&self) -> Option<IntervalVector> {
        let mut used = vec![false; self.dim()];
        for col in self.generators.columns() {
            let mut nz = col.iter().enumerate().filter(|(_, v)| **v != 0.0);
            match (nz.next(), nz.next()) {
                (Some((i, _)), None) if !used[i] => used[i] = true,
                (None, _) => {}
                _ => return None,
            }
        }
        Some(self.interval_hull())
    }

    /// Splits a box zonotope along state dimension `dim` into `parts` equal
    /// slabs of the generator factor aligned with that dimension.
    pub fn split(&self, dim: usize, parts: usize) -> Result<Vec<Zonotope>> {
        if dim >= self.dim() {
            return Err(invalid(format!(
                "split dimension {dim} out of range for dimension {}",
                self.dim()
            )));
        }
        if parts == 0 {
            return Err(invalid("split needs at least one part"));
        }
        if self.as_box().is_none() {
            return Err(invalid("split is defined for axis-aligned box zonotopes only"));
        }
        let Some(j) = (0..self.num_generators()).find(|&j| self.generators[[dim, j]] != 0.0)
        else {
            // zero width along `dim`: nothing to cut
            return Ok(vec![self.clone(); 1]);
        };
        let col = self.generators.column(j).to_owned();
        let p = parts as f64;
        Ok((0..parts)
            .map(|k| {
                let offset = -1.0 + (2 * k + 1) as f64 / p;
                let mut g = self.generators.clone();
                g.column_mut(j).mapv_inplace(|v| v / p);
                Self::from_raw(&self.center + &(&col * offset), g)
            })
            .collect())
    }

    /// Point membership. Exact for boxes and planar zonotopes; in higher
    /// dimensions a general zonotope falls back to its interval hull.
    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let inside_hull = self
            .interval_hull()
            .iter()
            .zip(x)
            .all(|(iv, &v)| iv.lo() - tol <= v && v <= iv.hi() + tol);
        if !inside_hull || self.as_box().is_some() || self.dim() != 2 {
            return inside_hull;
        }
        // planar zonotope: one facet pair per generator direction
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        self.generators.columns().into_iter().all(|g| {
            let normal = [-g[1], g[0]];
            let support: f64 = self
                .generators
                .columns()
                .into_iter()
                .map(|h| (normal[0] * h[0] + normal[1] * h[1]).abs())
                .sum();
            (normal[0] * d[0] + normal[1] * d[1]).abs() <= support + tol
        })
    }

    /// Drops the trailing generator columns beyond `q`.
    fn check_same_dim(&self, other: &Zonotope, what: &str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(invalid(format!(
                "{what} of zonotopes with dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

/// `Σ|vⱼ|` accumulated in index order.
#[inline]
pub(crate) fn abs_sum(v: ArrayView1<'_, f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc + x.abs())
}

#[derive(Serialize, Deserialize)]
struct ZonotopeRepr {
    center: Vec<f64>,
    #[serde(default)]
    generators: Vec<Vec<f64>>,
}

impl TryFrom<ZonotopeRepr> for Zonotope {
    type Error = crate::error::Error;
    fn try_from(r: ZonotopeRepr) -> Result<Self> {
        let n = r.center.len();
        let q = r.generators.first().map_or(0, Vec::len);
        if !r.generators.is_empty() && r.generators.len() != n {
            return Err(invalid(format!(
                "generator matrix has {} rows, center has {n} entries",
                r.generators.len()
            )));
        }
        if r.generators.iter().any(|row| row.len() != q) {
            return Err(invalid("ragged generator matrix"));
        }
        let flat: Vec<f64> = r.generators.into_iter().flatten().collect();
        let g = if q == 0 {
            Array2::zeros((n, 0))
        } else {
            Array2::from_shape_vec((n, q), flat).map_err(|e| invalid(e.to_string()))?
        };
        Zonotope::new(Array1::from(r.center), g)
    }
}

impl From<Zonotope> for ZonotopeRepr {
    fn from(z: Zonotope) -> Self {
        ZonotopeRepr {
            center: z.center.to_vec(),
            generators: z.generators.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(c: Array1<f64>, g: Array2<f64>) -> Zonotope {
        Zonotope::new(c, g).unwrap()
    }

    fn random_zono(rng: &mut ChaCha8Rng, n: usize, q: usize) -> Zonotope {
        let c = Array1::from_shape_fn(n, |_| rng.gen_range(-2.0..2.0));
        let g = Array2::from_shape_fn((n, q), |_| rng.gen_range(-1.0..1.0));
        z(c, g)
    }

    fn random_factors(rng: &mut ChaCha8Rng, q: usize) -> Vec<f64> {
        (0..q).map(|_| rng.gen_range(-1.0..=1.0)).collect()
    }

    #[test]
    fn affine_identity_and_direct_case() {
        let zz = z(array![1.0, 2.0], array![[1.0, 0.0], [0.0, 1.0]]);
        let id = zz.affine(&Array2::eye(2), &array![0.0, 0.0]).unwrap();
        assert_eq!(id, zz);

        let zz = z(array![1.0, 1.0], array![[1.0], [1.0]]);
        let out = zz
            .affine(&array![[2.0, 0.0], [0.0, 0.0]], &array![0.0, 1.0])
            .unwrap();
        assert_eq!(out.center(), array![2.0, 1.0]);
        assert_eq!(out.generators(), array![[2.0], [0.0]]);
    }

    #[test]
    fn affine_rejects_mismatch() {
        let zz = z(array![1.0, 2.0], Array2::eye(2));
        assert!(zz.affine(&Array2::eye(3), &array![0.0, 0.0, 0.0]).is_err());
        assert!(zz.affine(&Array2::eye(2), &array![0.0]).is_err());
    }

    #[test]
    fn affine_reproduces_mapped_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zz = random_zono(&mut rng, 3, 4);
        let w = Array2::from_shape_fn((2, 3), |_| rng.gen_range(-3.0..3.0));
        let b = array![0.5, -1.5];
        let out = zz.affine(&w, &b).unwrap();
        for _ in 0..1000 {
            let beta = random_factors(&mut rng, 4);
            let direct = w.dot(&zz.eval_factors(&beta)) + &b;
            let mapped = out.eval_factors(&beta);
            for (a, e) in mapped.iter().zip(direct.iter()) {
                assert!((a - e).abs() <= 1e-12 * (1.0 + e.abs()));
            }
        }
    }

    #[test]
    fn minkowski_identity_and_hull() {
        let zz = z(array![0.0], array![[1.0]]);
        let p = Zonotope::point(array![0.0]);
        assert_eq!(zz.minkowski(&p).unwrap(), zz);
        let sum = zz.minkowski(&z(array![1.0], array![[2.0]])).unwrap();
        assert_eq!(sum.center(), array![1.0]);
        assert_eq!(sum.generators(), array![[1.0, 2.0]]);
        assert_eq!(sum.bounds_1d(), Interval::new(-2.0, 4.0).unwrap());
    }

    #[test]
    fn minkowski_contains_member_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_zono(&mut rng, 2, 3);
        let b = random_zono(&mut rng, 2, 2);
        let sum = a.minkowski(&b).unwrap();
        for _ in 0..1000 {
            let (ba, bb) = (random_factors(&mut rng, 3), random_factors(&mut rng, 2));
            let x = a.eval_factors(&ba) + b.eval_factors(&bb);
            let joint: Vec<f64> = ba.iter().chain(&bb).copied().collect();
            let y = sum.eval_factors(&joint);
            assert!((&x - &y).iter().all(|d| d.abs() < 1e-12));
        }
    }

    #[test]
    fn inner_product_hand_case() {
        let a = z(array![1.0, 0.0], array![[1.0, 0.0], [0.0, 1.0]]);
        let b = z(array![0.0, 1.0], array![[0.5], [0.0]]);
        let p = a.dot(&b).unwrap();
        assert_eq!(p.center(), array![0.0]);
        assert_eq!(p.generators(), array![[0.5, 0.0, 1.0, 0.5, 0.0]]);
        assert_eq!(p.bounds_1d(), Interval::new(-2.0, 2.0).unwrap());

        // dense factor grid stays inside the hull
        let hull = p.bounds_1d();
        let steps = 20;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let f = |t: usize| -1.0 + 2.0 * t as f64 / steps as f64;
                    let x1 = a.eval_factors(&[f(i), f(j)]);
                    let x2 = b.eval_factors(&[f(k)]);
                    assert!(hull.contains(x1.dot(&x2)));
                }
            }
        }
    }

    #[test]
    fn inner_product_of_points() {
        let a = Zonotope::point(array![1.0, 2.0]);
        let b = Zonotope::point(array![3.0, -1.0]);
        let p = a.dot(&b).unwrap();
        assert_eq!(p.center(), array![1.0]);
        assert_eq!(p.num_generators(), 0);
    }

    #[test]
    fn inner_product_contains_sampled_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10 {
            let n = 1 + trial % 4;
            let a = random_zono(&mut rng, n, 1 + trial % 3);
            let b = random_zono(&mut rng, n, 2);
            let hull = a.dot(&b).unwrap().bounds_1d();
            for _ in 0..1000 {
                let x1 = a.eval_factors(&random_factors(&mut rng, a.num_generators()));
                let x2 = b.eval_factors(&random_factors(&mut rng, 2));
                let v = x1.dot(&x2);
                assert!(hull.lo() - 1e-12 <= v && v <= hull.hi() + 1e-12);
            }
        }
    }

    #[test]
    fn hull_is_attained_by_sign_patterns() {
        let zz = z(array![1.0], array![[2.0, -1.0]]);
        assert_eq!(zz.interval_hull()[0], Interval::new(-2.0, 4.0).unwrap());
        let p = Zonotope::point(array![3.0]);
        assert_eq!(p.interval_hull()[0], Interval::point(3.0));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zz = random_zono(&mut rng, 3, 5);
        let hull = zz.interval_hull();
        for i in 0..3 {
            let signs: Vec<f64> = zz.generators().row(i).iter().map(|v| v.signum()).collect();
            let neg: Vec<f64> = signs.iter().map(|s| -s).collect();
            assert!((zz.eval_factors(&signs)[i] - hull[i].hi()).abs() < 1e-12);
            assert!((zz.eval_factors(&neg)[i] - hull[i].lo()).abs() < 1e-12);
        }
        for _ in 0..10_000 {
            let x = zz.eval_factors(&random_factors(&mut rng, 5));
            assert!(hull.contains_point(&x.to_vec()));
        }
    }

    #[test]
    fn box_round_trip() {
        let b = IntervalVector::cube(2, 0.0, 4.0).unwrap();
        let zz = Zonotope::from_interval(&b);
        assert_eq!(zz.center(), array![2.0, 2.0]);
        assert_eq!(zz.generators(), array![[2.0, 0.0], [0.0, 2.0]]);
        assert_eq!(zz.interval_hull(), b);

        let d = IntervalVector::from_bounds(&[1.0, 0.0], &[1.0, 2.0]).unwrap();
        let zd = Zonotope::from_interval(&d);
        assert_eq!(zd.num_generators(), 1);
        assert_eq!(zd.interval_hull(), d);
    }

    #[test]
    fn zero_columns_dropped_on_construction() {
        let zz = z(array![0.0, 0.0], array![[1.0, 0.0, 0.0], [0.0, 0.0, 2.0]]);
        assert_eq!(zz.num_generators(), 2);
    }

    #[test]
    fn split_bisects_boxes() {
        let b = Zonotope::from_interval(&IntervalVector::from_bounds(&[0.0], &[4.0]).unwrap());
        let parts = b.split(0, 2).unwrap();
        assert_eq!(parts[0].interval_hull()[0], Interval::new(0.0, 2.0).unwrap());
        assert_eq!(parts[1].interval_hull()[0], Interval::new(2.0, 4.0).unwrap());
        assert_eq!(b.split(0, 1).unwrap(), vec![b.clone()]);
        assert!(b.split(1, 2).is_err());
        let skew = z(array![0.0, 0.0], array![[1.0], [1.0]]);
        assert!(skew.split(0, 2).is_err());
    }

    #[test]
    fn split_children_cover_parent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = Zonotope::from_interval(
            &IntervalVector::from_bounds(&[-1.0, 0.0, 2.0], &[1.0, 3.0, 2.5]).unwrap(),
        );
        let kids = b.split(1, 3).unwrap();
        let hulls: Vec<_> = kids.iter().map(|k| k.interval_hull()).collect();
        for _ in 0..10_000 {
            let x = b.eval_factors(&random_factors(&mut rng, 3)).to_vec();
            assert!(hulls.iter().any(|h| h.contains_point(&x)));
        }
    }

    #[test]
    fn planar_membership_respects_facets() {
        let zz = z(array![0.0, 0.0], array![[1.0, 1.0], [0.0, 1.0]]);
        assert!(zz.contains_point(&[0.0, 0.0], 0.0));
        assert!(zz.contains_point(&[2.0, 1.0], 1e-12));
        // inside the hull [-2,2]x[-1,1] but outside the parallelogram
        assert!(!zz.contains_point(&[-1.9, 0.9], 0.0));
    }

    #[test]
    fn json_schema_round_trip() {
        let zz = z(array![-2.0, 0.0], array![[0.0, 0.75], [0.25, -0.375]]);
        let s = serde_json::to_string(&zz).unwrap();
        assert_eq!(s, r#"{"center":[-2.0,0.0],"generators":[[0.0,0.75],[0.25,-0.375]]}"#);
        let back: Zonotope = serde_json::from_str(&s).unwrap();
        assert_eq!(back, zz);
        let p: Zonotope = serde_json::from_str(r#"{"center":[1.0]}"#).unwrap();
        assert_eq!(p.num_generators(), 0);
    }
}
