//! Closed real intervals and axis-aligned boxes.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(invalid(format!("interval bound is NaN: [{lo}, {hi}]")));
        }
        if lo > hi {
            return Err(invalid(format!("interval lower bound exceeds upper: [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Builds from bounds already known to be ordered.
    pub(crate) fn ordered(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "[{lo}, {hi}]");
        Self { lo, hi }
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        let r = r.abs();
        Self { lo: -r, hi: r }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn rad(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::ordered(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn scale(&self, k: f64) -> Interval {
        if k >= 0.0 {
            Interval::ordered(k * self.lo, k * self.hi)
        } else {
            Interval::ordered(k * self.hi, k * self.lo)
        }
    }

    pub fn recip(&self) -> Result<Interval> {
        if self.contains_zero() {
            return Err(Error::NumericDomain(format!(
                "division by an interval containing zero: {self}"
            )));
        }
        Ok(Interval::ordered(1.0 / self.hi, 1.0 / self.lo))
    }

    pub fn div(&self, rhs: &Interval) -> Result<Interval> {
        Ok(*self * rhs.recip()?)
    }

    /// Integer power; even powers fold the negative half onto the positive one.
    pub fn powi(&self, p: u32) -> Interval {
        if p == 0 {
            return Interval::point(1.0);
        }
        let e = p as i32;
        let (a, b) = (self.lo.powi(e), self.hi.powi(e));
        if p % 2 == 1 {
            Interval::ordered(a, b)
        } else if self.lo >= 0.0 {
            Interval::ordered(a, b)
        } else if self.hi <= 0.0 {
            Interval::ordered(b, a)
        } else {
            Interval::ordered(0.0, a.max(b))
        }
    }

    pub fn exp(&self) -> Interval {
        Interval::ordered(self.lo.exp(), self.hi.exp())
    }

    pub fn sin(&self) -> Interval {
        periodic_range(self, f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    pub fn cos(&self) -> Interval {
        periodic_range(self, f64::cos, 0.0, PI)
    }
}

/// Range of a 2π-periodic unit-amplitude function whose maxima sit at
/// `max_at + 2kπ` and minima at `min_at + 2kπ`.
fn periodic_range(iv: &Interval, f: fn(f64) -> f64, max_at: f64, min_at: f64) -> Interval {
    if iv.width() >= TAU {
        return Interval::ordered(-1.0, 1.0);
    }
    let (a, b) = (f(iv.lo), f(iv.hi));
    let mut lo = a.min(b);
    let mut hi = a.max(b);
    if hits_lattice(iv, max_at) {
        hi = 1.0;
    }
    if hits_lattice(iv, min_at) {
        lo = -1.0;
    }
    Interval::ordered(lo, hi)
}

fn hits_lattice(iv: &Interval, offset: f64) -> bool {
    let k = ((iv.lo - offset) / TAU).ceil();
    offset + k * TAU <= iv.hi
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(iv: Interval) -> Self {
        [iv.lo, iv.hi]
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::ordered(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::ordered(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::ordered(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::ordered(lo, hi)
    }
}

/// An axis-aligned box `[l, u] ⊂ Rⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalVector(Vec<Interval>);

impl IntervalVector {
    pub fn new(dims: Vec<Interval>) -> Self {
        Self(dims)
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(invalid(format!(
                "bound vectors differ in length: {} vs {}",
                lo.len(),
                hi.len()
            )));
        }
        lo.iter()
            .zip(hi)
            .map(|(&l, &h)| Interval::new(l, h))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    /// The cube `[lo, hi]ⁿ`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Ok(Self(vec![Interval::new(lo, hi)?; n]))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Interval] {
        &self.0
    }

    pub fn set(&mut self, i: usize, iv: Interval) {
        self.0[i] = iv;
    }

    pub fn lower(&self) -> Vec<f64> {
        self.0.iter().map(Interval::lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.0.iter().map(Interval::hi).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.0.iter().map(Interval::mid).collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.0.iter().map(Interval::rad).collect()
    }

    pub fn volume(&self) -> f64 {
        self.0.iter().map(Interval::width).product()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.0.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    pub fn contains_box(&self, other: &IntervalVector) -> bool {
        other.dim() == self.dim()
            && self
                .0
                .iter()
                .zip(other.iter())
                .all(|(a, b)| a.contains_interval(b))
    }

    /// Componentwise hull of two boxes of equal dimension.
    pub fn hull(&self, other: &IntervalVector) -> IntervalVector {
        IntervalVector(self.0.iter().zip(other.iter()).map(|(a, b)| a.hull(b)).collect())
    }

    pub fn max_radius(&self) -> f64 {
        self.0.iter().map(Interval::rad).fold(0.0, f64::max)
    }

    /// Indices of the `k` widest dimensions, widest first; ties go to the lower index.
    pub fn widest_dims(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| {
            self.0[b]
                .width()
                .total_cmp(&self.0[a].width())
                .then(a.cmp(&b))
        });
        idx.truncate(k.min(self.dim()));
        idx
    }

    /// Cuts dimension `dim` into `parts` equal pieces.
    pub fn split_dim(&self, dim: usize, parts: usize) -> Vec<IntervalVector> {
        let iv = self.0[dim];
        (0..parts)
            .map(|k| {
                let a = iv.lo + iv.width() * k as f64 / parts as f64;
                let b = if k + 1 == parts {
                    iv.hi
                } else {
                    iv.lo + iv.width() * (k + 1) as f64 / parts as f64
                };
                let mut child = self.clone();
                child.0[dim] = Interval::ordered(a, b);
                child
            })
            .collect()
    }
}

impl Index<usize> for IntervalVector {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}

impl FromIterator<Interval> for IntervalVector {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn rejects_reversed_bounds() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn product_of_symmetric_intervals() {
        assert_eq!(iv(-1.0, 1.0) * iv(-1.0, 1.0), iv(-1.0, 1.0));
        assert_eq!(iv(1.0, 2.0) * iv(-3.0, 1.0), iv(-6.0, 2.0));
    }

    #[test]
    fn sine_over_half_period() {
        let r = iv(0.0, PI).sin();
        assert_eq!(r.hi(), 1.0);
        assert!(r.lo().abs() < 1e-15);
        assert_eq!(iv(0.0, 7.0).sin(), iv(-1.0, 1.0));
        let r = iv(-0.3, 0.2).cos();
        assert_eq!(r.hi(), 1.0);
        assert!((r.lo() - 0.3f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn even_powers_straddling_zero() {
        assert_eq!(iv(-2.0, 1.0).powi(2), iv(0.0, 4.0));
        assert_eq!(iv(-2.0, -1.0).powi(2), iv(1.0, 4.0));
        assert_eq!(iv(-2.0, 1.0).powi(3), iv(-8.0, 1.0));
        assert_eq!(iv(-2.0, 1.0).powi(0), Interval::point(1.0));
    }

    #[test]
    fn division_by_zero_interval_fails() {
        assert!(matches!(
            iv(1.0, 2.0).div(&iv(-1.0, 1.0)),
            Err(Error::NumericDomain(_))
        ));
        assert_eq!(iv(1.0, 2.0).div(&iv(2.0, 4.0)).unwrap(), iv(0.25, 1.0));
    }

    #[test]
    fn widest_dims_break_ties_low() {
        let b = IntervalVector::from_bounds(&[0.0, 0.0, 0.0], &[1.0, 2.0, 2.0]).unwrap();
        assert_eq!(b.widest_dims(2), vec![1, 2]);
        assert_eq!(b.widest_dims(5), vec![1, 2, 0]);
    }

    #[test]
    fn split_dim_partitions_exactly() {
        let b = IntervalVector::from_bounds(&[0.0], &[4.0]).unwrap();
        let parts = b.split_dim(0, 2);
        assert_eq!(parts[0][0], iv(0.0, 2.0));
        assert_eq!(parts[1][0], iv(2.0, 4.0));
    }

    #[test]
    fn serde_as_pairs() {
        let b = IntervalVector::from_bounds(&[0.0, -1.0], &[1.0, 1.0]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, "[[0.0,1.0],[-1.0,1.0]]");
        let back: IntervalVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<Interval>("[2.0, 1.0]").is_err());
    }
}
