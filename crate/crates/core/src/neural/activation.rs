//! tanh enclosures: a secant line with a constant remainder for the image,
//! and the exact range of the derivative.

use crate::setcore::Interval;

/// `tanh(x) ∈ λx + μ ± δ` on a pre-activation interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActEnclosure {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
}

/// Partial derivatives of `(λ, μ, δ)` with respect to the interval ends.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct EncloseJacobian {
    pub dl: [f64; 3],
    pub du: [f64; 3],
    /// Which candidates attained the maximum and minimum.
    pub branch: (u8, u8),
}

/// Below this relative width the secant is replaced by the midpoint tangent.
const DEGENERATE_WIDTH: f64 = 1e-7;

#[inline]
fn d1(t: f64) -> f64 {
    1.0 - t * t
}

#[inline]
fn d2(t: f64) -> f64 {
    -2.0 * t * (1.0 - t * t)
}

pub fn tanh_prime(x: f64) -> f64 {
    d1(x.tanh())
}

pub fn act_enclose(pre: Interval) -> ActEnclosure {
    enclose_with_jacobian(pre.lo(), pre.hi()).0
}

struct Candidate {
    h: f64,
    dl: f64,
    du: f64,
}

pub(crate) fn enclose_with_jacobian(l: f64, u: f64) -> (ActEnclosure, EncloseJacobian) {
    let (tl, tu) = (l.tanh(), u.tanh());
    let w = u - l;
    let degenerate = w <= DEGENERATE_WIDTH * (1.0 + l.abs().max(u.abs()));
    let (lambda, lam_l, lam_u, mid) = if degenerate {
        let m = 0.5 * (l + u);
        let tm = m.tanh();
        let half = 0.5 * d2(tm);
        (d1(tm), half, half, Some(m))
    } else {
        let lambda = (tu - tl) / w;
        (lambda, (lambda - d1(tl)) / w, (d1(tu) - lambda) / w, None)
    };

    let mut cands = Vec::with_capacity(5);
    cands.push(Candidate {
        h: tl - lambda * l,
        dl: d1(tl) - lambda - l * lam_l,
        du: -l * lam_u,
    });
    cands.push(Candidate {
        h: tu - lambda * u,
        dl: -u * lam_l,
        du: d1(tu) - lambda - u * lam_u,
    });
    // interior stationary points of tanh(x) - λx, where tanh'(x) = λ
    let mut stationary = |x: f64| {
        cands.push(Candidate {
            h: x.tanh() - lambda * x,
            dl: -x * lam_l,
            du: -x * lam_u,
        })
    };
    if let Some(m) = mid {
        stationary(m);
    }
    if lambda > 0.0 && lambda <= 1.0 {
        let a = (1.0 - lambda).sqrt().atanh();
        for x in [-a, a] {
            if l < x && x < u {
                stationary(x);
            }
        }
    }

    let (mut ih, mut il) = (0, 0);
    for (k, c) in cands.iter().enumerate().skip(1) {
        if c.h > cands[ih].h {
            ih = k;
        }
        if c.h < cands[il].h {
            il = k;
        }
    }
    let (hi, lo) = (&cands[ih], &cands[il]);
    let enc = ActEnclosure {
        lambda,
        mu: 0.5 * (hi.h + lo.h),
        delta: 0.5 * (hi.h - lo.h),
    };
    let jac = EncloseJacobian {
        dl: [lam_l, 0.5 * (hi.dl + lo.dl), 0.5 * (hi.dl - lo.dl)],
        du: [lam_u, 0.5 * (hi.du + lo.du), 0.5 * (hi.du - lo.du)],
        branch: (ih as u8, il as u8),
    };
    (enc, jac)
}

/// Exact range of `tanh'` over the interval.
pub fn act_deriv_bounds(pre: Interval) -> Interval {
    let (lo, hi, _) = deriv_bounds_with_jacobian(pre.lo(), pre.hi());
    Interval::ordered(lo, hi)
}

/// `(min, max)` of `tanh'` on `[l, u]` and `[[∂min/∂l, ∂min/∂u], [∂max/∂l, ∂max/∂u]]`.
pub(crate) fn deriv_bounds_with_jacobian(l: f64, u: f64) -> (f64, f64, [[f64; 2]; 2]) {
    let (tl, tu) = (l.tanh(), u.tanh());
    let (hi, dhi) = if l > 0.0 {
        (d1(tl), [d2(tl), 0.0])
    } else if u < 0.0 {
        (d1(tu), [0.0, d2(tu)])
    } else {
        (1.0, [0.0, 0.0])
    };
    let (lo, dlo) = if u.abs() >= l.abs() {
        (d1(tu), [0.0, d2(tu)])
    } else {
        (d1(tl), [d2(tl), 0.0])
    };
    (lo, hi.max(lo), [dlo, dhi])
}
