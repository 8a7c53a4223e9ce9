//! Scalar building blocks of the nonsmooth models.
//!
//! Set-valued quantities are always closed real intervals, so [`Interval`]
//! is the only set type. The signed square and signed square root carry the
//! orifice law, and [`phi_a`] / [`phi_b`] solve the strictly increasing
//! piecewise-quadratic balances that appear when a segment of the velocity
//! to force map is intersected with an affine line.

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`. A singleton when `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::Domain(format!("interval bounds out of order: [{lo}, {hi}]")))
        }
    }

    pub fn singleton(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Convex hull of two points, in either order.
    pub fn hull(a: f64, b: f64) -> Self {
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Distance from `x` to the interval (zero inside).
    pub fn distance(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }
}

/// `sgn(x) x^2`.
#[inline]
pub fn s_signed(x: f64) -> f64 {
    x * x.abs()
}

/// `sgn(x) sqrt(|x|)`, the inverse of [`s_signed`].
#[inline]
pub fn r_signed(x: f64) -> f64 {
    x.abs().sqrt().copysign(x)
}

/// Series combination of two orifice coefficients, `u1^2 u2^2 / (u1^2 + u2^2)`.
#[inline]
pub fn psi(u1: f64, u2: f64) -> f64 {
    let (a, b) = (u1 * u1, u2 * u2);
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        a * b / (a + b)
    }
}

/// Projection of `x` onto `[lo, hi]`.
pub fn proj(lo: f64, hi: f64, x: f64) -> Result<f64> {
    if lo > hi {
        return Err(Error::Domain(format!("proj: lo = {lo} > hi = {hi}")));
    }
    Ok(clamp(lo, hi, x))
}

/// Unchecked projection for internal use where `lo <= hi` holds by construction.
#[inline]
pub(crate) fn clamp(lo: f64, hi: f64, x: f64) -> f64 {
    lo.max(hi.min(x))
}

/// Generalized set-valued signum: `b` for `x > 0`, `a` for `x < 0`, and the
/// closed hull of `{a, b}` at `x = 0`.
pub fn gsgn(a: f64, x: f64, b: f64) -> Interval {
    if x > 0.0 {
        Interval::singleton(b)
    } else if x < 0.0 {
        Interval::singleton(a)
    } else {
        Interval::hull(a, b)
    }
}

/// Violation of `y ∈ N_[lo, hi](x)`, the normal cone of `[lo, hi]` at `x`.
///
/// Returns zero when the membership holds, the amount by which `y` has the
/// wrong sign (or is nonzero in the interior) otherwise, and infinity when `x`
/// is outside the interval. `x_tol` decides when `x` counts as sitting on a
/// bound. Either bound may be infinite.
pub fn normal_cone_violation(lo: f64, hi: f64, x: f64, y: f64, x_tol: f64) -> f64 {
    if x < lo - x_tol || x > hi + x_tol {
        return f64::INFINITY;
    }
    let at_lo = (x - lo).abs() <= x_tol;
    let at_hi = (hi - x).abs() <= x_tol;
    match (at_lo, at_hi) {
        (true, true) => 0.0,
        (true, false) => y.max(0.0),
        (false, true) => (-y).max(0.0),
        (false, false) => y.abs(),
    }
}

/// Unique root of `S(x)/a + b x + c = 0` for `a >= 0`, `b > 0`.
///
/// `a = 0` is the closed-orifice limit and yields `x = 0`.
pub fn phi_a(b: f64, c: f64, a: f64) -> Result<f64> {
    if !(b > 0.0) || !(a >= 0.0) {
        return Err(Error::Domain(format!("phi_a requires a >= 0, b > 0 (a = {a}, b = {b})")));
    }
    if a == 0.0 || c == 0.0 {
        return Ok(0.0);
    }
    // 2a|c| / (ab + sqrt(a^2 b^2 + 4a|c|)) with a divided out; no cancellation
    // and the a -> 0 / a -> inf limits come out right.
    let ac = c.abs();
    let mag = 2.0 * ac / (b + (b * b + 4.0 * ac / a).sqrt());
    Ok(-mag.copysign(c))
}

/// Unique root of `S(x)/a0 + S(x - x1)/a1 + b x + c = 0`.
///
/// Requires `a0, a1 >= 0` not both zero and `b > 0`. A zero coefficient is
/// the closed-orifice limit and pins `x` to the corresponding breakpoint.
/// The branch is selected from the sign of the residual at the breakpoints
/// `0` and `x1`; ties go to the first matching branch.
pub fn phi_b(b: f64, c: f64, a0: f64, a1: f64, x1: f64) -> Result<f64> {
    if !(b > 0.0) || !(a0 >= 0.0) || !(a1 >= 0.0) || (a0 == 0.0 && a1 == 0.0) {
        return Err(Error::Domain(format!(
            "phi_b requires a0, a1 >= 0 not both zero and b > 0 (a0 = {a0}, a1 = {a1}, b = {b})"
        )));
    }
    if a0 == 0.0 {
        return Ok(0.0);
    }
    if a1 == 0.0 {
        return Ok(x1);
    }

    let s1 = s_signed(x1);
    // a0 * residual(x1) = s1 - h, a1 * residual(0) = a1c - s1
    let h = -a0 * (b * x1 + c);
    let a1c = a1 * c;

    // signs of x and x - x1 at the root
    let (s0, s1_) = if (h <= s1 && s1 <= 0.0) || (0.0 <= s1 && s1 <= a1c) {
        (-1.0, -1.0)
    } else if (0.0 <= s1 && s1 <= h) || (a1c <= s1 && s1 <= 0.0) {
        (1.0, 1.0)
    } else if s1 <= 0.0_f64.min(h).min(a1c) {
        (-1.0, 1.0)
    } else {
        (1.0, -1.0)
    };
    // On the selected branch the residual times a0*a1 is a quadratic with
    // positive slope at the root. Solve it once for x and once for the
    // offset x - x1 and keep whichever unknown is smaller in magnitude: the
    // small one is resolved to full relative precision.
    let lead = s0 * a1 + s1_ * a0;
    let x = increasing_quadratic_root(lead, a0 * a1 * b - 2.0 * s1_ * a0 * x1, s1_ * a0 * x1 * x1 + a0 * a1c);
    let d = increasing_quadratic_root(
        lead,
        2.0 * s0 * a1 * x1 + a0 * a1 * b,
        a1 * (s0 * x1 * x1 + a0 * b * x1 + a0 * c),
    );
    Ok(if d.abs() < x.abs() { x1 + d } else { x })
}

/// Root of `a y^2 + b y + c` at which the derivative `2ay + b` is
/// non-negative, evaluated without cancellation.
fn increasing_quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    let d = (b * b - 4.0 * a * c).max(0.0).sqrt();
    if b >= 0.0 {
        if b + d == 0.0 {
            0.0
        } else {
            -2.0 * c / (b + d)
        }
    } else {
        (d - b) / (2.0 * a)
    }
}
