//! Double-double arithmetic: unevaluated sums `hi + lo` of two `f64`,
//! giving roughly 32 significant decimal digits.
//!
//! Used where plain `f64` loses too much to cancellation: the Leibniz
//! recurrence for the transmutation-kernel derivatives, HUM Gramian solves,
//! and residual accumulation in the closed-loop control checks. Only the
//! operations those paths need are implemented.

/// Double-double number. Invariant: `hi` is the f64 rounding of `hi + lo`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    pub const LN_2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        debug_assert!(self.hi > 0.0, "sqrt of negative double-double");
        let y = self.hi.sqrt();
        // one Newton step on y + (x - y^2) / (2y)
        let y_dd = Dd::from_f64(y);
        let corr = (self - y_dd * y_dd) / Dd::from_f64(2.0 * y);
        y_dd + corr
    }

    /// Exponential, accurate to ~1e-31 relative. Argument reduction with
    /// `x = k ln2 + r`, `|r| <= ln2/2`, then the Taylor series for `e^r`.
    pub fn exp(self) -> Dd {
        if self.hi < -746.0 {
            return Dd::ZERO;
        }
        if self.hi > 710.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = self - Dd::from_f64(k) * Dd::LN_2;
        // Taylor sum: 1 + r + r^2/2! + ...
        let mut term = r;
        let mut sum = Dd::ONE + r;
        let mut fac = 1.0f64;
        for i in 2..32 {
            fac *= i as f64;
            term = term * r;
            let t = term / Dd::from_f64(fac);
            sum = sum + t;
            if t.hi.abs() < 1e-34 * sum.hi.abs() {
                break;
            }
        }
        let scale = libm_exp2(k);
        Dd::new(sum.hi * scale, sum.lo * scale)
    }

    /// Integer power by repeated squaring.
    pub fn powi(self, mut n: u32) -> Dd {
        let mut base = self;
        let mut acc = Dd::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

#[inline]
fn libm_exp2(k: f64) -> f64 {
    // exact for integer k in the f64 exponent range
    f64::powi(2.0, k as i32)
}

impl std::ops::Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let e = e + self.lo + rhs.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - Dd::from_f64(q1) * rhs;
        let q2 = r.hi / rhs.hi;
        let r2 = r - Dd::from_f64(q2) * rhs;
        let q3 = r2.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd::new(hi, lo + q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

/// Compensated dot product of two f64 slices, accumulated in double-double.
pub fn dot(a: &[f64], b: &[f64]) -> Dd {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Dd::ZERO;
    for (&x, &y) in a.iter().zip(b) {
        let (p, e) = two_prod(x, y);
        acc = acc + Dd::new(p, e);
    }
    acc
}

/// Compensated sum of an f64 slice.
pub fn sum(xs: &[f64]) -> Dd {
    let mut acc = Dd::ZERO;
    for &x in xs {
        acc = acc + Dd::from_f64(x);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_matches_f64_on_moderate_arguments() {
        for &x in &[-30.0, -3.2, -0.7, 0.0, 0.3, 1.0, 5.5, 40.0] {
            let e = Dd::from_f64(x).exp().to_f64();
            assert!((e - x.exp()).abs() <= 4.0 * f64::EPSILON * x.exp());
        }
    }

    #[test]
    fn exp_identity_exp_sum() {
        // e^a * e^b == e^(a+b) to ~1e-30 relative
        let a = Dd::from_f64(1.75);
        let b = Dd::from_f64(-0.4375);
        let lhs = a.exp() * b.exp();
        let rhs = (a + b).exp();
        let rel = ((lhs - rhs) / rhs).to_f64().abs();
        assert!(rel < 1e-29, "rel={rel:.3e}");
    }

    #[test]
    fn division_and_sqrt_roundtrip() {
        let x = Dd::from_f64(3.0);
        let y = x.recip() * x - Dd::ONE;
        assert!(y.to_f64().abs() < 1e-30);
        let r = Dd::from_f64(2.0).sqrt();
        let e = (r * r - Dd::from_f64(2.0)).to_f64().abs();
        assert!(e < 1e-31);
    }

    #[test]
    fn dot_resolves_cancellation() {
        // sum of (1e16, 1, -1e16) style cancellation exact in dd
        let a = [1e16, 1.0, -1e16];
        let b = [1.0, 1.0, 1.0];
        assert_eq!(dot(&a, &b).to_f64(), 1.0);
    }
}
