//! Double-double arithmetic for difference quotients.
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`,
//! giving about 106 bits of precision. Only the operations needed to
//! evaluate maps are provided.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    if !s.is_finite() {
        return Dd { hi: s, lo: 0.0 };
    }
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    pub fn powi(self, n: u32) -> Dd {
        let mut result = Dd::from(1.0);
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base;
            }
            base = base * base;
            e >>= 1;
        }
        result
    }

    /// Orders against an `f64`.
    pub fn cmp_f64(self, b: f64) -> Option<Ordering> {
        match self.hi.partial_cmp(&b)? {
            Ordering::Equal => self.lo.partial_cmp(&0.0),
            o => Some(o),
        }
    }
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        if !s1.is_finite() {
            return Dd::from(s1);
        }
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s = quick_two_sum(s1, s2 + t1);
        quick_two_sum(s.hi, s.lo + t2)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        if !p1.is_finite() {
            return Dd::from(p1);
        }
        quick_two_sum(p1, p2 + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Dd::from(q1);
        }
        let r = self - b * Dd::from(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from(q2);
        let q3 = r.hi / b.hi;
        quick_two_sum(q1, q2) + Dd::from(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_rounding_error() {
        let x = Dd::from(0.1) + Dd::from(0.2);
        assert_eq!(x.hi, 0.1 + 0.2);
        assert!(x.lo != 0.0);
        let third = Dd::from(1.0) / Dd::from(3.0);
        let back = third * Dd::from(3.0);
        assert!((back - Dd::from(1.0)).to_f64().abs() < 1e-31);
    }

    #[test]
    fn affine_difference_is_exact_enough() {
        let f = |x: f64| Dd::from(0.3) * Dd::from(x) + Dd::from(0.7);
        let (x, y) = (0.4, 0.4 + 1e-9);
        let q = (f(y) - f(x)) / (Dd::from(y) - Dd::from(x));
        assert_eq!(q.to_f64(), 0.3);
    }

    #[test]
    fn ordering_and_powers() {
        let tiny = Dd::from(1.0) + Dd::from(1e-20);
        assert_eq!(tiny.cmp_f64(1.0), Some(Ordering::Greater));
        assert_eq!(Dd::from(-2.0).abs(), Dd::from(2.0));
        assert_eq!(Dd::from(3.0).powi(4).to_f64(), 81.0);
        assert_eq!(Dd::from(f64::MAX) * Dd::from(2.0), Dd::from(f64::INFINITY));
    }
}
