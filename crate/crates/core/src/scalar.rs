//! Coefficient types for Grassmann polynomials.
//!
//! `Complex64` is the working type. `Rational` gives exact arithmetic for
//! algebraic-law checks, and `Dual` carries a first derivative alongside the
//! value so that radial derivatives can be taken exactly.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type C64 = Complex64;
pub type Rational = num_rational::Ratio<i128>;

pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(n: i64) -> Self;
    fn from_f64(x: f64) -> Self;
    /// Size used for pivot selection and invertibility tests.
    fn magnitude(&self) -> f64;
}

/// Coefficients that support exp, log and real powers (principal branch).
pub trait Analytic: Coeff {
    fn from_c64(z: C64) -> Self;
    fn value(&self) -> C64;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
}

impl Coeff for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_i64(n: i64) -> Self {
        C64::new(n as f64, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Analytic for C64 {
    fn from_c64(z: C64) -> Self {
        z
    }
    fn value(&self) -> C64 {
        *self
    }
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }
    fn ln(&self) -> Self {
        Complex64::ln(*self)
    }
    fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return C64::new(1.0, 0.0);
        }
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            return self.powi(p as i32);
        }
        Complex64::powf(*self, p)
    }
}

impl Coeff for Rational {
    fn zero() -> Self {
        Rational::from_integer(0)
    }
    fn one() -> Self {
        Rational::from_integer(1)
    }
    fn is_zero(&self) -> bool {
        *self.numer() == 0
    }
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(n as i128)
    }
    /// Nearest fraction with a bounded denominator; exact for dyadic inputs.
    fn from_f64(x: f64) -> Self {
        Rational::approximate_float(x).unwrap_or_else(|| Rational::from_integer(0))
    }
    fn magnitude(&self) -> f64 {
        (*self.numer() as f64 / *self.denom() as f64).abs()
    }
}

/// First-order dual number `v + d·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: C64,
    pub d: C64,
}

impl Dual {
    pub fn new(v: C64, d: C64) -> Self {
        Dual { v, d }
    }
    pub fn constant(v: C64) -> Self {
        Dual {
            v,
            d: C64::new(0.0, 0.0),
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        Dual::new(self.v * inv, (self.d * o.v - self.v * o.d) * inv * inv)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Coeff for Dual {
    fn zero() -> Self {
        Dual::constant(C64::new(0.0, 0.0))
    }
    fn one() -> Self {
        Dual::constant(C64::new(1.0, 0.0))
    }
    fn is_zero(&self) -> bool {
        self.v.is_zero() && self.d.is_zero()
    }
    fn from_i64(n: i64) -> Self {
        Dual::constant(C64::new(n as f64, 0.0))
    }
    fn from_f64(x: f64) -> Self {
        Dual::constant(C64::new(x, 0.0))
    }
    fn magnitude(&self) -> f64 {
        self.v.norm()
    }
}

impl Analytic for Dual {
    fn from_c64(z: C64) -> Self {
        Dual::constant(z)
    }
    fn value(&self) -> C64 {
        self.v
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        Dual::new(e, self.d * e)
    }
    fn ln(&self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
    fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return Dual::one();
        }
        let vp = Analytic::powf(&self.v, p);
        let vpm1 = Analytic::powf(&self.v, p - 1.0);
        Dual::new(vp, self.d * vpm1 * p)
    }
}
