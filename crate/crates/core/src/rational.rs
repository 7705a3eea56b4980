//! Exact rational scalars.
//!
//! Density weights, pencil parameters and every numeric constant in the
//! library are arbitrary-precision rationals, so algebraic identities can be
//! checked exactly instead of up to floating-point noise.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

/// An exact rational number, always stored reduced with a positive
/// denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Builds `num/den`. Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational with zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Integer value when the rational is an integer that fits in `i64`.
    pub fn to_integer(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    /// `self^exp` for integer exponents; `exp < 0` requires `self != 0`.
    pub fn pow(&self, exp: i64) -> Self {
        if exp == 0 {
            return Rational::one();
        }
        assert!(
            exp > 0 || !self.is_zero(),
            "negative power of zero rational"
        );
        let e = i32::try_from(exp.unsigned_abs().min(i32::MAX as u64)).unwrap();
        let base = self.0.pow(e);
        if exp < 0 {
            Rational(base.recip())
        } else {
            Rational(base)
        }
    }

    /// Splits into `(floor, frac)` with `self = floor + frac`, `0 <= frac < 1`.
    pub fn split_floor(&self) -> (i64, Rational) {
        let floor = self.0.floor();
        let frac = &self.0 - &floor;
        (
            floor.to_integer().to_i64().expect("floor exceeds i64"),
            Rational(frac),
        )
    }

    /// Exact `self^(p/q)` when one exists (e.g. `(4/9)^(1/2) = 2/3`).
    pub fn rational_root(&self, exp: &Rational) -> Option<Rational> {
        if self.is_zero() {
            return if exp.is_negative() {
                None
            } else {
                Some(Rational::zero())
            };
        }
        if let Some(k) = exp.to_integer() {
            return Some(self.pow(k));
        }
        if self.is_negative() {
            return None;
        }
        // self^(p/q): q-th roots of numerator and denominator must be exact.
        let q = exp.0.denom().to_i64()?;
        let p = exp.0.numer().to_i64()?;
        let root = |n: &BigInt| -> Option<BigInt> {
            let r = n.nth_root(q.try_into().ok()?);
            if num::pow::pow(r.clone(), q as usize) == *n {
                Some(r)
            } else {
                None
            }
        };
        let rn = root(self.0.numer())?;
        let rd = root(self.0.denom())?;
        Some(Rational(BigRational::new(rn, rd)).pow(p))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parse error for rational literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError(pub String);

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal: {}", self.0)
    }
}

impl std::error::Error for ParseRationalError {}

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match BigRational::from_str(s) {
            Ok(r) => Ok(Rational(r)),
            Err(_) => {
                // BigRational rejects plain integers like "3"; accept them.
                BigInt::from_str(s)
                    .map(|n| Rational(BigRational::from_integer(n)))
                    .map_err(|_| ParseRationalError(s.to_string()))
            }
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &'a Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        self.0 -= rhs.0;
    }
}

impl MulAssign for Rational {
    fn mul_assign(&mut self, rhs: Rational) {
        self.0 *= rhs.0;
    }
}
