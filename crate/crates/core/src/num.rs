//! Exact rational constants with a cached `f64` approximation.
//!
//! Rationals stay exact through differentiation and simplification;
//! floats appear only at evaluation time. The cached approximation keeps
//! hot evaluation loops away from bignum arithmetic.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational constant.
#[derive(Clone)]
pub struct Num {
    value: BigRational,
    approx: f64,
}

impl Num {
    pub fn from_rational(value: BigRational) -> Self {
        let approx = value.to_f64().unwrap_or(f64::NAN);
        Num { value, approx }
    }

    pub fn from_i64(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        debug_assert!(den != 0);
        Self::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Exact conversion of a finite float (every finite f64 is rational).
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Self::from_rational)
    }

    pub fn zero() -> Self {
        Self::from_i64(0)
    }

    pub fn one() -> Self {
        Self::from_i64(1)
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    /// Cached `f64` approximation of the exact value.
    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.value.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.value.is_negative()
    }

    /// Integer value when the rational is an integer fitting in `i64`.
    pub fn as_i64(&self) -> Option<i64> {
        if self.value.is_integer() {
            self.value.numer().to_i64()
        } else {
            None
        }
    }

    pub fn add(&self, other: &Num) -> Num {
        Self::from_rational(&self.value + &other.value)
    }

    pub fn mul(&self, other: &Num) -> Num {
        Self::from_rational(&self.value * &other.value)
    }

    pub fn neg(&self) -> Num {
        Self::from_rational(-self.value.clone())
    }

    pub fn recip(&self) -> Num {
        debug_assert!(!self.is_zero());
        Self::from_rational(self.value.recip())
    }

    /// Exact integer power. `None` when the exponent is too large to be
    /// worth folding (keeps constant folding from producing huge bignums).
    pub fn pow_i64(&self, exp: i64) -> Option<Num> {
        if exp.unsigned_abs() > 64 {
            return None;
        }
        if self.is_zero() {
            return if exp > 0 { Some(Num::zero()) } else { None };
        }
        let mag = self.value.pow(exp.unsigned_abs() as i32);
        let value = if exp < 0 { mag.recip() } else { mag };
        Some(Self::from_rational(value))
    }

    /// Exact square root when the rational is a perfect square of
    /// non-negative sign.
    pub fn sqrt_exact(&self) -> Option<Num> {
        if self.is_negative() {
            return None;
        }
        let n = self.value.numer().sqrt();
        let d = self.value.denom().sqrt();
        if &(&n * &n) == self.value.numer() && &(&d * &d) == self.value.denom() {
            Some(Self::from_rational(BigRational::new(n, d)))
        } else {
            None
        }
    }

    /// Renders the exact value, `7`, `-3/2` style.
    pub fn render(&self) -> String {
        alloc::format!("{}", self.value)
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl Eq for Num {}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.cmp(&other.value)
    }
}

impl fmt::Debug for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
