use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

impl FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            _ => Err(format!("unknown backend `{s}` (exact|float)")),
        }
    }
}

/// Scalar type of a measure: exact rationals or doubles.
pub trait Weight: Clone + Debug + PartialEq + Send + Sync + 'static {
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exact conversion of a rational (rounded for floats).
    fn from_rational(r: &Rational) -> Self;
    /// Binary value of a double (exact for rationals).
    fn from_f64(x: f64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn sub_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn powi(&self, k: u32) -> Self;
    fn to_f64(&self) -> f64;
    fn to_text(&self) -> String;
    fn from_text(s: &str) -> Option<Self>;

    fn add(&self, other: &Self) -> Self {
        let mut x = self.clone();
        x.add_assign(other);
        x
    }

    fn sub(&self, other: &Self) -> Self {
        let mut x = self.clone();
        x.sub_assign(other);
        x
    }
}

impl Weight for Rational {
    const BACKEND: Backend = Backend::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(Zero::zero)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign(&mut self, other: &Self) {
        *self -= other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn powi(&self, k: u32) -> Self {
        num_traits::pow(self.clone(), k as usize)
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn to_text(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
    fn from_text(s: &str) -> Option<Self> {
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if Zero::is_zero(&d) {
            return None;
        }
        Some(BigRational::new(n, d))
    }
}

impl Weight for f64 {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign(&mut self, other: &Self) {
        *self -= other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn powi(&self, k: u32) -> Self {
        f64::powi(*self, k as i32)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_text(&self) -> String {
        // shortest representation that round-trips
        format!("{self:?}")
    }
    fn from_text(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

/// Correctly scaled conversion that does not overflow for huge numerators
/// and denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(x) = ToPrimitive::to_f64(r) {
        if x.is_finite() && (x != 0.0 || Zero::is_zero(r.numer())) {
            return x;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db - 60;
    let (n, d) = if shift > 0 {
        (r.numer().clone(), r.denom() << shift as usize)
    } else {
        (r.numer() << (-shift) as usize, r.denom().clone())
    };
    let q = ToPrimitive::to_f64(&(n / d)).unwrap_or(f64::NAN);
    q * 2f64.powi(shift as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let r = Rational::from_ratio(-6, 16);
        assert_eq!(r.to_text(), "-3/8");
        assert_eq!(Rational::from_text("-3/8"), Some(r));
        assert_eq!(Rational::from_text("1/0"), None);
        let x = 0.1f64 + 0.2;
        assert_eq!(f64::from_text(&x.to_text()), Some(x));
    }

    #[test]
    fn tiny_rationals_convert() {
        let big = BigInt::from(4).pow(400);
        let r = BigRational::new(BigInt::from(3), big);
        let x = rational_to_f64(&r);
        assert!(x > 0.0 && (x / (3.0 * 4f64.powi(-400)) - 1.0).abs() < 1e-12);
    }
}
