//! Number types shared by every module.
//!
//! Geometry and scheme combinatorics are generic over [`Scalar`]. Three
//! implementations are provided: exact rationals, `f64`, and double-double
//! ([`Dd`]) for the horseshoe family, whose smallest features fall far below
//! `f64` resolution at large `n`.

use alloc::format;
use alloc::string::String;
use core::cmp::Ordering;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_integer::Roots;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Float};

pub use crate::dd::Dd;

pub type Rational = Ratio<i128>;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// True when arithmetic is exact and `tol()` is zero.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn ratio(p: i64, q: i64) -> Self {
        Self::from_i64(p) / Self::from_i64(q)
    }
    fn to_f64(self) -> f64;
    /// Exact conversion where possible; `None` for rationals that cannot hold the value.
    fn from_f64(v: f64) -> Option<Self>;
    /// Absolute tolerance for incidence and equality decisions.
    fn tol() -> Self;
    /// Square root; exact types return `None` unless the value is a perfect square.
    fn sqrt(self) -> Option<Self>;
    fn checked_mul(self, o: Self) -> Option<Self>;
    fn checked_add(self, o: Self) -> Option<Self>;
    fn checked_sub(self, o: Self) -> Option<Self>;
    fn checked_div(self, o: Self) -> Option<Self>;
    fn parse(s: &str) -> Option<Self>;
    fn emit(&self) -> String;

    fn two() -> Self {
        Self::one() + Self::one()
    }
    fn half() -> Self {
        Self::one() / Self::two()
    }
    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
    fn near(self, o: Self) -> bool {
        (self - o).abs() <= Self::tol()
    }
    /// Strictly less, beyond tolerance.
    fn lt_tol(self, o: Self) -> bool {
        self < o - Self::tol()
    }
    fn is_pos(self) -> bool {
        self > Self::tol()
    }
    fn min_s(self, o: Self) -> Self {
        if o < self {
            o
        } else {
            self
        }
    }
    fn max_s(self, o: Self) -> Self {
        if o > self {
            o
        } else {
            self
        }
    }
    fn cmp_s(&self, o: &Self) -> Ordering {
        self.partial_cmp(o).unwrap_or(Ordering::Equal)
    }
    /// Reduce into `[0, m)`.
    fn rem_euclid_s(self, m: Self) -> Self {
        let mut v = self;
        if v >= m || v < Self::zero() {
            let k = (v.to_f64() / m.to_f64()).floor();
            if let Some(kk) = Self::from_f64(k) {
                v = v - kk * m;
            }
            while v >= m {
                v = v - m;
            }
            while v < Self::zero() {
                v = v + m;
            }
        }
        if !Self::EXACT && (v - m).abs() <= Self::tol() {
            v = Self::zero();
        }
        v
    }
}

/// Float-like scalars with a total square root.
pub trait Real: Scalar {
    fn sqrt_r(self) -> Self;
    fn from_f64_r(v: f64) -> Self;
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p.trim().parse().ok()?;
        let q: i128 = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Ratio::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (ip, fp) = match body.split_once('.') {
        Some((a, b)) => (a, b),
        None => (body, ""),
    };
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().all(|c| c.is_ascii_digit()) || !fp.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = [ip, fp].concat();
    let num: i128 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let den: i128 = 10i128.checked_pow(fp.len() as u32)?;
    let r = Ratio::new(num, den);
    Some(if neg { -r } else { r })
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Ratio::from_integer(0)
    }
    fn one() -> Self {
        Ratio::from_integer(1)
    }
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }
    fn to_f64(self) -> f64 {
        let n = *self.numer();
        let d = *self.denom();
        if n.abs() < (1i128 << 100) && d < (1i128 << 100) {
            n as f64 / d as f64
        } else {
            let shift = 128 - n.abs().max(d).leading_zeros() as i32 - 60;
            let s = shift.max(0) as u32;
            ((n >> s) as f64) / ((d >> s).max(1) as f64)
        }
    }
    fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Self::zero());
        }
        let bits = v.to_bits();
        let sign: i128 = if bits >> 63 == 0 { 1 } else { -1 };
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let mant = if exp == 0 {
            ((bits & 0xfffffffffffff) << 1) as i128
        } else {
            ((bits & 0xfffffffffffff) | 0x10000000000000) as i128
        };
        let e = exp - 1075;
        if e >= 0 {
            if e > 70 {
                return None;
            }
            Some(Ratio::from_integer(sign * (mant << e)))
        } else {
            let tz = mant.trailing_zeros() as i32;
            let shift = tz.min(-e);
            let m = mant >> shift;
            let e2 = -e - shift;
            if e2 > 125 {
                return None;
            }
            Some(Ratio::new(sign * m, 1i128 << e2))
        }
    }
    fn tol() -> Self {
        Self::zero()
    }
    fn sqrt(self) -> Option<Self> {
        if *self.numer() < 0 {
            return None;
        }
        let n = *self.numer();
        let d = *self.denom();
        let rn = n.sqrt();
        let rd = d.sqrt();
        if rn * rn == n && rd * rd == d {
            Some(Ratio::new(rn, rd))
        } else {
            None
        }
    }
    fn checked_mul(self, o: Self) -> Option<Self> {
        CheckedMul::checked_mul(&self, &o)
    }
    fn checked_add(self, o: Self) -> Option<Self> {
        CheckedAdd::checked_add(&self, &o)
    }
    fn checked_sub(self, o: Self) -> Option<Self> {
        CheckedSub::checked_sub(&self, &o)
    }
    fn checked_div(self, o: Self) -> Option<Self> {
        if *o.numer() == 0 {
            return None;
        }
        CheckedDiv::checked_div(&self, &o)
    }
    fn parse(s: &str) -> Option<Self> {
        parse_rational(s)
    }
    fn emit(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f64(v: f64) -> Option<Self> {
        Some(v)
    }
    fn tol() -> Self {
        1e-10
    }
    fn sqrt(self) -> Option<Self> {
        if self < 0.0 {
            None
        } else {
            Some(Float::sqrt(self))
        }
    }
    fn checked_mul(self, o: Self) -> Option<Self> {
        Some(self * o).filter(|v| v.is_finite())
    }
    fn checked_add(self, o: Self) -> Option<Self> {
        Some(self + o).filter(|v| v.is_finite())
    }
    fn checked_sub(self, o: Self) -> Option<Self> {
        Some(self - o).filter(|v| v.is_finite())
    }
    fn checked_div(self, o: Self) -> Option<Self> {
        Some(self / o).filter(|v| v.is_finite())
    }
    fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.contains('/') {
            return parse_rational(s).map(|r| r.to_f64());
        }
        s.parse().ok()
    }
    fn emit(&self) -> String {
        format!("{:.16e}", self)
    }
}

impl Real for f64 {
    fn sqrt_r(self) -> Self {
        Float::sqrt(self)
    }
    fn from_f64_r(v: f64) -> Self {
        v
    }
}

fn dd_from_i128(n: i128) -> Dd {
    Dd::from_i128(n)
}

fn parse_dd(s: &str) -> Option<Dd> {
    let s = s.trim();
    // "hi+lo" or "hi-lo", as written by `emit`
    let b = s.as_bytes();
    if let Some(i) = (1..b.len()).find(|&i| (b[i] == b'+' || b[i] == b'-') && !matches!(b[i - 1], b'e' | b'E')) {
        let hi: f64 = s[..i].parse().ok()?;
        let lo: f64 = s[i..].parse().ok()?;
        return Some(Dd::new(hi, lo));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p.trim().parse().ok()?;
        let q: i128 = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(dd_from_i128(p) / dd_from_i128(q));
    }
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mant.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mant),
    };
    let (ip, fp) = match body.split_once('.') {
        Some((a, b)) => (a, b),
        None => (body, ""),
    };
    if (ip.is_empty() && fp.is_empty())
        || !ip.chars().all(|c| c.is_ascii_digit())
        || !fp.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let ten = Dd::from(10.0);
    let mut v = Dd::from(0.0);
    for c in ip.chars().chain(fp.chars()) {
        v = v * ten + Dd::from((c as u8 - b'0') as f64);
    }
    let e = exp - fp.len() as i32;
    v = if e >= 0 { v * ten.powi(e) } else { v / ten.powi(-e) };
    Some(if neg { -v } else { v })
}

impl Scalar for Dd {
    const EXACT: bool = false;
    fn zero() -> Self {
        Dd::from(0.0)
    }
    fn one() -> Self {
        Dd::from(1.0)
    }
    fn from_i64(v: i64) -> Self {
        dd_from_i128(v as i128)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn from_f64(v: f64) -> Option<Self> {
        Some(Dd::from(v))
    }
    fn tol() -> Self {
        Dd::from(1e-28)
    }
    fn sqrt(self) -> Option<Self> {
        if self < Self::zero() {
            None
        } else {
            Some(Dd::sqrt(self))
        }
    }
    fn checked_mul(self, o: Self) -> Option<Self> {
        Some(self * o).filter(|v| v.hi().is_finite())
    }
    fn checked_add(self, o: Self) -> Option<Self> {
        Some(self + o).filter(|v| v.hi().is_finite())
    }
    fn checked_sub(self, o: Self) -> Option<Self> {
        Some(self - o).filter(|v| v.hi().is_finite())
    }
    fn checked_div(self, o: Self) -> Option<Self> {
        Some(self / o).filter(|v| v.hi().is_finite())
    }
    fn parse(s: &str) -> Option<Self> {
        parse_dd(s)
    }
    fn emit(&self) -> String {
        format!("{:.16e}{:+.16e}", self.hi(), self.lo())
    }
}

impl Real for Dd {
    fn sqrt_r(self) -> Self {
        Dd::sqrt(self)
    }
    fn from_f64_r(v: f64) -> Self {
        Dd::from(v)
    }
}

pub fn rat(p: i128, q: i128) -> Rational {
    Ratio::new(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parse_forms() {
        assert_eq!(Rational::parse("3/4"), Some(rat(3, 4)));
        assert_eq!(Rational::parse("-0.25"), Some(rat(-1, 4)));
        assert_eq!(Rational::parse("7"), Some(rat(7, 1)));
        assert_eq!(Rational::parse("1/0"), None);
        assert_eq!(Rational::parse("x"), None);
    }

    #[test]
    fn rational_sqrt_only_for_squares() {
        assert_eq!(rat(9, 4).sqrt(), Some(rat(3, 2)));
        assert_eq!(rat(2, 1).sqrt(), None);
    }

    #[test]
    fn rational_from_f64_is_exact() {
        assert_eq!(Rational::from_f64(0.375), Some(rat(3, 8)));
        assert_eq!(Rational::from_f64(-6.0), Some(rat(-6, 1)));
        let r = Rational::from_f64(0.1).unwrap();
        assert_eq!(r.to_f64(), 0.1);
    }

    #[test]
    fn emit_parse_round_trip() {
        for s in ["1/3", "-5/7", "0/1"] {
            let r = Rational::parse(s).unwrap();
            assert_eq!(Rational::parse(&r.emit()), Some(r));
        }
        let x = 0.1f64 + 0.2;
        assert_eq!(f64::parse(&x.emit()), Some(x));
    }

    #[test]
    fn dd_parse_keeps_low_word() {
        let v = Dd::parse("1/3").unwrap();
        let err = v * Dd::from(3.0) - Dd::from(1.0);
        assert!(err.hi().abs() < 1e-31);
        let w = Dd::parse("2.5e-3").unwrap();
        assert!((w.to_f64() - 0.0025).abs() < 1e-18);
        let x = Dd::from(2.0) - Dd::from(3e-20);
        assert_eq!(Dd::parse(&x.emit()), Some(x));
        assert_eq!(Dd::parse(&(-v).emit()), Some(-v));
    }

    #[test]
    fn rem_euclid_wraps() {
        assert_eq!(rat(9, 2).rem_euclid_s(rat(4, 1)), rat(1, 2));
        assert_eq!(rat(-1, 2).rem_euclid_s(rat(4, 1)), rat(7, 2));
        assert!((4.0f64 - 1e-12).rem_euclid_s(4.0) == 0.0);
    }

    #[test]
    fn checked_mul_overflow_is_none() {
        let big = rat(1, 1i128 << 100);
        assert!(Scalar::checked_mul(big, big).is_none());
    }
}
