//! Extended-range real and complex scalars.
//!
//! An [`ExtendedReal`] is an `f64` significand in `[1, 2)` paired with an
//! `i64` binary exponent, so magnitudes such as `exp(exp(40))` stay finite.
//! Precision is that of `f64`; only the range is extended.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

// Cody-Waite split of ln 2; the high part has trailing zero bits.
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// Largest |x| accepted by [`ExtendedReal::exp`].
const MAX_EXP_ARG: f64 = 6.0e18;

/// Exact `2^e` for `e` in the normal `f64` exponent range.
#[inline]
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Splits a finite `x` into `(s, e)` with `x = s·2^e` and `1 <= |s| < 2`.
#[inline]
fn split(x: f64) -> (f64, i64) {
    if x == 0.0 {
        return (0.0, 0);
    }
    let mut bits = x.to_bits();
    let mut bias = 0i64;
    if (bits >> 52) & 0x7ff == 0 {
        // subnormal
        bits = (x * pow2(64)).to_bits();
        bias = -64;
    }
    let e = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let s = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
    (s, e + bias)
}

/// Real number `significand · 2^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ExtendedReal {
    sig: f64,
    exp: i64,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal { sig: 0.0, exp: 0 };
    pub const ONE: ExtendedReal = ExtendedReal { sig: 1.0, exp: 0 };

    /// Builds `s·2^e`, normalizing the significand. Panics if `s` is not finite.
    pub fn from_parts(s: f64, e: i64) -> Self {
        assert!(s.is_finite(), "non-finite significand {s}");
        if s == 0.0 {
            return Self::ZERO;
        }
        let (sig, de) = split(s);
        let exp = e
            .checked_add(de)
            .unwrap_or_else(|| panic!("binary exponent overflow in from_parts({s}, {e})"));
        Self { sig, exp }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_parts(x, 0)
    }

    pub fn significand(&self) -> f64 {
        self.sig
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.sig == 0.0
    }

    pub fn is_sign_negative(&self) -> bool {
        self.sig < 0.0
    }

    /// Nearest `f64`; saturates to ±inf or 0 outside the `f64` range.
    pub fn to_f64(&self) -> f64 {
        if self.sig == 0.0 {
            return 0.0;
        }
        if self.exp > 1023 {
            return self.sig.signum() * f64::INFINITY;
        }
        if self.exp < -1074 {
            return 0.0 * self.sig.signum();
        }
        if self.exp < -1022 {
            return self.sig * pow2(self.exp + 64) * pow2(-64);
        }
        self.sig * pow2(self.exp)
    }

    pub fn abs(&self) -> Self {
        Self {
            sig: self.sig.abs(),
            exp: self.exp,
        }
    }

    /// Scales by `2^k`.
    pub fn ldexp(&self, k: i64) -> Result<Self> {
        if self.is_zero() {
            return Ok(*self);
        }
        let exp = self
            .exp
            .checked_add(k)
            .ok_or_else(|| Error::ExponentOverflow(format!("2^{} · 2^{k}", self.exp)))?;
        Ok(Self { sig: self.sig, exp })
    }

    /// Sum; the smaller operand is absorbed when it lies more than 64 binades below.
    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self.exp > other.exp
            || (self.exp == other.exp && self.sig.abs() >= other.sig.abs())
        {
            (self, other)
        } else {
            (other, self)
        };
        let gap = (hi.exp as i128) - (lo.exp as i128);
        if gap > 64 {
            return hi;
        }
        let sum = hi.sig + lo.sig * pow2(-(gap as i64));
        if sum == 0.0 {
            return Self::ZERO;
        }
        Self::from_parts(sum, hi.exp)
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(-other)
    }

    /// Product with the exponents added as wide integers.
    pub fn checked_mul(self, other: Self) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::ZERO);
        }
        let exp = self.exp.checked_add(other.exp).ok_or_else(|| {
            Error::ExponentOverflow(format!("2^{} · 2^{}", self.exp, other.exp))
        })?;
        let (sig, de) = split(self.sig * other.sig);
        let exp = exp
            .checked_add(de)
            .ok_or_else(|| Error::ExponentOverflow(format!("2^{exp} · 2^{de}")))?;
        Ok(Self { sig, exp })
    }

    pub fn mul_f64(self, x: f64) -> Self {
        if self.is_zero() || x == 0.0 {
            return Self::ZERO;
        }
        let (s, e) = split(x);
        let mut out = Self::from_parts(self.sig * s, self.exp);
        out.exp = out
            .exp
            .checked_add(e)
            .expect("binary exponent overflow in mul_f64");
        out
    }

    /// Natural logarithm as an ordinary real. Requires a positive argument.
    pub fn ln(&self) -> Result<f64> {
        if self.sig <= 0.0 {
            return Err(Error::Domain(format!("ln of non-positive value {self}")));
        }
        Ok(self.ln_abs())
    }

    /// `ln|x|`, with `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.sig == 0.0 {
            return f64::NEG_INFINITY;
        }
        let e = self.exp as f64;
        e.mul_add(LN2_HI, e.mul_add(LN2_LO, self.sig.abs().ln()))
    }

    /// `e^x` in extended range.
    pub fn exp(x: f64) -> Result<Self> {
        if !x.is_finite() || x.abs() > MAX_EXP_ARG {
            return Err(Error::ExponentOverflow(format!("exp({x})")));
        }
        let k = (x / std::f64::consts::LN_2).floor();
        let r = (-k).mul_add(LN2_LO, (-k).mul_add(LN2_HI, x));
        Ok(Self::from_parts(r.exp(), k as i64))
    }

    /// Square root of a non-negative value.
    pub fn sqrt(&self) -> Result<Self> {
        if self.sig < 0.0 {
            return Err(Error::Domain(format!("sqrt of negative value {self}")));
        }
        if self.is_zero() {
            return Ok(Self::ZERO);
        }
        let (s, e) = if self.exp.rem_euclid(2) == 1 {
            (self.sig * 2.0, self.exp - 1)
        } else {
            (self.sig, self.exp)
        };
        Ok(Self::from_parts(s.sqrt(), e / 2))
    }

    /// `x^k` for integer `k >= 0`.
    pub fn powi(self, k: u64) -> Result<Self> {
        let mut base = self;
        let mut acc = Self::ONE;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.checked_mul(base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.checked_mul(base)?;
            }
        }
        Ok(acc)
    }

    /// Report form: sign character followed by `ln|x|` to 12 significant digits.
    pub fn to_report_string(&self) -> String {
        if self.is_zero() {
            return "+-inf".to_string();
        }
        let sign = if self.sig < 0.0 { '-' } else { '+' };
        format!("{sign}{:.11e}", self.ln_abs())
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        let sa = self.sig.signum() as i32 * (!self.is_zero()) as i32;
        let sb = other.sig.signum() as i32 * (!other.is_zero()) as i32;
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let mag = self
            .exp
            .cmp(&other.exp)
            .then(self.sig.abs().total_cmp(&other.sig.abs()));
        if sa > 0 {
            mag
        } else {
            mag.reverse()
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: Self) -> Self {
        ExtendedReal::add(self, rhs)
    }
}

impl Sub for ExtendedReal {
    type Output = ExtendedReal;
    fn sub(self, rhs: Self) -> Self {
        ExtendedReal::sub(self, rhs)
    }
}

/// Panics on wide-exponent overflow; use [`ExtendedReal::checked_mul`] to handle it.
impl Mul for ExtendedReal {
    type Output = ExtendedReal;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("binary exponent overflow")
    }
}

impl Neg for ExtendedReal {
    type Output = ExtendedReal;
    fn neg(self) -> Self {
        Self {
            sig: -self.sig,
            exp: self.exp,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.sig, self.exp)
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_report_string())
    }
}

/// Complex number with extended-range components.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ExtendedComplex {
    pub re: ExtendedReal,
    pub im: ExtendedReal,
}

impl ExtendedComplex {
    pub const ZERO: ExtendedComplex = ExtendedComplex {
        re: ExtendedReal::ZERO,
        im: ExtendedReal::ZERO,
    };
    pub const ONE: ExtendedComplex = ExtendedComplex {
        re: ExtendedReal::ONE,
        im: ExtendedReal::ZERO,
    };

    pub fn new(re: ExtendedReal, im: ExtendedReal) -> Self {
        Self { re, im }
    }

    pub fn from_f64(re: f64, im: f64) -> Self {
        Self::new(ExtendedReal::from_f64(re), ExtendedReal::from_f64(im))
    }

    pub fn from_real(re: ExtendedReal) -> Self {
        Self::new(re, ExtendedReal::ZERO)
    }

    /// `exp(ln_modulus) · e^{i·arg}`.
    pub fn from_polar(ln_modulus: f64, arg: f64) -> Result<Self> {
        let m = ExtendedReal::exp(ln_modulus)?;
        let (s, c) = arg.sin_cos();
        Ok(Self::new(m.mul_f64(c), m.mul_f64(s)))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// Largest component exponent; `None` for zero.
    fn top_exponent(&self) -> Option<i64> {
        match (self.re.is_zero(), self.im.is_zero()) {
            (true, true) => None,
            (false, true) => Some(self.re.exp),
            (true, false) => Some(self.im.exp),
            (false, false) => Some(self.re.exp.max(self.im.exp)),
        }
    }

    /// Returns `(x, y, e)` with `self = (x + iy)·2^e` and `max(|x|,|y|) < 2`.
    pub fn scaled_parts(&self) -> (f64, f64, i64) {
        match self.top_exponent() {
            None => (0.0, 0.0, 0),
            Some(e) => {
                let shift = |v: &ExtendedReal| ExtendedReal { sig: v.sig, exp: v.exp - e }.to_f64();
                (shift(&self.re), shift(&self.im), e)
            }
        }
    }

    pub fn abs(&self) -> ExtendedReal {
        let (x, y, e) = self.scaled_parts();
        ExtendedReal::from_parts(x.hypot(y), e)
    }

    pub fn ln_abs(&self) -> f64 {
        self.abs().ln_abs()
    }

    /// Principal argument in `(-π, π]`; zero for the zero value.
    pub fn arg(&self) -> f64 {
        let (x, y, _) = self.scaled_parts();
        y.atan2(x)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }

    pub fn checked_mul(self, o: Self) -> Result<Self> {
        let rr = self.re.checked_mul(o.re)?;
        let ii = self.im.checked_mul(o.im)?;
        let ri = self.re.checked_mul(o.im)?;
        let ir = self.im.checked_mul(o.re)?;
        Ok(Self::new(rr - ii, ri + ir))
    }

    pub fn scale(self, k: ExtendedReal) -> Result<Self> {
        Ok(Self::new(self.re.checked_mul(k)?, self.im.checked_mul(k)?))
    }

    pub fn mul_f64(self, k: f64) -> Self {
        Self::new(self.re.mul_f64(k), self.im.mul_f64(k))
    }

    /// Multiplies by an ordinary complex number `(re, im)`.
    pub fn mul_c64(self, re: f64, im: f64) -> Self {
        Self::new(
            self.re.mul_f64(re) - self.im.mul_f64(im),
            self.re.mul_f64(im) + self.im.mul_f64(re),
        )
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }
}

impl Add for ExtendedComplex {
    type Output = ExtendedComplex;
    fn add(self, rhs: Self) -> Self {
        ExtendedComplex::add(self, rhs)
    }
}

impl Sub for ExtendedComplex {
    type Output = ExtendedComplex;
    fn sub(self, rhs: Self) -> Self {
        ExtendedComplex::sub(self, rhs)
    }
}

impl Mul for ExtendedComplex {
    type Output = ExtendedComplex;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("binary exponent overflow")
    }
}

impl Neg for ExtendedComplex {
    type Output = ExtendedComplex;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn er(s: f64, e: i64) -> ExtendedReal {
        ExtendedReal::from_parts(s, e)
    }

    #[test]
    fn add_identity_cases() {
        let one = er(1.0, 0);
        assert_eq!(one + one, er(1.0, 1));
        assert_eq!((one + one).significand(), 1.0);
        let x = er(1.375, -17);
        assert_eq!(x + ExtendedReal::ZERO, x);
        assert_eq!(ExtendedReal::ZERO + x, x);
    }

    #[test]
    fn add_absorbs_far_smaller_operand() {
        let big = er(1.5, 4000);
        let small = er(1.5, 10);
        let s = big + small;
        assert_eq!(s.significand(), 1.5);
        assert_eq!(s.exponent(), 4000);
    }

    #[test]
    fn cancellation_yields_canonical_zero() {
        let x = er(1.25, 77);
        let z = x - x;
        assert!(z.is_zero());
        assert_eq!(z.exponent(), 0);
    }

    #[test]
    fn mul_cases() {
        assert_eq!(er(1.0, 3) * er(1.0, 4), er(1.0, 7));
        assert!((er(1.3, 9) * ExtendedReal::ZERO).is_zero());
        let p = er(1.1, 5000) * er(1.3, 5000);
        assert_eq!(p.exponent(), 10000);
        assert!((p.significand() - 1.43).abs() < 1e-15);
        let lhs = p.ln().unwrap();
        let rhs = er(1.1, 5000).ln().unwrap() + er(1.3, 5000).ln().unwrap();
        assert!(((lhs - rhs) / rhs).abs() < 1e-12);
    }

    #[test]
    fn mul_overflow_is_an_error() {
        let big = er(1.0, i64::MAX - 2);
        assert!(matches!(big.checked_mul(big), Err(Error::ExponentOverflow(_))));
    }

    #[test]
    fn ln_and_exp_cases() {
        assert_eq!(er(1.0, 0).ln().unwrap(), 0.0);
        let l = er(1.0, 100).ln().unwrap();
        assert!((l - 69.314_718_055_994_53).abs() < 1e-12);
        assert!(ExtendedReal::ZERO.ln().is_err());
        assert!(er(-1.0, 3).ln().is_err());
        assert_eq!(ExtendedReal::exp(0.0).unwrap(), ExtendedReal::ONE);
        let two = ExtendedReal::exp(std::f64::consts::LN_2).unwrap();
        assert_eq!(two.exponent(), 1);
        assert!((two.significand() - 1.0).abs() < 1e-15);
        let x = 12345.678;
        assert!((ExtendedReal::exp(x).unwrap().ln().unwrap() - x).abs() < 1e-8);
        assert!(ExtendedReal::exp(1e19).is_err());
        assert!(ExtendedReal::exp(f64::NAN).is_err());
    }

    #[test]
    fn exp_of_exp_forty_is_representable() {
        let v = ExtendedReal::exp(40f64.exp()).unwrap();
        assert!((v.ln().unwrap() / 40f64.exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn subnormal_inputs_normalize() {
        let tiny = f64::MIN_POSITIVE / 8.0;
        let x = ExtendedReal::from_f64(tiny);
        assert_eq!(x.exponent(), -1025);
        assert_eq!(x.to_f64(), tiny);
    }

    #[test]
    fn report_string_format() {
        assert_eq!(er(1.0, 100).to_report_string(), "+6.93147180560e1");
        assert_eq!((-ExtendedReal::from_f64(0.1)).to_report_string(), "--2.30258509299e0");
    }

    #[test]
    fn complex_modulus_and_arg_survive_huge_exponents() {
        let z = ExtendedComplex::from_polar(1e6, 0.75).unwrap();
        assert!((z.ln_abs() - 1e6).abs() < 1e-9);
        assert!((z.arg() - 0.75).abs() < 1e-14);
        let w = z.checked_mul(z.conj()).unwrap();
        assert!((w.ln_abs() - 2e6).abs() < 1e-8);
        assert!(w.im.to_f64().abs() <= 0.0 || w.im.ln_abs() < w.re.ln_abs() - 30.0);
    }

    #[test]
    fn sqrt_and_powi() {
        let x = er(1.5, 1001);
        let r = x.sqrt().unwrap();
        assert!(((r * r).ln().unwrap() - x.ln().unwrap()).abs() < 1e-12);
        let p = er(1.5, 3).powi(5).unwrap();
        assert!((p.to_f64() - 12f64.powi(5)).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn round_trip_through_f64(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            prop_assert_eq!(ExtendedReal::from_f64(x).to_f64(), x);
        }

        #[test]
        fn ln_exp_round_trip(x in -1.0e6f64..1.0e6) {
            let y = ExtendedReal::exp(x).unwrap().ln().unwrap();
            prop_assert!((y - x).abs() <= 1e-10);
        }

        #[test]
        fn ln_of_product_is_sum_of_lns(s1 in 1.0f64..2.0, e1 in -100_000i64..100_000,
                                       s2 in 1.0f64..2.0, e2 in -100_000i64..100_000) {
            let a = er(s1, e1);
            let b = er(s2, e2);
            let lhs = (a * b).ln().unwrap();
            let rhs = a.ln().unwrap() + b.ln().unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }

        #[test]
        fn add_and_mul_commute_bitwise(s1 in -2.0f64..2.0, e1 in -200i64..200,
                                       s2 in -2.0f64..2.0, e2 in -200i64..200) {
            let a = er(s1, e1);
            let b = er(s2, e2);
            let ab = a + b;
            let ba = b + a;
            prop_assert_eq!(ab.significand().to_bits(), ba.significand().to_bits());
            prop_assert_eq!(ab.exponent(), ba.exponent());
            let ab = a * b;
            let ba = b * a;
            prop_assert_eq!(ab.significand().to_bits(), ba.significand().to_bits());
            prop_assert_eq!(ab.exponent(), ba.exponent());
        }

        #[test]
        fn normalized_invariant(s in -1.0e300f64..1.0e300, e in -1000i64..1000) {
            let x = er(s, e);
            if s == 0.0 {
                prop_assert_eq!(x.exponent(), 0);
            } else {
                prop_assert!((1.0..2.0).contains(&x.significand().abs()));
            }
        }
    }
}
