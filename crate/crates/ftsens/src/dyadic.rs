//! Exact base-2 rational arithmetic.
//!
//! A [`Dyadic`] is `mantissa * 2^exponent` with an arbitrary-precision
//! mantissa. Addition, subtraction, multiplication, comparison, min/max
//! are all closed and never round. This is the value carrier for every
//! exact computation on the shift and the linear torus systems.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::GeometryError;

/// Exact dyadic rational `mantissa * 2^exponent`.
///
/// Canonical form: the mantissa is odd, or zero (in which case the
/// exponent is zero too).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mantissa: BigInt::zero(), exponent: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mantissa: BigInt::from(1), exponent: 0 }
    }

    pub fn half() -> Self {
        Dyadic { mantissa: BigInt::from(1), exponent: -1 }
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        Dyadic { mantissa: BigInt::from(1), exponent: k }
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic { mantissa: BigInt::from(n), exponent: 0 }.normalized()
    }

    /// `num / 2^den_log2`.
    pub fn from_ratio(num: i64, den_log2: u32) -> Self {
        Dyadic { mantissa: BigInt::from(num), exponent: -(den_log2 as i64) }.normalized()
    }

    pub fn from_bigint(mantissa: BigInt, exponent: i64) -> Self {
        Dyadic { mantissa, exponent }.normalized()
    }

    /// Exact conversion: every finite f64 is a dyadic rational.
    pub fn from_f64(x: f64) -> Result<Self, GeometryError> {
        if !x.is_finite() {
            return Err(GeometryError::NotRepresentable(format!("{x} is not finite")));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Ok(Dyadic { mantissa: BigInt::from(sign) * BigInt::from(mant), exponent: exp }.normalized())
    }

    /// Parse `"p"`, `"p/q"` (q a power of two) or the Display form
    /// `"p/2^k"`.
    pub fn parse_fraction(s: &str) -> Result<Self, GeometryError> {
        let s = s.trim();
        let bad = |m: &str| GeometryError::NotRepresentable(format!("`{s}`: {m}"));
        if let Some((p, k)) = s.split_once("/2^") {
            let p: i64 = p.trim().parse().map_err(|_| bad("bad numerator"))?;
            let k: i64 = k.trim().parse().map_err(|_| bad("bad exponent"))?;
            return Ok(Self::from_bigint(BigInt::from(p), -k));
        }
        match s.split_once('/') {
            None => {
                let n: i64 = s.parse().map_err(|_| bad("not an integer or p/q fraction"))?;
                Ok(Self::from_int(n))
            }
            Some((p, q)) => {
                let p: i64 = p.trim().parse().map_err(|_| bad("bad numerator"))?;
                let q: u64 = q.trim().parse().map_err(|_| bad("bad denominator"))?;
                if q == 0 || !q.is_power_of_two() {
                    return Err(bad("denominator must be a power of two"));
                }
                Ok(Self::from_ratio(p, q.trailing_zeros()))
            }
        }
    }

    fn normalized(mut self) -> Self {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return self;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mantissa >>= tz;
            self.exponent += tz as i64;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn sign(&self) -> i32 {
        if self.mantissa.is_zero() {
            0
        } else if self.mantissa.is_negative() {
            -1
        } else {
            1
        }
    }

    /// Scale by `2^k` (exact, O(1)).
    pub fn ldexp(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Dyadic { mantissa: self.mantissa.clone(), exponent: self.exponent + k }
    }

    pub fn abs(&self) -> Self {
        Dyadic { mantissa: self.mantissa.abs(), exponent: self.exponent }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn clamp01(&self) -> Self {
        if self.sign() < 0 {
            Self::zero()
        } else if *self > Self::one() {
            Self::one()
        } else {
            self.clone()
        }
    }

    /// Exact midpoint `(a + b) / 2`.
    pub fn midpoint(a: &Self, b: &Self) -> Self {
        (a + b).ldexp(-1)
    }

    /// Approximate value; display and sampled-path interop only.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        // Reduce precision first so huge mantissas do not overflow the
        // intermediate conversion.
        let bits = self.mantissa.bits() as i64;
        if bits > 64 {
            let shift = bits - 64;
            let m: BigInt = &self.mantissa >> shift;
            to_f64_small(&m) * exp2_i64(self.exponent + shift)
        } else {
            to_f64_small(&self.mantissa) * exp2_i64(self.exponent)
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    /// `floor(log2(|self|))`; None for zero.
    pub fn log2_floor(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exponent + self.mantissa.bits() as i64 - 1)
        }
    }
}

fn to_f64_small(m: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    m.to_f64().unwrap_or(0.0)
}

fn exp2_i64(e: i64) -> f64 {
    if e < -1100 {
        0.0
    } else if e > 1100 {
        f64::INFINITY
    } else {
        (e as f64).exp2()
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let sa = self.sign();
        let sb = other.sign();
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        // Same nonzero sign: align exponents and compare mantissas.
        let e = self.exponent.min(other.exponent);
        let ma: BigInt = &self.mantissa << (self.exponent - e) as u64;
        let mb: BigInt = &other.mantissa << (other.exponent - e) as u64;
        ma.cmp(&mb)
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(rhs.exponent);
        let ma: BigInt = &self.mantissa << (self.exponent - e) as u64;
        let mb: BigInt = &rhs.mantissa << (rhs.exponent - e) as u64;
        Dyadic { mantissa: ma + mb, exponent: e }.normalized()
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic {
            mantissa: &self.mantissa * &rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
        .normalized()
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mantissa: -&self.mantissa, exponent: self.exponent }
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Dyadic {
    /// Reduced fraction: `m` when integral, `m/2^k` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent >= 0 {
            write!(f, "{}", &self.mantissa << self.exponent as u64)
        } else {
            write!(f, "{}/2^{}", self.mantissa, -self.exponent)
        }
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        // `m/2^k` (Display form), `p/q` with q a power of two, or an integer
        let parse = |s: &str| -> Option<Dyadic> {
            match s.split_once("/2^") {
                None => Dyadic::parse_fraction(s).ok(),
                Some((m, k)) => {
                    let m = m.parse::<BigInt>().ok()?;
                    let k = k.parse::<i64>().ok()?;
                    Some(Dyadic::from_bigint(m, -k))
                }
            }
        };
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad dyadic `{s}`")))
    }
}
