//! Exact rationals and a small ring abstraction shared by the exact and the
//! floating-point code paths.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Arbitrary-precision rational.
pub type Q = BigRational;

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back to a ratio of rounded parts for huge operands.
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact rational from a finite double.
pub fn from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}

/// Parses `"3"`, `"-2/5"` or a decimal such as `"0.25"` into an exact rational.
pub fn parse_q(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
        let d: BigInt = d.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Q::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(Q::from_integer(n));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').ok_or_else(|| format!("bad number `{s}`"))?;
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || (int.is_empty() && frac.is_empty()) {
        return Err(format!("bad number `{s}`"));
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| format!("bad number `{s}`"))?;
    let den = num::pow(BigInt::from(10), frac.len());
    let v = Q::new(digits, den);
    Ok(if neg { -v } else { v })
}

/// `n!` as a machine integer; only small arguments are ever needed.
pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Commutative ring with rational constants: the scalar type of the generic
/// group law (exact rationals, doubles, and polynomials in the coordinates).
pub trait Ring:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn ring_zero() -> Self;
    fn from_q(c: &Q) -> Self;
    fn is_ring_zero(&self) -> bool;
    fn scale(&self, c: &Q) -> Self {
        self.clone() * Self::from_q(c)
    }
}

impl Ring for Q {
    fn ring_zero() -> Self {
        Zero::zero()
    }
    fn from_q(c: &Q) -> Self {
        c.clone()
    }
    fn is_ring_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Ring for f64 {
    fn ring_zero() -> Self {
        0.0
    }
    fn from_q(c: &Q) -> Self {
        to_f64(c)
    }
    fn is_ring_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Renders a rational as `n` or `n/d`.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(parse_q("3").unwrap(), qi(3));
        assert_eq!(parse_q("-2/4").unwrap(), qr(-1, 2));
        assert_eq!(parse_q("0.25").unwrap(), qr(1, 4));
        assert_eq!(parse_q("-1.5").unwrap(), qr(-3, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), 1);
        assert_eq!(factorial(4), 24);
    }
}
