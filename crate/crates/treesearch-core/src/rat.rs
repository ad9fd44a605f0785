//! Arbitrary-precision rational scalars and their text form.
//!
//! All lengths, offsets, masses and times in this crate are `Rat` values.
//! The classification predicates are equality-sensitive, so nothing is
//! ever rounded; text output is the canonical reduced `p/q` (or `p` when
//! the denominator is one).

use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Shorthand for a rational from machine integers.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `p`, `-p/q` or `p/q` into a reduced rational.
pub fn parse_rat(text: &str) -> Result<Rat> {
    let s = text.trim();
    let bad = || Error::Parse(format!("invalid rational `{s}`"));
    let (num_s, den_s) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let numer: BigInt = num_s.trim().parse().map_err(|_| bad())?;
    let denom: BigInt = den_s.trim().parse().map_err(|_| bad())?;
    if denom.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(numer, denom))
}

/// Canonical reduced text form: `p/q`, or `p` when `q == 1`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal approximation for report columns; exact output stays `p/q`.
pub fn approx(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_nonneg(r: &Rat) -> bool {
    !r.is_negative()
}
