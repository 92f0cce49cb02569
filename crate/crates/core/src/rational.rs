//! Helpers for arbitrary-precision rationals.
//!
//! All exact computation in this crate runs on [`num::BigRational`]. The
//! helpers here cover the two places the stock type needs assistance:
//! conversion to `f64` for rationals whose numerator or denominator exceeds
//! the `f64` range, and the canonical `"p/q"` text form used by the CLI.

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::{One, Zero};
use std::str::FromStr;

/// Shorthand for a rational from two machine integers.
pub fn ratio_i64(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Shorthand for an integral rational.
pub fn ratio_u64(value: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

/// Converts a big rational to `f64` without overflowing on huge components.
///
/// The quotient is formed after shifting numerator and denominator so that
/// roughly 64 significant bits survive, then rescaled by the tracked power of
/// two. Relative error is a few ulps regardless of the operand sizes.
pub fn ratio_to_f64(value: &BigRational) -> f64 {
    if value.is_zero() {
        return 0.0;
    }
    let numer = value.numer();
    let denom = value.denom();
    let nbits = numer.bits() as i64;
    let dbits = denom.bits() as i64;
    // Aim for a 64-bit integer quotient: scale = dbits + 64 - nbits.
    let scale = dbits + 64 - nbits;
    let quotient = if scale >= 0 {
        (numer << scale as u64) / denom
    } else {
        numer / (denom << (-scale) as u64)
    };
    let (sign, digits) = quotient.to_u64_digits();
    let mut mantissa = 0.0f64;
    for (i, d) in digits.iter().enumerate() {
        mantissa += (*d as f64) * (2.0f64).powi(64 * i as i32);
    }
    if sign == Sign::Minus {
        mantissa = -mantissa;
    }
    mantissa * (2.0f64).powi(-scale as i32)
}

/// Formats a rational as `p/q` in lowest terms, or plain `p` for integers.
pub fn format_ratio(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Parses the `p` / `p/q` forms produced by [`format_ratio`].
pub fn parse_ratio(text: &str) -> Option<BigRational> {
    let mut parts = text.splitn(2, '/');
    let numer = BigInt::from_str(parts.next()?.trim()).ok()?;
    match parts.next() {
        None => Some(BigRational::from_integer(numer)),
        Some(d) => {
            let denom = BigInt::from_str(d.trim()).ok()?;
            if denom.is_zero() {
                None
            } else {
                Some(BigRational::new(numer, denom))
            }
        }
    }
}

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}
