//! Exact fixed-point distances.
//!
//! All edge weights and distance estimates are multiples of 1e-6. Keeping
//! them as scaled integers makes every sketch accumulator exactly linear:
//! feeding `+e` then `-e` restores the accumulator bit-for-bit, which the
//! turnstile machinery relies on. Floating point is used only for range
//! endpoints `(1+zeta')^j`, never for stored weights.

use crate::error::{Error, Result};
use std::fmt;

/// Number of decimal digits kept after the point.
pub const FRAC_DIGITS: u32 = 6;
/// Scaling factor: one weight unit equals this many ticks.
pub const SCALE: i64 = 1_000_000;

/// A non-negative distance / weight, stored as integer micro-units.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Dist(i64);

impl Dist {
    pub const ZERO: Dist = Dist(0);
    pub const ONE: Dist = Dist(SCALE);

    pub fn from_micro(micro: i64) -> Dist {
        Dist(micro)
    }

    pub fn from_int(units: i64) -> Dist {
        Dist(units * SCALE)
    }

    /// Nearest representable value; only used where exactness is not
    /// required (range thresholds, generated weights).
    pub fn from_f64_round(x: f64) -> Dist {
        Dist((x * SCALE as f64).round() as i64)
    }

    pub fn micro(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn checked_add(self, rhs: Dist) -> Option<Dist> {
        self.0.checked_add(rhs.0).map(Dist)
    }

    pub fn saturating_mul_int(self, k: i64) -> Dist {
        Dist(self.0.saturating_mul(k))
    }

    /// Parse a decimal string such as `3`, `2.5` or `0.125`.
    /// At most [`FRAC_DIGITS`] fractional digits are representable.
    pub fn parse(s: &str) -> Result<Dist> {
        let bad = |m: &str| Error::InvalidParam(format!("weight {s:?}: {m}"));
        let s = s.trim();
        if s.is_empty() {
            return Err(bad("empty"));
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if frac_part.len() > FRAC_DIGITS as usize {
            return Err(bad("more than 6 fractional digits"));
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad("no digits"));
        }
        let int_val: i64 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| bad("integer part is not a number"))?
        };
        if int_val < 0 {
            return Err(bad("negative"));
        }
        let mut frac_val: i64 = 0;
        if !frac_part.is_empty() {
            if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad("fractional part is not a number"));
            }
            frac_val = frac_part.parse().map_err(|_| bad("bad fraction"))?;
            frac_val *= 10_i64.pow(FRAC_DIGITS - frac_part.len() as u32);
        }
        int_val
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac_val))
            .map(Dist)
            .ok_or_else(|| bad("overflow"))
    }
}

impl std::ops::Add for Dist {
    type Output = Dist;
    fn add(self, rhs: Dist) -> Dist {
        Dist(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Dist {
    type Output = Dist;
    fn sub(self, rhs: Dist) -> Dist {
        Dist(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Dist {
    fn sum<I: Iterator<Item = Dist>>(iter: I) -> Dist {
        Dist(iter.map(|d| d.0).sum())
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let int = self.0 / SCALE;
        let frac = (self.0 % SCALE).unsigned_abs();
        if frac == 0 {
            write!(f, "{int}")
        } else {
            let mut s = format!("{frac:06}");
            while s.ends_with('0') {
                s.pop();
            }
            write!(f, "{int}.{s}")
        }
    }
}

impl fmt::Debug for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dist({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["1", "2.5", "0.125", "31", "1.000001"] {
            let d = Dist::parse(s).unwrap();
            assert_eq!(d.to_string(), s);
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["", ".", "-3", "1.2345678", "abc", "1.2e3"] {
            assert!(Dist::parse(s).is_err(), "{s:?} should not parse");
        }
    }

    #[test]
    fn exact_addition() {
        let a = Dist::parse("2.5").unwrap();
        let b = Dist::parse("0.000001").unwrap();
        assert_eq!((a + b).to_string(), "2.500001");
        assert_eq!((a + b - b), a);
    }
}
