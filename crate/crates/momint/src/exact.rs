//! Exact rational scalars and their JSON wire format.
//!
//! Geometry is decided in exact arithmetic; the analytic modules convert to
//! `f64` on demand. The wire format for a rational is a `[numerator,
//! denominator]` pair of integers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational scalar used throughout the geometry layer.
pub type Rat = BigRational;

/// Build a rational from an integer pair.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> Rat {
    BigRational::from(BigInt::from(num))
}

/// Convert to `f64`, falling back to a quotient of approximations for
/// operands outside the direct conversion range.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact conversion of a finite `f64` (every finite float is a rational).
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    BigRational::from_float(x).ok_or_else(|| Error::Config(format!("{x} is not a finite number")))
}

/// Euclidean remainder in `[0, p)` for `p > 0`.
pub fn rat_mod(x: &Rat, p: &Rat) -> Rat {
    let q = (x / p).floor();
    let r = x - q * p;
    debug_assert!(!r.is_negative() && &r < p);
    r
}

/// `[numerator, denominator]` JSON form of a rational.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatPair(pub i64, pub i64);

impl RatPair {
    pub fn to_rat(&self) -> Result<Rat> {
        if self.1 == 0 {
            return Err(Error::Config(format!(
                "rational [{}, {}] has a zero denominator",
                self.0, self.1
            )));
        }
        Ok(rat(self.0, self.1))
    }

    pub fn from_rat(r: &Rat) -> Result<Self> {
        let num = r
            .numer()
            .to_i64()
            .ok_or_else(|| Error::Config(format!("numerator of {r} does not fit in i64")))?;
        let den = r
            .denom()
            .to_i64()
            .ok_or_else(|| Error::Config(format!("denominator of {r} does not fit in i64")))?;
        Ok(RatPair(num, den))
    }
}

pub fn rats_from_pairs(pairs: &[RatPair]) -> Result<Vec<Rat>> {
    pairs.iter().map(RatPair::to_rat).collect()
}

pub fn pairs_from_rats(rats: &[Rat]) -> Result<Vec<RatPair>> {
    rats.iter().map(RatPair::from_rat).collect()
}

pub fn is_zero(r: &Rat) -> bool {
    r.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod_handles_negatives() {
        let p = rat(2, 1);
        assert_eq!(rat_mod(&rat(-7, 3), &p), rat(5, 3));
        assert_eq!(rat_mod(&rat(7, 3), &p), rat(1, 3));
        assert_eq!(rat_mod(&rat(4, 1), &p), rat(0, 1));
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let x = 0.1 + 0.2;
        let r = rat_from_f64(x).unwrap();
        assert_eq!(rat_to_f64(&r), x);
    }

    #[test]
    fn pair_rejects_zero_denominator() {
        assert!(RatPair(1, 0).to_rat().is_err());
    }
}
