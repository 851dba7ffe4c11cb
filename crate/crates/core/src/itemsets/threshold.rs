use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum support as a fraction of the transaction count, held as an exact
/// rational so `absolute` never suffers from binary rounding (`0.1 * 10`
/// must be 1, not 2).
///
/// An itemset is frequent in a database of `D` transactions when its count
/// is at least `max(1, ceil(fraction * D))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SupportThreshold {
    fraction: Ratio<i64>,
}

impl SupportThreshold {
    /// Builds a threshold from a float, reading it back as the shortest
    /// decimal that round-trips (so `0.6` means exactly 3/5).
    pub fn new(fraction: f64) -> Result<Self> {
        if !fraction.is_finite() {
            return Err(invalid(fraction));
        }
        let ratio = parse_decimal(&format!("{fraction}"))
            .or_else(|| Ratio::approximate_float(fraction))
            .ok_or_else(|| invalid(fraction))?;
        Self::from_ratio(*ratio.numer(), *ratio.denom())
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidInput("support denominator is zero".into()));
        }
        let fraction = Ratio::new(numer, denom);
        if fraction <= Ratio::from_integer(0) || fraction > Ratio::from_integer(1) {
            return Err(Error::InvalidInput(format!(
                "support must lie in (0, 1], got {numer}/{denom}"
            )));
        }
        Ok(SupportThreshold { fraction })
    }

    pub fn fraction(&self) -> Ratio<i64> {
        self.fraction
    }

    pub fn as_f64(&self) -> f64 {
        self.fraction.to_f64().unwrap_or(f64::NAN)
    }

    /// Minimum count for a database with `count` transactions.
    pub fn absolute(&self, count: usize) -> u64 {
        let n = i128::from(*self.fraction.numer()) * count as i128;
        let d = i128::from(*self.fraction.denom());
        let ceil = (n + d - 1) / d;
        (ceil as u64).max(1)
    }
}

fn invalid(fraction: f64) -> Error {
    Error::InvalidInput(format!("support must lie in (0, 1], got {fraction}"))
}

fn parse_decimal(s: &str) -> Option<Ratio<i64>> {
    let s = s.trim();
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let frac = frac.trim_end_matches('0');
    if frac.len() > 18 {
        return None;
    }
    let denom = 10i64.checked_pow(frac.len() as u32)?;
    let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_val: i64 = if frac.is_empty() {
        0
    } else {
        frac.parse().ok()?
    };
    let numer = int.checked_mul(denom)?.checked_add(frac_val)?;
    Some(Ratio::new(numer, denom))
}

impl FromStr for SupportThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ratio = parse_decimal(s)
            .ok_or_else(|| Error::InvalidInput(format!("cannot parse support {s:?}")))?;
        Self::from_ratio(*ratio.numer(), *ratio.denom())
    }
}

impl TryFrom<f64> for SupportThreshold {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        SupportThreshold::new(value)
    }
}

impl From<SupportThreshold> for f64 {
    fn from(s: SupportThreshold) -> f64 {
        s.as_f64()
    }
}

impl fmt::Display for SupportThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}
