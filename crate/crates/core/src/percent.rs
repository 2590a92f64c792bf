//! Exact percentage arithmetic.
//!
//! Every reported percentage is `count / total * 100` rounded half-up to a
//! fixed number of decimals. Integer arithmetic only, so a printed figure
//! can be checked against its counts exactly.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// `count / total * 100`, scaled by `10^decimals` and rounded half-up.
/// An empty total yields zero.
pub fn scaled_percent(count: u64, total: u64, decimals: u32) -> u128 {
    if total == 0 {
        return 0;
    }
    let scale = 100u128 * 10u128.pow(decimals);
    let num = 2 * u128::from(count) * scale + u128::from(total);
    num / (2 * u128::from(total))
}

fn format_scaled(value: i128, decimals: u32) -> String {
    if decimals == 0 {
        return format!("{value}");
    }
    let unit = 10i128.pow(decimals);
    let sign = if value < 0 { "-" } else { "" };
    let abs = value.abs();
    format!(
        "{sign}{}.{:0width$}",
        abs / unit,
        abs % unit,
        width = decimals as usize
    )
}

/// A percentage with two decimals, stored in hundredths of a percent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent(u32);

impl Percent {
    pub const ZERO: Percent = Percent(0);

    pub fn of(count: u64, total: u64) -> Percent {
        Percent(scaled_percent(count, total, 2) as u32)
    }

    pub fn from_hundredths(hundredths: u32) -> Percent {
        Percent(hundredths)
    }

    pub fn hundredths(self) -> u32 {
        self.0
    }

    /// Signed difference in hundredths, `self - earlier`.
    pub fn delta(self, earlier: Percent) -> i64 {
        i64::from(self.0) - i64::from(earlier.0)
    }

    /// Formats a hundredths delta the way percentages are printed.
    pub fn format_delta(delta: i64) -> String {
        format_scaled(i128::from(delta), 2)
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", format_scaled(i128::from(self.0), 2))
    }
}

impl FromStr for Percent {
    type Err = Error;

    /// Parses `76.22`, `76.22%` or `76.2` (missing decimals are zero).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Invalid(format!("not a percentage: {s:?}"));
        let body = s.trim().trim_end_matches('%');
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if frac.len() > 2 || int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u32 = int.parse().map_err(|_| bad())?;
        let mut frac_val: u32 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        if frac.len() == 1 {
            frac_val *= 10;
        }
        Ok(Percent(int * 100 + frac_val))
    }
}

impl Serialize for Percent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&format_scaled(i128::from(self.0), 2))
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// An exact fraction, kept as counts so aggregates stay comparable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn new(numerator: u64, denominator: u64) -> Ratio {
        Ratio {
            numerator,
            denominator,
        }
    }

    /// `None` when the denominator is zero.
    pub fn value(self) -> Option<f64> {
        (self.denominator != 0).then(|| self.numerator as f64 / self.denominator as f64)
    }

    pub fn percent(self) -> Percent {
        Percent::of(self.numerator, self.denominator)
    }

    /// Percentage with `decimals` places, e.g. `78.1%`. `None` when undefined.
    pub fn percent_string(self, decimals: u32) -> Option<String> {
        (self.denominator != 0).then(|| {
            let scaled = scaled_percent(self.numerator, self.denominator, decimals);
            format!("{}%", format_scaled(scaled as i128, decimals))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn rounds_half_up() {
        assert_eq!(Percent::of(1, 8).to_string(), "12.50%");
        // 1/3 = 33.333..
        assert_eq!(Percent::of(1, 3).to_string(), "33.33%");
        // 2/3 = 66.666..
        assert_eq!(Percent::of(2, 3).to_string(), "66.67%");
        // exactly x.xx5 goes up: 1/16 = 6.25, 1/32 = 3.125
        assert_eq!(Percent::of(1, 32).to_string(), "3.13%");
        assert_eq!(Percent::of(0, 0).to_string(), "0.00%");
    }

    #[test]
    fn published_triples() {
        assert_eq!(Percent::of(402_249, 527_774).to_string(), "76.22%");
        assert_eq!(Percent::of(35_619, 914_974).to_string(), "3.89%");
        assert_eq!(Percent::of(129_691, 514_992).to_string(), "25.18%");
    }

    #[test]
    fn one_decimal_rendering() {
        assert_eq!(Ratio::new(40_245, 135_147).percent_string(1).unwrap(), "29.8%");
        assert_eq!(Ratio::new(3, 10).percent_string(1).unwrap(), "30.0%");
        assert_eq!(Ratio::new(0, 0).percent_string(1), None);
    }

    #[test]
    fn parse_and_delta() {
        let a: Percent = "19.24%".parse().unwrap();
        let b: Percent = "6.22".parse().unwrap();
        assert_eq!(Percent::format_delta(a.delta(b)), "13.02");
        assert_eq!(Percent::format_delta(b.delta(a)), "-13.02");
        assert_eq!("1.6".parse::<Percent>().unwrap(), Percent::from_hundredths(160));
        assert!("1.234".parse::<Percent>().is_err());
        assert!("abc".parse::<Percent>().is_err());
    }
}
