//! Exact rational quantities for SLA arithmetic.
//!
//! All comparisons against thresholds happen on `Ratio<i64>`. JSON output
//! renders values as plain numbers; input numbers are read through their
//! shortest decimal form so `0.3` means exactly 3/10.

use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = Ratio<i64>;

/// Parses a plain decimal (`"99.6"`, `"-0.25"`, `"4"`) into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let scale = 10i64.checked_pow(frac_part.len() as u32)?;
    let int_value: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac_value: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let numer = int_value.checked_mul(scale)?.checked_add(frac_value)?;
    let value = Rational::new(numer, scale);
    Some(if negative { -value } else { value })
}

/// Exact value of a float's shortest round-trip decimal rendering.
pub fn from_f64(value: f64) -> Option<Rational> {
    if !value.is_finite() {
        return None;
    }
    let text = format!("{value}");
    if text.contains('e') {
        return Ratio::from_float(value).and_then(|r| {
            Some(Rational::new(r.numer().to_i64()?, r.denom().to_i64()?))
        });
    }
    parse_decimal(&text)
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `numer / denom`, or `None` when the denominator is zero.
pub fn ratio(numer: u64, denom: u64) -> Option<Rational> {
    if denom == 0 {
        None
    } else {
        Some(Rational::new(numer as i64, denom as i64))
    }
}

/// A percentage held exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent(pub Rational);

impl Percent {
    pub const HUNDRED: Percent = Percent(Ratio::new_raw(100, 1));

    pub fn new(value: Rational) -> Self {
        Percent(value)
    }

    pub fn from_integer(value: i64) -> Self {
        Percent(Rational::from_integer(value))
    }

    /// `100 × part / whole`; an empty whole is vacuously 100%.
    pub fn of(part: u64, whole: u64) -> Self {
        if whole == 0 {
            return Percent::HUNDRED;
        }
        Percent(Rational::new(100 * part as i64, whole as i64))
    }

    pub fn parse(text: &str) -> Option<Self> {
        parse_decimal(text).map(Percent)
    }

    pub fn value(&self) -> Rational {
        self.0
    }

    pub fn complement(&self) -> Percent {
        Percent(Rational::from_integer(100) - self.0)
    }

    pub fn as_f64(&self) -> f64 {
        to_f64(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}%", self.0.numer())
        } else {
            write!(f, "{}%", self.as_f64())
        }
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        from_f64(value)
            .map(Percent)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid percentage {value}")))
    }
}

/// Serializes a rational as a JSON number.
pub mod as_number {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(to_f64(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let value = f64::deserialize(deserializer)?;
        from_f64(value).ok_or_else(|| serde::de::Error::custom(format!("invalid number {value}")))
    }
}

/// Same as [`as_number`] for optional values.
pub mod opt_number {
    use super::*;

    pub fn serialize<S: Serializer>(
        value: &Option<Rational>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serializer.serialize_some(&to_f64(v)),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Option<Rational>, D::Error> {
        let value = Option::<f64>::deserialize(deserializer)?;
        value
            .map(|v| from_f64(v).ok_or_else(|| serde::de::Error::custom("invalid number")))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_decimal("99.6"), Some(Rational::new(996, 10)));
        assert_eq!(parse_decimal("0.3"), Some(Rational::new(3, 10)));
        assert_eq!(parse_decimal("-1.25"), Some(Rational::new(-5, 4)));
        assert_eq!(parse_decimal("7"), Some(Rational::from_integer(7)));
        assert_eq!(parse_decimal(".5"), Some(Rational::new(1, 2)));
        assert_eq!(parse_decimal("1.2.3"), None);
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("abc"), None);
    }

    #[test]
    fn floats_go_through_shortest_decimal() {
        assert_eq!(from_f64(0.3), Some(Rational::new(3, 10)));
        assert_eq!(from_f64(1.0), Some(Rational::from_integer(1)));
        assert_eq!(from_f64(f64::NAN), None);
    }

    #[test]
    fn percent_of_empty_whole_is_hundred() {
        assert_eq!(Percent::of(0, 0), Percent::HUNDRED);
        assert_eq!(Percent::of(47, 50), Percent::new(Rational::from_integer(94)));
        assert_eq!(Percent::of(0, 10), Percent::from_integer(0));
        assert_eq!(
            Percent::of(39, 40).complement(),
            Percent::new(Rational::new(5, 2))
        );
    }

    #[test]
    fn percent_json_is_a_number() {
        let p = Percent::parse("99.2").unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "99.2");
        let back: Percent = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
