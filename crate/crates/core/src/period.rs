//! Reporting periods: calendar quarters, halves and years, half-open in UTC.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::common::Timestamp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PeriodKind {
    Quarter(u8),
    Half(u8),
    Year,
}

/// A calendar period `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period {
    pub year: i32,
    pub kind: PeriodKind,
}

fn month_start(year: i32, month: u32) -> Timestamp {
    let (y, m) = if month > 12 { (year + 1, month - 12) } else { (year, month) };
    Utc.from_utc_datetime(
        &NaiveDate::from_ymd_opt(y, m, 1)
            .expect("valid month")
            .and_hms_opt(0, 0, 0)
            .expect("midnight"),
    )
}

impl Period {
    pub fn quarter(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::validation("period", format!("quarter {quarter} out of 1..=4")));
        }
        Ok(Period { year, kind: PeriodKind::Quarter(quarter) })
    }

    pub fn half(year: i32, half: u8) -> Result<Self> {
        if !(1..=2).contains(&half) {
            return Err(Error::validation("period", format!("half {half} out of 1..=2")));
        }
        Ok(Period { year, kind: PeriodKind::Half(half) })
    }

    pub fn year(year: i32) -> Self {
        Period { year, kind: PeriodKind::Year }
    }

    /// The quarter containing `ts`.
    pub fn quarter_of(ts: Timestamp) -> Self {
        let q = ((ts.month() - 1) / 3 + 1) as u8;
        Period { year: ts.year(), kind: PeriodKind::Quarter(q) }
    }

    fn month_span(&self) -> (u32, u32) {
        match self.kind {
            PeriodKind::Quarter(q) => {
                let first = 3 * (q as u32 - 1) + 1;
                (first, first + 3)
            }
            PeriodKind::Half(h) => {
                let first = 6 * (h as u32 - 1) + 1;
                (first, first + 6)
            }
            PeriodKind::Year => (1, 13),
        }
    }

    pub fn start(&self) -> Timestamp {
        month_start(self.year, self.month_span().0)
    }

    pub fn end(&self) -> Timestamp {
        month_start(self.year, self.month_span().1)
    }

    pub fn contains(&self, ts: Timestamp) -> bool {
        self.start() <= ts && ts < self.end()
    }

    pub fn is_quarter(&self) -> bool {
        matches!(self.kind, PeriodKind::Quarter(_))
    }

    pub fn is_half(&self) -> bool {
        matches!(self.kind, PeriodKind::Half(_))
    }

    /// The period of the same kind that starts where this one ends.
    pub fn successor(&self) -> Period {
        match self.kind {
            PeriodKind::Quarter(4) => Period { year: self.year + 1, kind: PeriodKind::Quarter(1) },
            PeriodKind::Quarter(q) => Period { year: self.year, kind: PeriodKind::Quarter(q + 1) },
            PeriodKind::Half(2) => Period { year: self.year + 1, kind: PeriodKind::Half(1) },
            PeriodKind::Half(h) => Period { year: self.year, kind: PeriodKind::Half(h + 1) },
            PeriodKind::Year => Period::year(self.year + 1),
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PeriodKind::Quarter(q) => write!(f, "{}Q{}", self.year, q),
            PeriodKind::Half(h) => write!(f, "{}H{}", self.year, h),
            PeriodKind::Year => write!(f, "{}", self.year),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Accepts `2016Q3`, `2016H1` or `2016`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::validation("period", format!("expected YYYY, YYYYQn or YYYYHn, got {s:?}"));
        if s.len() < 4 || !s.is_char_boundary(4) {
            return Err(bad());
        }
        let (year_text, rest) = s.split_at(4);
        let year: i32 = year_text.parse().map_err(|_| bad())?;
        if rest.is_empty() {
            return Ok(Period::year(year));
        }
        let (tag, num) = rest.split_at(1);
        let n: u8 = num.parse().map_err(|_| bad())?;
        match tag {
            "Q" | "q" => Period::quarter(year, n),
            "H" | "h" => Period::half(year, n),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
