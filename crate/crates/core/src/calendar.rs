//! Calendar month arithmetic for monthly panels.
//!
//! Months are the natural time key of the index pipeline: EPU panels are
//! monthly, rolling windows are counted in months, and daily market data is
//! aggregated to calendar months. `Month` is a thin `(year, month)` pair with
//! ISO `YYYY-MM` text form and exact integer arithmetic, so window bookkeeping
//! (`[t - T + 1, t]`, observation counts) never goes through floating point
//! or timezone-aware date types.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A calendar month, ordered chronologically.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    year: i32,
    month: u8, // 1..=12
}

/// Error parsing a `YYYY-MM` month key.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid month `{input}`: expected YYYY-MM with month in 01..12")]
pub struct ParseMonthError {
    pub input: String,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        if (1..=12).contains(&month) {
            Some(Self {
                year,
                month: month as u8,
            })
        } else {
            None
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    /// 1-based month number.
    pub fn month(&self) -> u32 {
        self.month as u32
    }

    /// Month containing the given date.
    pub fn containing(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month() as u8,
        }
    }

    pub fn next(self) -> Self {
        self.add_months(1)
    }

    pub fn prev(self) -> Self {
        self.add_months(-1)
    }

    /// Shift by a signed number of months.
    pub fn add_months(self, offset: i32) -> Self {
        let linear = self.year as i64 * 12 + (self.month as i64 - 1) + offset as i64;
        Self {
            year: linear.div_euclid(12) as i32,
            month: (linear.rem_euclid(12) + 1) as u8,
        }
    }

    /// Signed month count from `earlier` to `self`; zero when equal.
    pub fn months_since(self, earlier: Month) -> i32 {
        (self.year - earlier.year) * 12 + (self.month as i32 - earlier.month as i32)
    }

    /// Inclusive iterator over `[self, last]`; empty when `last < self`.
    pub fn range_to(self, last: Month) -> impl Iterator<Item = Month> {
        let n = (last.months_since(self) + 1).max(0) as usize;
        (0..n).map(move |k| self.add_months(k as i32))
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

// Debug matches the ISO text form so assertion output stays readable.
impl fmt::Debug for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Month {
    type Err = ParseMonthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseMonthError {
            input: s.to_string(),
        };
        let (y, m) = s.split_once('-').ok_or_else(err)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(err());
        }
        let year: i32 = y.parse().map_err(|_| err())?;
        let month: u32 = m.parse().map_err(|_| err())?;
        Month::new(year, month).ok_or_else(err)
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Month {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["2003-01", "2018-12", "1999-06"] {
            assert_eq!(m(s).to_string(), s);
        }
        assert!("2003-13".parse::<Month>().is_err());
        assert!("2003-00".parse::<Month>().is_err());
        assert!("200301".parse::<Month>().is_err());
        assert!("2003-1".parse::<Month>().is_err());
    }

    #[test]
    fn arithmetic_crosses_year_boundaries() {
        assert_eq!(m("2003-01").add_months(23), m("2004-12"));
        assert_eq!(m("2003-01").add_months(29), m("2005-06"));
        assert_eq!(m("2003-01").add_months(47), m("2006-12"));
        assert_eq!(m("2004-01").prev(), m("2003-12"));
        assert_eq!(m("2003-12").next(), m("2004-01"));
        assert_eq!(m("2018-12").months_since(m("2003-01")), 191);
    }

    #[test]
    fn range_is_inclusive_and_ordered() {
        let months: Vec<Month> = m("2003-11").range_to(m("2004-02")).collect();
        assert_eq!(
            months,
            vec![m("2003-11"), m("2003-12"), m("2004-01"), m("2004-02")]
        );
        assert_eq!(m("2004-02").range_to(m("2004-01")).count(), 0);
    }

    #[test]
    fn containing_date() {
        let d = NaiveDate::from_ymd_opt(2010, 7, 15).unwrap();
        assert_eq!(Month::containing(d), m("2010-07"));
    }
}
