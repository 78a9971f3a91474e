//! Monthly calendar grid and date parsing helpers.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar month. Ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::MalformedDate(format!("{year}-{month:02}")));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    /// Months since year 0, used for spacing arithmetic.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ord: i64) -> Self {
        let year = ord.div_euclid(12) as i32;
        let month = ord.rem_euclid(12) as u32 + 1;
        Self { year, month }
    }

    pub fn succ(self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    pub fn of_date(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    /// Inclusive month range `start..=end`.
    pub fn range(start: Self, end: Self) -> Vec<Self> {
        (start.ordinal()..=end.ordinal())
            .map(Self::from_ordinal)
            .collect()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Accepts `YYYY-MM`, `YYYY-MM-DD`, or an ISO timestamp; the day is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(d) = parse_date(s) {
            return Ok(Self::of_date(d));
        }
        let bad = || Error::MalformedDate(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        Self::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `YYYY-MM-DD`, also accepting a trailing `T...` time component as in
/// federal open-data exports.
pub fn parse_date(s: &str) -> Result<NaiveDate> {
    let s = s.trim();
    let day_part = match s.find('T') {
        Some(idx) => &s[..idx],
        None => s,
    };
    NaiveDate::parse_from_str(day_part, "%Y-%m-%d").map_err(|_| Error::MalformedDate(s.to_string()))
}

/// Inclusive monthly window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: YearMonth,
    pub end: YearMonth,
}

impl Window {
    pub fn new(start: YearMonth, end: YearMonth) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, ym: YearMonth) -> bool {
        self.start <= ym && ym <= self.end
    }

    pub fn months(&self) -> Vec<YearMonth> {
        if self.end < self.start {
            return Vec::new();
        }
        YearMonth::range(self.start, self.end)
    }

    pub fn len(&self) -> usize {
        (self.end.ordinal() - self.start.ordinal() + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Window {
    fn default() -> Self {
        Self {
            start: YearMonth { year: 1990, month: 1 },
            end: YearMonth { year: 2019, month: 12 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_accepted_forms() {
        let a: YearMonth = "2005-08".parse().unwrap();
        let b: YearMonth = "2005-08-29".parse().unwrap();
        let c: YearMonth = "2005-08-29T00:00:00.000Z".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert!("2005-13".parse::<YearMonth>().is_err());
        assert!("Aug 2005".parse::<YearMonth>().is_err());
    }

    #[test]
    fn ordinal_roundtrip_and_window_length() {
        let ym = YearMonth::new(1999, 12).unwrap();
        assert_eq!(ym.succ(), YearMonth::new(2000, 1).unwrap());
        assert_eq!(YearMonth::from_ordinal(ym.ordinal()), ym);
        assert_eq!(Window::default().len(), 360);
    }
}
