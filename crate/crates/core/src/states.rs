//! State codes, the default 50-state universe, county counts, NOAA climate
//! regions and the contiguous-border list.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Two-letter upper-case state code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateCode([u8; 2]);

impl StateCode {
    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("ascii")
    }
}

impl FromStr for StateCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.trim().as_bytes();
        if b.len() == 2 && b.iter().all(u8::is_ascii_alphabetic) {
            Ok(Self([b[0].to_ascii_uppercase(), b[1].to_ascii_uppercase()]))
        } else {
            Err(Error::UnknownState(s.to_string()))
        }
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for StateCode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StateCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn code(s: &str) -> StateCode {
    s.parse().expect("static state code")
}

/// Counties (or county equivalents) per state; sums to 3142.
const COUNTIES: [(&str, u32); 50] = [
    ("AK", 30), ("AL", 67), ("AR", 75), ("AZ", 15), ("CA", 58),
    ("CO", 64), ("CT", 8), ("DE", 3), ("FL", 67), ("GA", 159),
    ("HI", 5), ("IA", 99), ("ID", 44), ("IL", 102), ("IN", 92),
    ("KS", 105), ("KY", 120), ("LA", 64), ("MA", 14), ("MD", 24),
    ("ME", 16), ("MI", 83), ("MN", 87), ("MO", 115), ("MS", 82),
    ("MT", 56), ("NC", 100), ("ND", 53), ("NE", 93), ("NH", 10),
    ("NJ", 21), ("NM", 33), ("NV", 17), ("NY", 62), ("OH", 88),
    ("OK", 77), ("OR", 36), ("PA", 67), ("RI", 5), ("SC", 46),
    ("SD", 66), ("TN", 95), ("TX", 254), ("UT", 29), ("VA", 133),
    ("VT", 14), ("WA", 39), ("WI", 72), ("WV", 55), ("WY", 23),
];

/// The 50 states in lexicographic order.
pub fn default_universe() -> Vec<StateCode> {
    COUNTIES.iter().map(|(s, _)| code(s)).collect()
}

pub fn default_county_counts() -> BTreeMap<StateCode, u32> {
    COUNTIES.iter().map(|&(s, n)| (code(s), n)).collect()
}

/// NOAA U.S. climate regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    NE,
    SE,
    S,
    UMW,
    OV,
    NP,
    SW,
    W,
    NW,
}

impl Region {
    pub const ALL: [Region; 9] = [
        Region::NE,
        Region::SE,
        Region::S,
        Region::UMW,
        Region::OV,
        Region::NP,
        Region::SW,
        Region::W,
        Region::NW,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Region::NE => "NE",
            Region::SE => "SE",
            Region::S => "S",
            Region::UMW => "UMW",
            Region::OV => "OV",
            Region::NP => "NP",
            Region::SW => "SW",
            Region::W => "W",
            Region::NW => "NW",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        Region::ALL
            .into_iter()
            .find(|r| r.code() == up)
            .ok_or_else(|| Error::UnknownRegion(s.to_string()))
    }
}

const NOAA_REGIONS: [(Region, &[&str]); 9] = [
    (Region::NE, &["CT", "DE", "MA", "MD", "ME", "NH", "NJ", "NY", "PA", "RI", "VT"]),
    (Region::SE, &["AL", "FL", "GA", "NC", "SC", "VA"]),
    (Region::S, &["AR", "KS", "LA", "MS", "OK", "TX"]),
    (Region::UMW, &["IA", "MI", "MN", "WI"]),
    (Region::OV, &["IL", "IN", "KY", "MO", "OH", "TN", "WV"]),
    (Region::NP, &["MT", "ND", "NE", "SD", "WY"]),
    (Region::SW, &["AZ", "CO", "NM", "UT"]),
    (Region::W, &["CA", "NV"]),
    (Region::NW, &["ID", "OR", "WA"]),
];

/// State to climate-region association. States absent from the map are
/// unassigned (AK and HI in the default map) but remain in the model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegionMap {
    assignment: BTreeMap<StateCode, Region>,
}

impl RegionMap {
    pub fn noaa() -> Self {
        let assignment = NOAA_REGIONS
            .iter()
            .flat_map(|(r, members)| members.iter().map(move |s| (code(s), *r)))
            .collect();
        Self { assignment }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (StateCode, Region)>) -> Self {
        Self {
            assignment: pairs.into_iter().collect(),
        }
    }

    pub fn region_of(&self, state: &StateCode) -> Option<Region> {
        self.assignment.get(state).copied()
    }

    /// Positions in `labels` of the members of `region`.
    pub fn member_indices(&self, region: Region, labels: &[StateCode]) -> Vec<usize> {
        labels
            .iter()
            .enumerate()
            .filter(|(_, s)| self.region_of(s) == Some(region))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.len()
    }
}

const NEIGHBORS: [(&str, &[&str]); 48] = [
    ("AL", &["FL", "GA", "MS", "TN"]),
    ("AR", &["LA", "MO", "MS", "OK", "TN", "TX"]),
    ("AZ", &["CA", "NM", "NV", "UT"]),
    ("CA", &["AZ", "NV", "OR"]),
    ("CO", &["KS", "NE", "NM", "OK", "UT", "WY"]),
    ("CT", &["MA", "NY", "RI"]),
    ("DE", &["MD", "NJ", "PA"]),
    ("FL", &["AL", "GA"]),
    ("GA", &["AL", "FL", "NC", "SC", "TN"]),
    ("IA", &["IL", "MN", "MO", "NE", "SD", "WI"]),
    ("ID", &["MT", "NV", "OR", "UT", "WA", "WY"]),
    ("IL", &["IA", "IN", "KY", "MO", "WI"]),
    ("IN", &["IL", "KY", "MI", "OH"]),
    ("KS", &["CO", "MO", "NE", "OK"]),
    ("KY", &["IL", "IN", "MO", "OH", "TN", "VA", "WV"]),
    ("LA", &["AR", "MS", "TX"]),
    ("MA", &["CT", "NH", "NY", "RI", "VT"]),
    ("MD", &["DE", "PA", "VA", "WV"]),
    ("ME", &["NH"]),
    ("MI", &["IN", "OH", "WI"]),
    ("MN", &["IA", "ND", "SD", "WI"]),
    ("MO", &["AR", "IA", "IL", "KS", "KY", "NE", "OK", "TN"]),
    ("MS", &["AL", "AR", "LA", "TN"]),
    ("MT", &["ID", "ND", "SD", "WY"]),
    ("NC", &["GA", "SC", "TN", "VA"]),
    ("ND", &["MN", "MT", "SD"]),
    ("NE", &["CO", "IA", "KS", "MO", "SD", "WY"]),
    ("NH", &["MA", "ME", "VT"]),
    ("NJ", &["DE", "NY", "PA"]),
    ("NM", &["AZ", "CO", "OK", "TX"]),
    ("NV", &["AZ", "CA", "ID", "OR", "UT"]),
    ("NY", &["CT", "MA", "NJ", "PA", "VT"]),
    ("OH", &["IN", "KY", "MI", "PA", "WV"]),
    ("OK", &["AR", "CO", "KS", "MO", "NM", "TX"]),
    ("OR", &["CA", "ID", "NV", "WA"]),
    ("PA", &["DE", "MD", "NJ", "NY", "OH", "WV"]),
    ("RI", &["CT", "MA"]),
    ("SC", &["GA", "NC"]),
    ("SD", &["IA", "MN", "MT", "ND", "NE", "WY"]),
    ("TN", &["AL", "AR", "GA", "KY", "MO", "MS", "NC", "VA"]),
    ("TX", &["AR", "LA", "NM", "OK"]),
    ("UT", &["AZ", "CO", "ID", "NV", "WY"]),
    ("VA", &["KY", "MD", "NC", "TN", "WV"]),
    ("VT", &["MA", "NH", "NY"]),
    ("WA", &["ID", "OR"]),
    ("WI", &["IA", "IL", "MI", "MN"]),
    ("WV", &["KY", "MD", "OH", "PA", "VA"]),
    ("WY", &["CO", "ID", "MT", "NE", "SD", "UT"]),
];

/// Unordered land-border pairs among the 48 contiguous states (shared edges
/// only; Four Corners point contacts are excluded).
pub fn contiguous_borders() -> Vec<(StateCode, StateCode)> {
    let mut pairs = Vec::new();
    for (s, ns) in NEIGHBORS.iter() {
        for n in ns.iter() {
            if s < n {
                pairs.push((code(s), code(n)));
            }
        }
    }
    pairs
}

/// Default partners for non-contiguous states under adjacency weights.
pub fn default_island_fallback() -> BTreeMap<StateCode, StateCode> {
    [("AK", "WA"), ("HI", "CA")]
        .into_iter()
        .map(|(a, b)| (code(a), code(b)))
        .collect()
}
