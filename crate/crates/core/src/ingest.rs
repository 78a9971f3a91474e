//! Parsing and validation of the input tables: disaster declarations,
//! bilateral trade flows, the activity panel and per-state county counts.
//!
//! Every parser returns a [`Parsed`] value carrying a rejects report, so that
//! `accepted + rejected == rows read` holds for every input.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calendar::{parse_date, Window, YearMonth};
use crate::error::{Error, Result};
use crate::states::StateCode;

/// Weather event groups used to filter declarations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventGroup {
    Winter,
    TropicalStorm,
    Storm,
    Fire,
    Flood,
    Drought,
    NonWeather,
}

impl EventGroup {
    pub const WEATHER: [EventGroup; 6] = [
        EventGroup::Winter,
        EventGroup::TropicalStorm,
        EventGroup::Storm,
        EventGroup::Fire,
        EventGroup::Flood,
        EventGroup::Drought,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventGroup::Winter => "winter",
            EventGroup::TropicalStorm => "tropical_storm",
            EventGroup::Storm => "storm",
            EventGroup::Fire => "fire",
            EventGroup::Flood => "flood",
            EventGroup::Drought => "drought",
            EventGroup::NonWeather => "non_weather",
        }
    }

    pub fn is_weather(self) -> bool {
        self != EventGroup::NonWeather
    }
}

impl fmt::Display for EventGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        [EventGroup::NonWeather]
            .into_iter()
            .chain(EventGroup::WEATHER)
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown event group `{s}`")))
    }
}

/// Raw incident label to event group mapping. Lookups are case-insensitive;
/// unmapped labels resolve to [`EventGroup::NonWeather`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    map: BTreeMap<String, EventGroup>,
}

impl Taxonomy {
    pub fn new(map: impl IntoIterator<Item = (String, EventGroup)>) -> Self {
        Self {
            map: map
                .into_iter()
                .map(|(k, v)| (k.trim().to_ascii_lowercase(), v))
                .collect(),
        }
    }

    /// Grouping of the FEMA incident vocabulary.
    pub fn fema_default() -> Self {
        use EventGroup::*;
        let pairs = [
            ("Snow", Winter),
            ("Snowstorm", Winter),
            ("Severe Ice Storm", Winter),
            ("Freezing", Winter),
            ("Winter Storm", Winter),
            ("Hurricane", TropicalStorm),
            ("Typhoon", TropicalStorm),
            ("Tornado", TropicalStorm),
            ("Tropical Storm", TropicalStorm),
            ("Tropical Depression", TropicalStorm),
            ("Coastal Storm", Storm),
            ("Severe Storm", Storm),
            ("Severe Storm(s)", Storm),
            ("Fire", Fire),
            ("Flood", Flood),
            ("Drought", Drought),
        ];
        Self::new(pairs.into_iter().map(|(k, v)| (k.to_string(), v)))
    }

    /// Adds or overrides entries.
    pub fn extend(&mut self, extra: impl IntoIterator<Item = (String, EventGroup)>) {
        for (k, v) in extra {
            self.map.insert(k.trim().to_ascii_lowercase(), v);
        }
    }

    pub fn lookup(&self, raw: &str) -> Option<EventGroup> {
        self.map.get(&raw.trim().to_ascii_lowercase()).copied()
    }

    pub fn group(&self, raw: &str) -> EventGroup {
        self.lookup(raw).unwrap_or(EventGroup::NonWeather)
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::fema_default()
    }
}

/// Counties covered by a declaration: always a count, plus the names when the
/// source lists them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountyHits {
    pub count: u32,
    pub names: Option<BTreeSet<String>>,
}

impl CountyHits {
    pub fn counted(count: u32) -> Self {
        Self { count, names: None }
    }

    pub fn listed(names: impl IntoIterator<Item = String>) -> Self {
        let names: BTreeSet<String> = names.into_iter().collect();
        Self {
            count: names.len() as u32,
            names: Some(names),
        }
    }

    fn parse(cell: &str) -> Option<Self> {
        let cell = cell.trim();
        if cell.is_empty() {
            return Some(Self::counted(0));
        }
        if let Ok(n) = cell.parse::<u32>() {
            return Some(Self::counted(n));
        }
        if cell.starts_with('-') && cell[1..].trim().parse::<u32>().is_ok() {
            return None;
        }
        Some(Self::listed(
            cell.split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        ))
    }

    fn merge(&mut self, other: &CountyHits) {
        match (&mut self.names, &other.names) {
            (Some(a), Some(b)) => {
                a.extend(b.iter().cloned());
                self.count = a.len() as u32;
            }
            _ => {
                self.names = None;
                self.count += other.count;
            }
        }
    }

    fn render(&self) -> String {
        match &self.names {
            Some(n) => n.iter().cloned().collect::<Vec<_>>().join(";"),
            None => self.count.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclarationRecord {
    pub declaration_id: String,
    pub state: StateCode,
    pub incident_type: String,
    pub group: EventGroup,
    pub begin_date: NaiveDate,
    pub end_date: Option<NaiveDate>,
    pub counties: CountyHits,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub reason: String,
}

/// Parsed value with row accounting.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: T,
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rejects: Vec<Reject>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeclarationColumns {
    pub id: String,
    pub state: String,
    pub incident_type: String,
    pub begin_date: String,
    pub end_date: Option<String>,
    pub counties: String,
}

impl Default for DeclarationColumns {
    fn default() -> Self {
        Self {
            id: "declaration_id".into(),
            state: "state".into(),
            incident_type: "incident_type".into(),
            begin_date: "begin_date".into(),
            end_date: Some("end_date".into()),
            counties: "counties".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TradeColumns {
    pub origin: String,
    pub destination: String,
    pub value: String,
}

impl Default for TradeColumns {
    fn default() -> Self {
        Self {
            origin: "origin".into(),
            destination: "destination".into(),
            value: "value".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelLayout {
    #[default]
    Wide,
    Long,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelColumns {
    pub layout: PanelLayout,
    pub date: String,
    /// Long layout only.
    pub state: String,
    /// Long layout only.
    pub value: String,
}

impl Default for PanelColumns {
    fn default() -> Self {
        Self {
            layout: PanelLayout::Wide,
            date: "date".into(),
            state: "state".into(),
            value: "value".into(),
        }
    }
}

/// Settings shared by every parser.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub delimiter: u8,
    pub universe: Vec<StateCode>,
    pub window: Window,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            universe: crate::states::default_universe(),
            window: Window::default(),
        }
    }
}

impl IngestOptions {
    fn state(&self, raw: &str) -> Option<StateCode> {
        raw.parse::<StateCode>()
            .ok()
            .filter(|s| self.universe.contains(s))
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(reader: R, delimiter: u8, what: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim_start_matches('\u{feff}').to_string()).collect();
        if headers.iter().all(|h| h.is_empty()) {
            return Err(Error::EmptyFile(what.to_string()));
        }
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { headers, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::InputMissing(path.display().to_string()),
        _ => Error::Io(e),
    })
}

pub fn parse_declarations(
    path: &Path,
    opts: &IngestOptions,
    cols: &DeclarationColumns,
    taxonomy: &Taxonomy,
) -> Result<Parsed<Vec<DeclarationRecord>>> {
    read_declarations(open(path)?, opts, cols, taxonomy)
}

/// Rows sharing a declaration id and state are merged into one record.
pub fn read_declarations<R: Read>(
    reader: R,
    opts: &IngestOptions,
    cols: &DeclarationColumns,
    taxonomy: &Taxonomy,
) -> Result<Parsed<Vec<DeclarationRecord>>> {
    let table = Table::read(reader, opts.delimiter, "declarations")?;
    let i_id = table.col(&cols.id)?;
    let i_state = table.col(&cols.state)?;
    let i_type = table.col(&cols.incident_type)?;
    let i_begin = table.col(&cols.begin_date)?;
    let i_end = cols.end_date.as_deref().map(|c| table.col(c)).transpose()?;
    let i_counties = table.col(&cols.counties)?;

    let mut records: Vec<DeclarationRecord> = Vec::new();
    let mut index: HashMap<(String, StateCode), usize> = HashMap::new();
    let mut rejects = Vec::new();
    let mut warned: BTreeSet<String> = BTreeSet::new();

    for (row_no, row) in table.rows.iter().enumerate() {
        let row_no = row_no + 1;
        let get = |i: usize| row.get(i).unwrap_or("");
        let mut reject = |reason: String| rejects.push(Reject { row: row_no, reason });

        let Some(state) = opts.state(get(i_state)) else {
            reject(format!("unknown state code `{}`", get(i_state)));
            continue;
        };
        let begin = match parse_date(get(i_begin)) {
            Ok(d) => d,
            Err(_) => {
                reject(format!("unparseable begin date `{}`", get(i_begin)));
                continue;
            }
        };
        let end = match i_end.map(get).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => match parse_date(s) {
                Ok(d) => Some(d),
                Err(_) => {
                    reject(format!("unparseable end date `{s}`"));
                    continue;
                }
            },
        };
        if end.is_some_and(|e| e < begin) {
            reject("end date precedes begin date".to_string());
            continue;
        }
        let Some(counties) = CountyHits::parse(get(i_counties)) else {
            reject(format!("negative county count `{}`", get(i_counties)));
            continue;
        };
        let incident_type = get(i_type).to_string();
        let group = match taxonomy.lookup(&incident_type) {
            Some(g) => g,
            None => {
                if warned.insert(incident_type.clone()) {
                    log::warn!("incident type `{incident_type}` not in taxonomy; treated as non_weather");
                }
                EventGroup::NonWeather
            }
        };
        let id = get(i_id).to_string();
        match index.get(&(id.clone(), state)) {
            Some(&k) => {
                let rec = &mut records[k];
                rec.counties.merge(&counties);
                rec.begin_date = rec.begin_date.min(begin);
                rec.end_date = match (rec.end_date, end) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
            None => {
                index.insert((id.clone(), state), records.len());
                records.push(DeclarationRecord {
                    declaration_id: id,
                    state,
                    incident_type,
                    group,
                    begin_date: begin,
                    end_date: end,
                    counties,
                });
            }
        }
    }

    let rows_read = table.rows.len();
    Ok(Parsed {
        value: records,
        rows_read,
        rows_accepted: rows_read - rejects.len(),
        rejects,
    })
}

pub fn write_declarations<W: Write>(
    records: &[DeclarationRecord],
    writer: W,
    cols: &DeclarationColumns,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let end_col = cols.end_date.clone().unwrap_or_else(|| "end_date".into());
    w.write_record([&cols.id, &cols.state, &cols.incident_type, &cols.begin_date, &end_col, &cols.counties])?;
    for r in records {
        w.write_record([
            r.declaration_id.clone(),
            r.state.to_string(),
            r.incident_type.clone(),
            r.begin_date.to_string(),
            r.end_date.map(|d| d.to_string()).unwrap_or_default(),
            r.counties.render(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeFlow {
    pub origin: StateCode,
    pub destination: StateCode,
    pub value: f64,
    /// Origin equals destination; kept in the table, ignored by weighting.
    pub self_flow: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TradeFlowTable {
    pub entries: Vec<TradeFlow>,
}

impl TradeFlowTable {
    /// Builds a table, summing duplicate `(origin, destination)` pairs.
    /// Entries are kept in `(origin, destination)` order.
    pub fn from_flows(flows: impl IntoIterator<Item = (StateCode, StateCode, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<(StateCode, StateCode), f64> = BTreeMap::new();
        for (o, d, v) in flows {
            if v < 0.0 || v.is_nan() {
                return Err(Error::NegativeValue {
                    origin: o.to_string(),
                    destination: d.to_string(),
                    value: v,
                });
            }
            *acc.entry((o, d)).or_insert(0.0) += v;
        }
        Ok(Self {
            entries: acc
                .into_iter()
                .map(|((o, d), v)| TradeFlow {
                    origin: o,
                    destination: d,
                    value: v,
                    self_flow: o == d,
                })
                .collect(),
        })
    }

    pub fn get(&self, origin: StateCode, destination: StateCode) -> f64 {
        self.entries
            .iter()
            .find(|e| e.origin == origin && e.destination == destination)
            .map_or(0.0, |e| e.value)
    }
}

pub fn parse_trade_flows(
    path: &Path,
    opts: &IngestOptions,
    cols: &TradeColumns,
) -> Result<Parsed<TradeFlowTable>> {
    read_trade_flows(open(path)?, opts, cols)
}

pub fn read_trade_flows<R: Read>(
    reader: R,
    opts: &IngestOptions,
    cols: &TradeColumns,
) -> Result<Parsed<TradeFlowTable>> {
    let table = Table::read(reader, opts.delimiter, "trade flows")?;
    let i_o = table.col(&cols.origin)?;
    let i_d = table.col(&cols.destination)?;
    let i_v = table.col(&cols.value)?;
    let mut flows = Vec::new();
    let mut rejects = Vec::new();
    for (row_no, row) in table.rows.iter().enumerate() {
        let get = |i: usize| row.get(i).unwrap_or("");
        let (o, d) = match (opts.state(get(i_o)), opts.state(get(i_d))) {
            (Some(o), Some(d)) => (o, d),
            _ => {
                rejects.push(Reject {
                    row: row_no + 1,
                    reason: format!("unknown state in pair `{}`,`{}`", get(i_o), get(i_d)),
                });
                continue;
            }
        };
        match get(i_v).parse::<f64>() {
            Ok(v) if v.is_finite() => flows.push((o, d, v)),
            _ => rejects.push(Reject {
                row: row_no + 1,
                reason: format!("unparseable value `{}`", get(i_v)),
            }),
        }
    }
    let value = TradeFlowTable::from_flows(flows)?;
    let rows_read = table.rows.len();
    Ok(Parsed {
        value,
        rows_read,
        rows_accepted: rows_read - rejects.len(),
        rejects,
    })
}

pub fn write_trade_flows<W: Write>(table: &TradeFlowTable, writer: W, cols: &TradeColumns) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([&cols.origin, &cols.destination, &cols.value])?;
    for e in &table.entries {
        w.write_record([e.origin.to_string(), e.destination.to_string(), e.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Monthly activity levels, `T x N`, states in universe order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityPanel {
    pub dates: Vec<YearMonth>,
    pub states: Vec<StateCode>,
    pub values: DMatrix<f64>,
}

impl ActivityPanel {
    pub fn new(dates: Vec<YearMonth>, states: Vec<StateCode>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != dates.len() || values.ncols() != states.len() {
            return Err(Error::DimensionMismatch(format!(
                "panel {}x{} for {} dates and {} states",
                values.nrows(),
                values.ncols(),
                dates.len(),
                states.len()
            )));
        }
        if dates.windows(2).any(|w| w[1] != w[0].succ()) {
            return Err(Error::InteriorGap("dates are not consecutive months".into()));
        }
        Ok(Self { dates, states, values })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// First differences; drops the first month.
    pub fn differenced(&self) -> ActivityPanel {
        let t = self.len();
        let n = self.states.len();
        let values = if t < 2 {
            DMatrix::zeros(0, n)
        } else {
            DMatrix::from_fn(t - 1, n, |r, c| self.values[(r + 1, c)] - self.values[(r, c)])
        };
        ActivityPanel {
            dates: self.dates.iter().skip(1).copied().collect(),
            states: self.states.clone(),
            values,
        }
    }

    /// Cross-state mean per month.
    pub fn cross_section_mean(&self) -> Vec<f64> {
        let n = self.states.len() as f64;
        self.values.row_iter().map(|r| r.sum() / n).collect()
    }
}

pub fn parse_activity_panel(
    path: &Path,
    opts: &IngestOptions,
    cols: &PanelColumns,
) -> Result<Parsed<ActivityPanel>> {
    read_activity_panel(open(path)?, opts, cols)
}

pub fn read_activity_panel<R: Read>(
    reader: R,
    opts: &IngestOptions,
    cols: &PanelColumns,
) -> Result<Parsed<ActivityPanel>> {
    let table = Table::read(reader, opts.delimiter, "activity panel")?;
    let i_date = table.col(&cols.date)?;
    let state_pos: HashMap<StateCode, usize> =
        opts.universe.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    let mut cells: BTreeMap<YearMonth, Vec<Option<f64>>> = BTreeMap::new();
    let mut rejects = Vec::new();
    let n = opts.universe.len();

    fn put(
        cells: &mut BTreeMap<YearMonth, Vec<Option<f64>>>,
        n: usize,
        ym: YearMonth,
        col: usize,
        v: f64,
    ) -> Result<()> {
        let slot = &mut cells.entry(ym).or_insert_with(|| vec![None; n])[col];
        if slot.is_some() {
            return Err(Error::InteriorGap(format!("duplicate observation for {ym}")));
        }
        *slot = Some(v);
        Ok(())
    }

    match cols.layout {
        PanelLayout::Wide => {
            let mut mapping = Vec::new();
            for (j, h) in table.headers.iter().enumerate() {
                if j == i_date {
                    continue;
                }
                let st: StateCode = h.parse().map_err(|_| Error::UnknownState(h.clone()))?;
                let pos = *state_pos.get(&st).ok_or_else(|| Error::UnknownState(h.clone()))?;
                mapping.push((j, pos));
            }
            for (row_no, row) in table.rows.iter().enumerate() {
                let raw = row.get(i_date).unwrap_or("");
                let ym: YearMonth = raw.parse()?;
                if !opts.window.contains(ym) {
                    rejects.push(Reject {
                        row: row_no + 1,
                        reason: format!("{ym} outside window"),
                    });
                    continue;
                }
                cells.entry(ym).or_insert_with(|| vec![None; n]);
                for &(j, pos) in &mapping {
                    let cell = row.get(j).unwrap_or("");
                    if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                        continue;
                    }
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::InteriorGap(format!("unparseable value `{cell}` at {ym}")))?;
                    put(&mut cells, n, ym, pos, v)?;
                }
            }
        }
        PanelLayout::Long => {
            let i_state = table.col(&cols.state)?;
            let i_value = table.col(&cols.value)?;
            for (row_no, row) in table.rows.iter().enumerate() {
                let raw = row.get(i_date).unwrap_or("");
                let ym: YearMonth = raw.parse()?;
                let st_raw = row.get(i_state).unwrap_or("");
                let st: StateCode = st_raw.parse()?;
                let pos = *state_pos
                    .get(&st)
                    .ok_or_else(|| Error::UnknownState(st_raw.to_string()))?;
                if !opts.window.contains(ym) {
                    rejects.push(Reject {
                        row: row_no + 1,
                        reason: format!("{ym} outside window"),
                    });
                    continue;
                }
                let cell = row.get(i_value).unwrap_or("");
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::InteriorGap(format!("unparseable value `{cell}` at {ym}")))?;
                put(&mut cells, n, ym, pos, v)?;
            }
        }
    }

    if cells.is_empty() {
        return Err(Error::WindowEmpty {
            start: opts.window.start.to_string(),
            end: opts.window.end.to_string(),
        });
    }
    let first = *cells.keys().next().expect("non-empty");
    let last = *cells.keys().next_back().expect("non-empty");
    let dates = YearMonth::range(first, last);
    let mut values = DMatrix::zeros(dates.len(), n);
    for (r, ym) in dates.iter().enumerate() {
        let row = cells
            .get(ym)
            .ok_or_else(|| Error::InteriorGap(format!("month {ym} missing")))?;
        for (c, v) in row.iter().enumerate() {
            values[(r, c)] = v.ok_or_else(|| {
                Error::InteriorGap(format!("no observation for {} in {ym}", opts.universe[c]))
            })?;
        }
    }

    let rows_read = table.rows.len();
    Ok(Parsed {
        value: ActivityPanel::new(dates, opts.universe.clone(), values)?,
        rows_read,
        rows_accepted: rows_read - rejects.len(),
        rejects,
    })
}

/// Writes the panel in wide layout (`date`, then one column per state).
pub fn write_activity_panel<W: Write>(panel: &ActivityPanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(panel.states.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (r, ym) in panel.dates.iter().enumerate() {
        let mut rec = vec![ym.to_string()];
        rec.extend(panel.values.row(r).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Number of counties per state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateMeta {
    pub state: StateCode,
    pub counties: u32,
}

/// Default metadata for a universe, from the built-in county table.
pub fn default_state_meta(universe: &[StateCode]) -> Result<Vec<StateMeta>> {
    let counts = crate::states::default_county_counts();
    universe
        .iter()
        .map(|s| {
            counts
                .get(s)
                .map(|&c| StateMeta { state: *s, counties: c })
                .ok_or_else(|| Error::InconsistentMeta(format!("no county count for {s}")))
        })
        .collect()
}

/// Reads a `state,counties` table and orders it by the universe.
pub fn parse_state_meta(path: &Path, opts: &IngestOptions) -> Result<Parsed<Vec<StateMeta>>> {
    let table = Table::read(open(path)?, opts.delimiter, "state metadata")?;
    let i_s = table.col("state")?;
    let i_c = table.col("counties")?;
    let mut found: BTreeMap<StateCode, u32> = BTreeMap::new();
    let mut rejects = Vec::new();
    for (row_no, row) in table.rows.iter().enumerate() {
        let st = opts.state(row.get(i_s).unwrap_or(""));
        let c = row.get(i_c).unwrap_or("").parse::<u32>().ok().filter(|&c| c >= 1);
        match (st, c) {
            (Some(s), Some(c)) => {
                found.insert(s, c);
            }
            _ => rejects.push(Reject {
                row: row_no + 1,
                reason: "invalid state or county count".into(),
            }),
        }
    }
    let value = opts
        .universe
        .iter()
        .map(|s| {
            found
                .get(s)
                .map(|&c| StateMeta { state: *s, counties: c })
                .ok_or_else(|| Error::InconsistentMeta(format!("no county count for {s}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows_read = table.rows.len();
    Ok(Parsed {
        value,
        rows_read,
        rows_accepted: rows_read - rejects.len(),
        rejects,
    })
}

pub fn write_state_meta<W: Write>(meta: &[StateMeta], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["state", "counties"])?;
    for m in meta {
        w.write_record([m.state.to_string(), m.counties.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
