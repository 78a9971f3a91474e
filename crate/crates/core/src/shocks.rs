//! State and national weather-shock series built from declaration records.
//!
//! For state `i` and month `t`, `hit` is the number of distinct counties under
//! any selected declaration that began in that month, capped at the state's
//! county count. The state shock is `hit / counties` (zero when nothing was
//! declared) and the national shock is `sum_i hit_it / N_c`, where `N_c` is the
//! total county count of the universe.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use nalgebra::DMatrix;

use crate::calendar::{Window, YearMonth};
use crate::error::{Error, Result};
use crate::ingest::{DeclarationRecord, EventGroup, StateMeta, Taxonomy};
use crate::states::StateCode;

#[derive(Debug, Clone, PartialEq)]
pub struct ShockPanel {
    pub dates: Vec<YearMonth>,
    pub states: Vec<StateCode>,
    /// `T x N` shock intensities in `[0, 1]`.
    pub intensity: DMatrix<f64>,
    /// `T x N` distinct counties hit, capped at the state's county count.
    pub hit: DMatrix<u32>,
    /// National series, length `T`.
    pub national: Vec<f64>,
}

impl ShockPanel {
    pub fn emergency(&self, t: usize, i: usize) -> bool {
        self.hit[(t, i)] > 0
    }

    /// Restricts the panel to rows whose month lies in `window`.
    pub fn restrict(&self, window: &Window) -> ShockPanel {
        let rows: Vec<usize> = (0..self.dates.len())
            .filter(|&t| window.contains(self.dates[t]))
            .collect();
        let n = self.states.len();
        ShockPanel {
            dates: rows.iter().map(|&t| self.dates[t]).collect(),
            states: self.states.clone(),
            intensity: DMatrix::from_fn(rows.len(), n, |r, c| self.intensity[(rows[r], c)]),
            hit: DMatrix::from_fn(rows.len(), n, |r, c| self.hit[(rows[r], c)]),
            national: rows.iter().map(|&t| self.national[t]).collect(),
        }
    }

    /// Month with the largest national shock, if any shock is positive.
    pub fn national_peak(&self) -> Option<(YearMonth, f64)> {
        self.dates
            .iter()
            .zip(&self.national)
            .filter(|(_, v)| **v > 0.0)
            .fold(None, |best: Option<(YearMonth, f64)>, (d, v)| match best {
                Some((_, bv)) if bv >= *v => best,
                _ => Some((*d, *v)),
            })
    }
}

/// Resolves a group filter: non-weather groups are dropped.
fn weather_filter(filter: &BTreeSet<EventGroup>) -> Result<BTreeSet<EventGroup>> {
    let f: BTreeSet<EventGroup> = filter.iter().copied().filter(|g| g.is_weather()).collect();
    if f.is_empty() {
        return Err(Error::EmptyFilter);
    }
    Ok(f)
}

/// All six weather groups.
pub fn default_filter() -> BTreeSet<EventGroup> {
    EventGroup::WEATHER.into_iter().collect()
}

#[derive(Default)]
struct MonthHits<'a> {
    names: BTreeSet<&'a str>,
    counted: u64,
}

/// Builds the state shock panel over `window`; the national series is filled
/// in from the same hit counts.
///
/// A declaration contributes only to the month of its begin date.
pub fn build_state_shocks(
    records: &[DeclarationRecord],
    meta: &[StateMeta],
    filter: &BTreeSet<EventGroup>,
    window: &Window,
) -> Result<ShockPanel> {
    let filter = weather_filter(filter)?;
    let pos: HashMap<StateCode, usize> = meta.iter().enumerate().map(|(i, m)| (m.state, i)).collect();
    if let Some(m) = meta.iter().find(|m| m.counties == 0) {
        return Err(Error::InconsistentMeta(format!("{} has zero counties", m.state)));
    }
    let dates = window.months();
    let t0 = window.start.ordinal();

    let mut acc: BTreeMap<(usize, usize), MonthHits> = BTreeMap::new();
    for r in records {
        let i = *pos
            .get(&r.state)
            .ok_or_else(|| Error::UnknownState(r.state.to_string()))?;
        if !filter.contains(&r.group) {
            continue;
        }
        let ym = YearMonth::of_date(r.begin_date);
        if !window.contains(ym) {
            continue;
        }
        let t = (ym.ordinal() - t0) as usize;
        let cell = acc.entry((t, i)).or_default();
        match &r.counties.names {
            Some(names) => cell.names.extend(names.iter().map(String::as_str)),
            None => cell.counted += r.counties.count as u64,
        }
    }

    let n = meta.len();
    let mut hit = DMatrix::<u32>::zeros(dates.len(), n);
    for ((t, i), cell) in acc {
        let raw = cell.names.len() as u64 + cell.counted;
        hit[(t, i)] = raw.min(meta[i].counties as u64) as u32;
    }
    let intensity = DMatrix::from_fn(dates.len(), n, |t, i| {
        let h = hit[(t, i)];
        if h > 0 {
            h as f64 / meta[i].counties as f64
        } else {
            0.0
        }
    });

    let mut panel = ShockPanel {
        dates,
        states: meta.iter().map(|m| m.state).collect(),
        intensity,
        hit,
        national: Vec::new(),
    };
    panel.national = build_national_shock(&panel, meta)?;
    Ok(panel)
}

/// National shock: counties hit across the universe as a share of all counties.
pub fn build_national_shock(panel: &ShockPanel, meta: &[StateMeta]) -> Result<Vec<f64>> {
    if meta.len() != panel.states.len() || meta.iter().zip(&panel.states).any(|(m, s)| m.state != *s) {
        return Err(Error::InconsistentMeta("metadata does not match panel state order".into()));
    }
    if let Some(m) = meta.iter().find(|m| m.counties == 0) {
        return Err(Error::InconsistentMeta(format!("{} has zero counties", m.state)));
    }
    for (i, m) in meta.iter().enumerate() {
        if panel.hit.column(i).iter().any(|&h| h > m.counties) {
            return Err(Error::InconsistentMeta(format!(
                "{} has more counties hit than it contains",
                m.state
            )));
        }
    }
    let total: u64 = meta.iter().map(|m| m.counties as u64).sum();
    Ok(panel
        .hit
        .row_iter()
        .map(|row| row.iter().map(|&h| h as u64).sum::<u64>() as f64 / total as f64)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Season {
    DJF,
    MAM,
    JJA,
    SON,
}

impl Season {
    pub fn of_month(month: u32) -> Season {
        match month {
            12 | 1 | 2 => Season::DJF,
            3..=5 => Season::MAM,
            6..=8 => Season::JJA,
            _ => Season::SON,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Season::DJF => "DJF",
            Season::MAM => "MAM",
            Season::JJA => "JJA",
            Season::SON => "SON",
        }
    }
}

/// Declaration counts by group, by group and season, and by state and group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeclarationSummary {
    pub by_group: BTreeMap<EventGroup, usize>,
    pub by_season: BTreeMap<Season, usize>,
    pub by_group_season: BTreeMap<(EventGroup, Season), usize>,
    pub by_state_group: BTreeMap<(StateCode, EventGroup), usize>,
}

impl DeclarationSummary {
    pub fn total(&self) -> usize {
        self.by_group.values().sum()
    }
}

pub fn summarize_declarations(records: &[DeclarationRecord], taxonomy: &Taxonomy) -> DeclarationSummary {
    use chrono::Datelike;
    let mut s = DeclarationSummary::default();
    for r in records {
        let g = taxonomy.group(&r.incident_type);
        let season = Season::of_month(r.begin_date.month());
        *s.by_group.entry(g).or_default() += 1;
        *s.by_season.entry(season).or_default() += 1;
        *s.by_group_season.entry((g, season)).or_default() += 1;
        *s.by_state_group.entry((r.state, g)).or_default() += 1;
    }
    s
}

/// Long format `date,state,s`.
pub fn write_state_shocks<W: Write>(panel: &ShockPanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "state", "s"])?;
    for (t, d) in panel.dates.iter().enumerate() {
        for (i, st) in panel.states.iter().enumerate() {
            w.write_record([d.to_string(), st.to_string(), panel.intensity[(t, i)].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `date,s`.
pub fn write_national_shock<W: Write>(panel: &ShockPanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "s"])?;
    for (d, v) in panel.dates.iter().zip(&panel.national) {
        w.write_record([d.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::CountyHits;
    use crate::states::code;
    use chrono::NaiveDate;

    fn rec(state: &str, date: &str, group: EventGroup, counties: CountyHits) -> DeclarationRecord {
        DeclarationRecord {
            declaration_id: format!("{state}-{date}"),
            state: code(state),
            incident_type: group.name().into(),
            group,
            begin_date: NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
            end_date: None,
            counties,
        }
    }

    fn meta10() -> Vec<StateMeta> {
        vec![StateMeta { state: code("AA"), counties: 10 }]
    }

    fn window() -> Window {
        Window::new("2000-01".parse().unwrap(), "2000-03".parse().unwrap())
    }

    #[test]
    fn single_declaration_share() {
        let r = vec![rec("AA", "2000-02-10", EventGroup::Flood, CountyHits::counted(4))];
        let p = build_state_shocks(&r, &meta10(), &default_filter(), &window()).unwrap();
        assert_eq!(p.intensity[(1, 0)], 0.4);
        assert_eq!(p.intensity[(0, 0)], 0.0);
        assert!(!p.emergency(0, 0));
    }

    #[test]
    fn county_lists_deduplicate_and_counts_sum_with_cap() {
        let names = |v: &[&str]| CountyHits::listed(v.iter().map(|s| s.to_string()));
        let listed = vec![
            rec("AA", "2000-01-02", EventGroup::Flood, names(&["A", "B"])),
            rec("AA", "2000-01-20", EventGroup::Storm, names(&["B", "C"])),
        ];
        let p = build_state_shocks(&listed, &meta10(), &default_filter(), &window()).unwrap();
        assert_eq!(p.hit[(0, 0)], 3);
        assert_eq!(p.intensity[(0, 0)], 0.3);

        let counted = vec![
            rec("AA", "2000-01-02", EventGroup::Flood, CountyHits::counted(2)),
            rec("AA", "2000-01-20", EventGroup::Storm, CountyHits::counted(2)),
        ];
        let p = build_state_shocks(&counted, &meta10(), &default_filter(), &window()).unwrap();
        assert_eq!(p.hit[(0, 0)], 4);
        assert_eq!(p.intensity[(0, 0)], 0.4);

        let over = vec![
            rec("AA", "2000-01-02", EventGroup::Flood, CountyHits::counted(8)),
            rec("AA", "2000-01-20", EventGroup::Storm, CountyHits::counted(8)),
        ];
        let p = build_state_shocks(&over, &meta10(), &default_filter(), &window()).unwrap();
        assert_eq!(p.intensity[(0, 0)], 1.0);
    }

    #[test]
    fn national_share_uses_total_counties() {
        let mut meta = crate::ingest::default_state_meta(&crate::states::default_universe()).unwrap();
        meta.sort_by_key(|m| m.state);
        let r = vec![
            rec("TX", "2000-01-05", EventGroup::Flood, CountyHits::counted(4)),
            rec("LA", "2000-01-05", EventGroup::Flood, CountyHits::counted(6)),
        ];
        let p = build_state_shocks(&r, &meta, &default_filter(), &window()).unwrap();
        assert_eq!(p.national[0], 10.0 / 3142.0);
        assert!((p.national[0] - 0.003183).abs() < 1e-6);
        assert_eq!(p.national[1], 0.0);
    }

    #[test]
    fn filters_and_errors() {
        let r = vec![rec("AA", "2000-01-02", EventGroup::NonWeather, CountyHits::counted(5))];
        let p = build_state_shocks(&r, &meta10(), &default_filter(), &window()).unwrap();
        assert_eq!(p.intensity.sum(), 0.0);

        let only_nw: BTreeSet<_> = [EventGroup::NonWeather].into_iter().collect();
        assert!(matches!(
            build_state_shocks(&r, &meta10(), &only_nw, &window()),
            Err(Error::EmptyFilter)
        ));
        let stray = vec![rec("ZZ", "2000-01-02", EventGroup::Flood, CountyHits::counted(1))];
        assert!(matches!(
            build_state_shocks(&stray, &meta10(), &default_filter(), &window()),
            Err(Error::UnknownState(_))
        ));
    }

    #[test]
    fn national_shock_rejects_mismatched_meta() {
        let r = vec![rec("AA", "2000-01-02", EventGroup::Flood, CountyHits::counted(1))];
        let p = build_state_shocks(&r, &meta10(), &default_filter(), &window()).unwrap();
        let other = vec![StateMeta { state: code("BB"), counties: 10 }];
        assert!(matches!(build_national_shock(&p, &other), Err(Error::InconsistentMeta(_))));
    }

    #[test]
    fn summary_partitions_and_seasons() {
        let mut r = Vec::new();
        for d in ["2000-01-01", "2000-04-01", "2000-07-01"] {
            r.push(rec("AA", d, EventGroup::Fire, CountyHits::counted(1)));
        }
        for d in ["2005-08-29", "2000-10-01"] {
            r.push(rec("AA", d, EventGroup::Flood, CountyHits::counted(1)));
        }
        let s = summarize_declarations(&r, &Taxonomy::new([
            ("fire".to_string(), EventGroup::Fire),
            ("flood".to_string(), EventGroup::Flood),
        ]));
        assert_eq!(s.by_group[&EventGroup::Fire], 3);
        assert_eq!(s.by_group[&EventGroup::Flood], 2);
        assert_eq!(s.total(), 5);
        assert_eq!(s.by_group_season[&(EventGroup::Flood, Season::JJA)], 1);
        assert_eq!(Season::of_month(8), Season::JJA);
        assert_eq!(s.by_season.values().sum::<usize>(), 5);
        assert!(summarize_declarations(&[], &Taxonomy::default()).by_group.is_empty());
    }
}
