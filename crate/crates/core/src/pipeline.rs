//! Loading configured inputs into an estimated system, and the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::alternatives::{
    bias_correct, estimate_ardl_us, estimate_sdpm, theta_summary, ArdlEstimate, SdpmEstimate, ThetaSummary,
};
use crate::calendar::YearMonth;
use crate::config::{LagChoice, LoadedConfig, SchemeKind};
use crate::error::{Error, Result};
use crate::estimation::{select_lag_bic, ArxEstimate, ArxSpec, LagSelection};
use crate::gvar::{fit_gvar, GvarSystem};
use crate::ingest::{
    default_state_meta, parse_activity_panel, parse_declarations, parse_state_meta, parse_trade_flows, ActivityPanel,
    DeclarationRecord, EventGroup, Parsed, StateMeta, Taxonomy,
};
use crate::irf::RegionWeighting;
use crate::shocks::{build_state_shocks, ShockPanel};
use crate::states::{contiguous_borders, StateCode};
use crate::weights::{adjacency_weights, read_weights, trade_weights, WeightScheme};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance of one command run. Holds no timestamps, so identical runs
/// produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub window: String,
    pub lags: String,
    pub weight_scheme: String,
    pub seed: Option<u64>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &LoadedConfig) -> Self {
        let c = &cfg.config;
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: sha256_hex(&cfg.raw),
            inputs: BTreeMap::new(),
            window: format!("{}..{}", c.window.start, c.window.end),
            lags: String::new(),
            weight_scheme: String::new(),
            seed: None,
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, name: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.inputs.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }
}

pub fn manifest_name(command: &str) -> String {
    format!("manifest_{command}.json")
}

/// Writes output files into a directory and records their digests.
pub struct OutputSink {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl OutputSink {
    pub fn new(dir: PathBuf, manifest: RunManifest) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, manifest })
    }

    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.dir.join(name);
        std::fs::write(&path, &buf)?;
        self.manifest.outputs.insert(name.to_string(), sha256_hex(&buf));
        Ok(path)
    }

    /// Records a file written by other means.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let bytes = std::fs::read(self.dir.join(name))?;
        self.manifest.outputs.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Writes `manifest_<command>.json` and returns the manifest.
    pub fn finish(self) -> Result<RunManifest> {
        let json = serde_json::to_vec_pretty(&self.manifest).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(self.dir.join(manifest_name(&self.manifest.command)), json)?;
        Ok(self.manifest)
    }
}

/// Command-line overrides of configured model choices.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub groups: Option<Vec<EventGroup>>,
    pub adjacency: bool,
}

fn log_rejects<T>(what: &str, p: &Parsed<T>) {
    if !p.rejects.is_empty() {
        log::warn!("{what}: {} of {} rows rejected", p.rejects.len(), p.rows_read);
        for r in p.rejects.iter().take(5) {
            log::warn!("{what} row {}: {}", r.row, r.reason);
        }
    }
}

pub fn taxonomy(cfg: &LoadedConfig) -> Taxonomy {
    let mut t = Taxonomy::fema_default();
    t.extend(cfg.config.taxonomy.iter().map(|(k, v)| (k.clone(), *v)));
    t
}

pub fn load_meta(cfg: &LoadedConfig, manifest: &mut RunManifest) -> Result<Vec<StateMeta>> {
    let opts = cfg.config.ingest_options()?;
    match &cfg.config.inputs.counties {
        None => default_state_meta(&opts.universe),
        Some(_) => {
            let path = cfg.input("counties", &cfg.config.inputs.counties)?;
            manifest.record_input("counties", &path)?;
            let parsed = parse_state_meta(&path, &opts)?;
            log_rejects("counties", &parsed);
            Ok(parsed.value)
        }
    }
}

pub fn load_declarations(cfg: &LoadedConfig, manifest: &mut RunManifest) -> Result<Vec<DeclarationRecord>> {
    let path = cfg.input("declarations", &cfg.config.inputs.declarations)?;
    manifest.record_input("declarations", &path)?;
    let parsed = parse_declarations(
        &path,
        &cfg.config.ingest_options()?,
        &cfg.config.inputs.declaration_columns,
        &taxonomy(cfg),
    )?;
    log_rejects("declarations", &parsed);
    Ok(parsed.value)
}

pub fn load_shocks(
    cfg: &LoadedConfig,
    overrides: &Overrides,
    manifest: &mut RunManifest,
) -> Result<(Vec<DeclarationRecord>, ShockPanel)> {
    let records = load_declarations(cfg, manifest)?;
    let meta = load_meta(cfg, manifest)?;
    let groups: BTreeSet<EventGroup> = overrides
        .groups
        .clone()
        .unwrap_or_else(|| cfg.config.shocks.groups.clone())
        .into_iter()
        .collect();
    let panel = build_state_shocks(&records, &meta, &groups, &cfg.config.window()?)?;
    Ok((records, panel))
}

pub fn load_activity(cfg: &LoadedConfig, manifest: &mut RunManifest) -> Result<ActivityPanel> {
    let path = cfg.input("activity", &cfg.config.inputs.activity)?;
    manifest.record_input("activity", &path)?;
    let parsed = parse_activity_panel(&path, &cfg.config.ingest_options()?, &cfg.config.inputs.panel_columns)?;
    log_rejects("activity", &parsed);
    Ok(parsed.value)
}

pub fn load_weights(cfg: &LoadedConfig, adjacency: bool, manifest: &mut RunManifest) -> Result<WeightScheme> {
    let c = &cfg.config;
    let labels = c.universe();
    let kind = if adjacency { SchemeKind::Adjacency } else { c.weights.scheme };
    let scheme = match kind {
        SchemeKind::Adjacency => adjacency_weights(&contiguous_borders(), &labels, &c.weights.fallback)?,
        SchemeKind::Trade => {
            let path = cfg.input("trade", &c.inputs.trade)?;
            manifest.record_input("trade", &path)?;
            let parsed = parse_trade_flows(&path, &c.ingest_options()?, &c.inputs.trade_columns)?;
            log_rejects("trade", &parsed);
            trade_weights(&parsed.value, &labels)?
        }
        SchemeKind::File => {
            let path = cfg.input("weights", &c.inputs.weights)?;
            manifest.record_input("weights", &path)?;
            let s = read_weights("file", std::fs::File::open(&path)?)?;
            if s.labels != labels {
                return Err(Error::UnknownLabel("weight file labels differ from the universe".into()));
            }
            s
        }
    };
    manifest.weight_scheme = scheme.id.clone();
    Ok(scheme)
}

/// Aligned estimation data.
#[derive(Debug, Clone)]
pub struct Data {
    pub labels: Vec<StateCode>,
    /// Activity levels as read.
    pub levels: ActivityPanel,
    /// Months of the rows of `y` and `s`.
    pub dates: Vec<YearMonth>,
    /// `T x N` modelled series (differences unless configured otherwise).
    pub y: DMatrix<f64>,
    /// `T x N` shocks on the same months.
    pub s: DMatrix<f64>,
    pub shocks: ShockPanel,
    pub records: Vec<DeclarationRecord>,
}

pub fn load_data(cfg: &LoadedConfig, overrides: &Overrides, manifest: &mut RunManifest) -> Result<Data> {
    let (records, shocks) = load_shocks(cfg, overrides, manifest)?;
    let levels = load_activity(cfg, manifest)?;
    let modelled = if cfg.config.model.difference {
        levels.differenced()
    } else {
        levels.clone()
    };
    let start = shocks
        .dates
        .first()
        .copied()
        .ok_or_else(|| Error::Config("empty window".into()))?;
    let rows: Vec<usize> = modelled
        .dates
        .iter()
        .map(|d| (d.ordinal() - start.ordinal()) as usize)
        .collect();
    let s = DMatrix::from_fn(rows.len(), shocks.states.len(), |r, c| shocks.intensity[(rows[r], c)]);
    Ok(Data {
        labels: modelled.states.clone(),
        dates: modelled.dates.clone(),
        y: modelled.values,
        s,
        levels,
        shocks,
        records,
    })
}

/// Per-unit lag structures and the common sample start.
pub fn choose_specs(
    cfg: &LoadedConfig,
    y: &DMatrix<f64>,
    s: &DMatrix<f64>,
    scheme: &WeightScheme,
) -> Result<(Vec<ArxSpec>, usize, Option<Vec<LagSelection>>)> {
    let m = &cfg.config.model;
    let n = scheme.len();
    match m.lag_choice {
        LagChoice::Fixed => Ok((vec![ArxSpec::new(m.lags, m.lags); n], m.lags, None)),
        LagChoice::Bic => {
            let star = scheme.star_panel(y);
            let col = |m: &DMatrix<f64>, i: usize| m.column(i).iter().copied().collect::<Vec<f64>>();
            let sel = (0..n)
                .map(|i| select_lag_bic(&col(y, i), &col(&star, i), &col(s, i), m.max_lag, true, true))
                .collect::<Result<Vec<_>>>()?;
            let specs: Vec<ArxSpec> = sel.iter().map(|l| ArxSpec::new(l.p_dom, l.p_star)).collect();
            let start = specs.iter().map(ArxSpec::max_lag).max().unwrap_or(1).max(1);
            Ok((specs, start, Some(sel)))
        }
    }
}

/// Estimated system with everything needed downstream.
#[derive(Debug, Clone)]
pub struct Model {
    pub data: Data,
    pub scheme: WeightScheme,
    pub specs: Vec<ArxSpec>,
    pub start: usize,
    pub selection: Option<Vec<LagSelection>>,
    pub estimates: Vec<ArxEstimate>,
    pub system: GvarSystem,
}

pub fn build_model(cfg: &LoadedConfig, overrides: &Overrides, manifest: &mut RunManifest) -> Result<Model> {
    let data = load_data(cfg, overrides, manifest)?;
    let scheme = load_weights(cfg, overrides.adjacency, manifest)?;
    let (specs, start, selection) = choose_specs(cfg, &data.y, &data.s, &scheme)?;
    manifest.lags = match &selection {
        None => format!("fixed {}", cfg.config.model.lags),
        Some(_) => format!("bic max {} start {start}", cfg.config.model.max_lag),
    };
    let (estimates, system) = fit_gvar(&data.y, &data.s, &scheme, &specs, start, cfg.config.model.cond_bound)?;
    Ok(Model {
        data,
        scheme,
        specs,
        start,
        selection,
        estimates,
        system,
    })
}

pub fn region_weighting(cfg: &LoadedConfig, labels: &[StateCode]) -> Result<RegionWeighting> {
    match &cfg.config.irf.region_weights {
        None => Ok(RegionWeighting::Uniform),
        Some(m) => labels
            .iter()
            .map(|s| {
                m.get(s)
                    .copied()
                    .ok_or_else(|| Error::WeightMismatch(format!("no regional weight for {s}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(RegionWeighting::Supplied),
    }
}

/// National activity levels for the aggregate ARDL: the configured series, or
/// the cross-state mean of the panel.
pub fn national_activity(cfg: &LoadedConfig, m: &Model, manifest: &mut RunManifest) -> Result<Vec<f64>> {
    let dates = &m.data.levels.dates;
    let Some(_) = &cfg.config.inputs.national_activity else {
        return Ok(m.data.levels.cross_section_mean());
    };
    let path = cfg.input("national_activity", &cfg.config.inputs.national_activity)?;
    manifest.record_input("national_activity", &path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(cfg.config.delimiter as u8)
        .from_path(&path)?;
    let headers = rdr.headers()?.clone();
    let col = |n: &str| {
        headers
            .iter()
            .position(|h| h.trim() == n)
            .ok_or_else(|| Error::MissingColumn(n.to_string()))
    };
    let (i_d, i_v) = (col("date")?, col("value")?);
    let mut values: BTreeMap<YearMonth, f64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let ym: YearMonth = rec.get(i_d).unwrap_or("").parse()?;
        let raw = rec.get(i_v).unwrap_or("");
        let v: f64 = raw
            .parse()
            .map_err(|_| Error::InteriorGap(format!("unparseable national value `{raw}` at {ym}")))?;
        values.insert(ym, v);
    }
    dates
        .iter()
        .map(|d| {
            values
                .get(d)
                .copied()
                .ok_or_else(|| Error::InteriorGap(format!("national activity missing for {d}")))
        })
        .collect()
}

/// The three alternative-model panels.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub sdpm: SdpmEstimate,
    pub ardl: ArdlEstimate,
    pub theta: ThetaSummary,
}

pub fn compare_models(cfg: &LoadedConfig, m: &Model, manifest: &mut RunManifest) -> Result<Comparison> {
    let cc = &cfg.config.compare;
    let mut sdpm = estimate_sdpm(&m.data.y, &m.scheme, &m.data.s)?;
    if cc.bias_correct {
        sdpm = bias_correct(&sdpm, &m.data.y, &m.scheme, &m.data.s, &cc.bias_correction)?;
    }
    let activity = national_activity(cfg, m, manifest)?;
    let t0 = m.data.shocks.dates[0].ordinal();
    let shock: Vec<f64> = m
        .data
        .levels
        .dates
        .iter()
        .map(|d| m.data.shocks.national[(d.ordinal() - t0) as usize])
        .collect();
    let ardl = estimate_ardl_us(&activity, &shock, cc.ardl_lags, true)?;
    let theta = theta_summary(&m.estimates, &m.scheme.labels)?;
    Ok(Comparison { sdpm, ardl, theta })
}
