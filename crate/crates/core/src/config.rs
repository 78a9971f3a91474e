//! TOML run configuration. Relative paths resolve against the directory of
//! the configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alternatives::BiasCorrection;
use crate::bootstrap::BootstrapConfig;
use crate::calendar::{Window, YearMonth};
use crate::error::{Error, Result};
use crate::ingest::{DeclarationColumns, EventGroup, IngestOptions, PanelColumns, TradeColumns};
use crate::irf::{DEFAULT_HORIZON, HEADLINE_HORIZON};
use crate::states::{default_island_fallback, default_universe, StateCode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Unit universe; defaults to the 50 states.
    pub universe: Option<Vec<StateCode>>,
    pub delimiter: char,
    pub window: WindowConfig,
    pub inputs: InputConfig,
    /// Extra incident-type labels mapped to event groups.
    pub taxonomy: BTreeMap<String, EventGroup>,
    pub shocks: ShockConfig,
    pub model: ModelConfig,
    pub weights: WeightConfig,
    pub irf: IrfConfig,
    pub bootstrap: BootstrapConfig,
    pub compare: CompareConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            universe: None,
            delimiter: ',',
            window: WindowConfig::default(),
            inputs: InputConfig::default(),
            taxonomy: BTreeMap::new(),
            shocks: ShockConfig::default(),
            model: ModelConfig::default(),
            weights: WeightConfig::default(),
            irf: IrfConfig::default(),
            bootstrap: BootstrapConfig::default(),
            compare: CompareConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub start: String,
    pub end: String,
}

impl Default for WindowConfig {
    fn default() -> Self {
        let w = Window::default();
        Self {
            start: w.start.to_string(),
            end: w.end.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub declarations: Option<PathBuf>,
    pub activity: Option<PathBuf>,
    pub trade: Option<PathBuf>,
    /// Precomputed `N x N` weight matrix, used when `weights.scheme = "file"`.
    pub weights: Option<PathBuf>,
    /// `state,counties`; the built-in table is used when absent.
    pub counties: Option<PathBuf>,
    /// `date,value` national activity levels for the aggregate ARDL; the
    /// cross-state mean is used when absent.
    pub national_activity: Option<PathBuf>,
    pub declaration_columns: DeclarationColumns,
    pub trade_columns: TradeColumns,
    pub panel_columns: PanelColumns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockConfig {
    pub groups: Vec<EventGroup>,
}

impl Default for ShockConfig {
    fn default() -> Self {
        Self {
            groups: EventGroup::WEATHER.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagChoice {
    Fixed,
    Bic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub lag_choice: LagChoice,
    /// Own and foreign lag order when `lag_choice = "fixed"`.
    pub lags: usize,
    /// Upper bound for BIC selection.
    pub max_lag: usize,
    /// Model first differences of the activity panel.
    pub difference: bool,
    pub cond_bound: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lag_choice: LagChoice::Fixed,
            lags: 2,
            max_lag: crate::estimation::DEFAULT_MAX_LAG,
            difference: true,
            cond_bound: crate::gvar::DEFAULT_COND_BOUND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Trade,
    Adjacency,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub scheme: SchemeKind,
    /// Partner for units without land borders under adjacency weights.
    pub fallback: BTreeMap<StateCode, StateCode>,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Trade,
            fallback: default_island_fallback(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrfConfig {
    pub horizon: usize,
    pub headline: usize,
    pub intensity: f64,
    /// Per-state weights for regional means; uniform when absent.
    pub region_weights: Option<BTreeMap<StateCode, f64>>,
}

impl Default for IrfConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            headline: HEADLINE_HORIZON,
            intensity: 1.0,
            region_weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub bias_correct: bool,
    pub bias_correction: BiasCorrection,
    pub ardl_lags: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            bias_correct: true,
            bias_correction: BiasCorrection::default(),
            ardl_lags: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Parsed configuration with its location and raw bytes (for hashing).
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base: PathBuf,
    pub raw: Vec<u8>,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::InputMissing(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        let text = std::str::from_utf8(&raw).map_err(|e| Error::Config(e.to_string()))?;
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base, raw })
    }

    pub fn from_config(config: RunConfig, base: PathBuf) -> Result<Self> {
        config.validate()?;
        let raw = toml::to_string(&config).map_err(|e| Error::Config(e.to_string()))?.into_bytes();
        Ok(Self { config, base, raw })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Resolved path of a required input.
    pub fn input(&self, name: &str, p: &Option<PathBuf>) -> Result<PathBuf> {
        let p = p
            .as_ref()
            .ok_or_else(|| Error::Config(format!("inputs.{name} is not set")))?;
        let full = self.resolve(p);
        if !full.exists() {
            return Err(Error::InputMissing(full.display().to_string()));
        }
        Ok(full)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output.dir)
    }
}

impl RunConfig {
    pub fn window(&self) -> Result<Window> {
        let start: YearMonth = self.window.start.parse()?;
        let end: YearMonth = self.window.end.parse()?;
        if end < start {
            return Err(Error::Config(format!("window ends ({end}) before it starts ({start})")));
        }
        Ok(Window::new(start, end))
    }

    pub fn universe(&self) -> Vec<StateCode> {
        self.universe.clone().unwrap_or_else(default_universe)
    }

    pub fn ingest_options(&self) -> Result<IngestOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Config("delimiter must be a single ASCII character".into()));
        }
        Ok(IngestOptions {
            delimiter: self.delimiter as u8,
            universe: self.universe(),
            window: self.window()?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.ingest_options()?;
        let u = self.universe();
        if u.len() < 2 {
            return Err(Error::Config("universe needs at least two units".into()));
        }
        let mut sorted = u.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != u.len() {
            return Err(Error::Config("universe lists a unit twice".into()));
        }
        if self.model.lag_choice == LagChoice::Fixed && self.model.lags == 0 {
            return Err(Error::Config("model.lags must be at least 1".into()));
        }
        if self.model.max_lag == 0 {
            return Err(Error::Config("model.max_lag must be at least 1".into()));
        }
        if self.irf.headline > self.irf.horizon {
            return Err(Error::Config("irf.headline exceeds irf.horizon".into()));
        }
        if !(0.0..=1.0).contains(&self.irf.intensity) {
            return Err(Error::Config("irf.intensity must lie in [0, 1]".into()));
        }
        self.bootstrap.validate().map_err(|e| Error::Config(format!("bootstrap: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.window().unwrap().len(), 360);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c: RunConfig = toml::from_str(
            r#"
            [window]
            start = "2000-01"
            end = "2004-12"
            [model]
            lag_choice = "bic"
            [weights]
            scheme = "adjacency"
            [taxonomy]
            "Volcano" = "non_weather"
            "#,
        )
        .unwrap();
        assert_eq!(c.window().unwrap().len(), 60);
        assert_eq!(c.model.lag_choice, LagChoice::Bic);
        assert_eq!(c.weights.scheme, SchemeKind::Adjacency);
        assert_eq!(c.bootstrap.replications, 1000);
        assert_eq!(c.weights.fallback.len(), 2);
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        let bad: RunConfig = toml::from_str("[irf]\nheadline = 60\nhorizon = 48\n").unwrap();
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(toml::from_str::<RunConfig>("nonsense = 1\n").is_err());
        let rev: RunConfig = toml::from_str("[window]\nstart = \"2000-01\"\nend = \"1999-01\"\n").unwrap();
        assert!(rev.validate().is_err());
    }
}
