//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::alternatives::render_comparison;
use crate::bootstrap::{bootstrap_irf, Sample};
use crate::calendar::YearMonth;
use crate::config::{LoadedConfig, RunConfig, SchemeKind};
use crate::error::{Error, Result};
use crate::estimation::{adf_test, granger_test, Deterministic};
use crate::gvar::{export_matrices, stability, DEFAULT_STABILITY_TOL};
use crate::ingest::EventGroup;
use crate::irf::{
    aggregate_to_regions, compute_irf, make_region_scenario, second_round, write_long, Bands, ShockScenario,
};
use crate::pipeline::{build_model, compare_models, load_shocks, region_weighting, Model, OutputSink, Overrides, RunManifest};
use crate::shocks::{summarize_declarations, write_national_shock, write_state_shocks, Season};
use crate::states::{Region, RegionMap};
use crate::synth::{export, simulate_gvar, DgpSpec, ErrorDist};

#[derive(Debug, Parser)]
#[command(name = "gvar-spill", version, about = "Weather-shock spillovers in a global VAR of regional economies")]
pub struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory, overriding the configured one.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Restrict shocks to these event groups (comma-separated or repeated).
    #[arg(long = "event-group", value_delimiter = ',')]
    pub event_group: Vec<EventGroup>,
    /// Use adjacency weights instead of the configured scheme.
    #[arg(long)]
    pub adjacency: bool,
}

impl ModelArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            groups: (!self.event_group.is_empty()).then(|| self.event_group.clone()),
            adjacency: self.adjacency,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build state and national shock series.
    Shocks {
        #[command(flatten)]
        common: Common,
        #[arg(long = "event-group", value_delimiter = ',')]
        event_group: Vec<EventGroup>,
    },
    /// Tabulate declarations by event group, season and state.
    Summarize {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate every unit equation; coefficient table and diagnostics.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Export system matrices and the stability report.
    Gvar {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Cumulated responses to region-wide shocks.
    Irf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Origin region; every region when omitted.
        #[arg(long)]
        region: Option<String>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Bootstrap percentile bands for a region-wide shock.
    Bootstrap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        region: String,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Spatial panel, aggregate ARDL and shock-coefficient summary.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Own-state responses with and without feedback from other states.
    SecondRound {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Reporting horizon; the configured headline horizon by default.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Generate a synthetic dataset with a ready-to-run configuration.
    Simulate {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 360)]
        t: usize,
        #[arg(long, default_value_t = 2)]
        lags: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Student t errors with this many degrees of freedom.
        #[arg(long)]
        t_df: Option<f64>,
        #[arg(long, default_value = "1990-01")]
        first_month: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Shocks { .. } => "shocks",
            Command::Summarize { .. } => "summarize",
            Command::Estimate { .. } => "estimate",
            Command::Gvar { .. } => "gvar",
            Command::Irf { .. } => "irf",
            Command::Bootstrap { .. } => "bootstrap",
            Command::Compare { .. } => "compare",
            Command::SecondRound { .. } => "second-round",
            Command::Simulate { .. } => "simulate",
        }
    }
}

fn open(common: &Common, command: &str) -> Result<(LoadedConfig, OutputSink)> {
    let cfg = LoadedConfig::load(&common.config)?;
    let dir = match &common.out {
        Some(d) => d.clone(),
        None => cfg.output_dir(),
    };
    let manifest = RunManifest::new(command, &cfg);
    let sink = OutputSink::new(dir, manifest)?;
    Ok((cfg, sink))
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::Writer::from_writer(buf)
}

fn unit_names(m: &Model) -> Vec<String> {
    m.scheme.labels.iter().map(|s| s.to_string()).collect()
}

fn region_names(r: &[Region]) -> Vec<String> {
    r.iter().map(|r| r.to_string()).collect()
}

/// Runs a parsed command; returns the manifest of written outputs.
pub fn run(cli: Cli) -> Result<Option<RunManifest>> {
    let name = cli.command.name();
    match cli.command {
        Command::Shocks { common, event_group } => {
            let (cfg, mut sink) = open(&common, name)?;
            let ov = Overrides {
                groups: (!event_group.is_empty()).then_some(event_group),
                adjacency: false,
            };
            let (_, panel) = load_shocks(&cfg, &ov, &mut sink.manifest)?;
            sink.write("state_shocks.csv", |b| write_state_shocks(&panel, b))?;
            sink.write("national_shock.csv", |b| write_national_shock(&panel, b))?;
            if let Some((ym, v)) = panel.national_peak() {
                log::info!("largest national shock {v:.4} in {ym}");
            }
            sink.finish().map(Some)
        }
        Command::Summarize { common } => {
            let (cfg, mut sink) = open(&common, name)?;
            let (records, panel) = load_shocks(&cfg, &Overrides::default(), &mut sink.manifest)?;
            let s = summarize_declarations(&records, &crate::pipeline::taxonomy(&cfg));
            sink.write("declarations_by_group.csv", |b| {
                let mut w = csv_writer(b);
                w.write_record(["group", "count"])?;
                for (g, c) in &s.by_group {
                    w.write_record([g.name(), &c.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            sink.write("declarations_by_group_season.csv", |b| {
                let mut w = csv_writer(b);
                w.write_record(["group", "season", "count"])?;
                for ((g, se), c) in &s.by_group_season {
                    w.write_record([g.name(), se.name(), &c.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            sink.write("declarations_by_season.csv", |b| {
                let mut w = csv_writer(b);
                w.write_record(["season", "count"])?;
                for se in [Season::DJF, Season::MAM, Season::JJA, Season::SON] {
                    let c = s.by_season.get(&se).copied().unwrap_or(0);
                    w.write_record([se.name(), &c.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            let groups: Vec<EventGroup> = s.by_group.keys().copied().collect();
            let universe = cfg.config.universe();
            sink.write("declarations_by_state.csv", |b| {
                let mut w = csv_writer(b);
                let mut header = vec!["state".to_string(), "total".to_string()];
                header.extend(groups.iter().map(|g| g.name().to_string()));
                w.write_record(&header)?;
                for st in &universe {
                    let counts: Vec<usize> = groups
                        .iter()
                        .map(|g| s.by_state_group.get(&(*st, *g)).copied().unwrap_or(0))
                        .collect();
                    let mut rec = vec![st.to_string(), counts.iter().sum::<usize>().to_string()];
                    rec.extend(counts.iter().map(|c| c.to_string()));
                    w.write_record(&rec)?;
                }
                w.flush()?;
                Ok(())
            })?;
            let mut order: Vec<usize> = (0..panel.dates.len()).collect();
            order.sort_by(|&a, &b| panel.national[b].total_cmp(&panel.national[a]).then(a.cmp(&b)));
            sink.write("national_peaks.csv", |b| {
                let mut w = csv_writer(b);
                w.write_record(["rank", "date", "s"])?;
                for (k, &t) in order.iter().take(5).enumerate() {
                    w.write_record([(k + 1).to_string(), panel.dates[t].to_string(), panel.national[t].to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            sink.finish().map(Some)
        }
        Command::Estimate { common, model } => {
            let (cfg, mut sink) = open(&common, name)?;
            let m = build_model(&cfg, &model.overrides(), &mut sink.manifest)?;
            write_estimates(&mut sink, &m, cfg.config.model.lags)?;
            sink.finish().map(Some)
        }
        Command::Gvar { common, model } => {
            let (cfg, mut sink) = open(&common, name)?;
            let m = build_model(&cfg, &model.overrides(), &mut sink.manifest)?;
            for f in export_matrices(&m.system, &sink.dir)? {
                sink.record(&f)?;
            }
            let st = stability(&m.system, DEFAULT_STABILITY_TOL);
            sink.write("stability.csv", |b| {
                let mut w = csv_writer(b);
                w.write_record(["units", "lags", "spectral_radius", "stable", "g_condition", "weights"])?;
                w.write_record([
                    m.system.n().to_string(),
                    m.system.lags().to_string(),
                    st.spectral_radius.to_string(),
                    st.stable.to_string(),
                    m.system.g_condition.to_string(),
                    m.scheme.id.clone(),
                ])?;
                w.flush()?;
                Ok(())
            })?;
            if !st.stable {
                log::warn!("system is not stable: spectral radius {:.6}", st.spectral_radius);
            }
            sink.finish().map(Some)
        }
        Command::Irf {
            common,
            model,
            region,
            horizon,
        } => {
            let (cfg, mut sink) = open(&common, name)?;
            let m = build_model(&cfg, &model.overrides(), &mut sink.manifest)?;
            let h = horizon.unwrap_or(cfg.config.irf.horizon);
            let headline = cfg.config.irf.headline.min(h);
            let map = RegionMap::noaa();
            let weighting = region_weighting(&cfg, &m.scheme.labels)?;
            let origins: Vec<Region> = match &region {
                Some(r) => vec![r.parse()?],
                None => Region::ALL
                    .into_iter()
                    .filter(|r| !map.member_indices(*r, &m.scheme.labels).is_empty())
                    .collect(),
            };
            let mut headline_rows = Vec::new();
            for origin in origins {
                let sc = make_region_scenario(origin.code(), &map, &m.scheme.labels, cfg.config.irf.intensity)?;
                let irf = compute_irf(&m.system, &sc, h)?;
                let agg = aggregate_to_regions(&irf.cumulated, &m.scheme.labels, &map, &weighting)?;
                let units = unit_names(&m);
                sink.write(&format!("irf_{origin}_states.csv"), |b| write_long(&units, &irf.cumulated, None, b))?;
                let regs = region_names(&agg.regions);
                sink.write(&format!("irf_{origin}_regions.csv"), |b| write_long(&regs, &agg.values, None, b))?;
                for (k, r) in agg.regions.iter().enumerate() {
                    headline_rows.push((origin, *r, agg.values[(headline, k)]));
                }
            }
            sink.write("irf_headline.csv", |b| {
                let mut w = csv_writer(b);
                w.write_record(["origin", "region", "horizon", "response"])?;
                for (o, r, v) in &headline_rows {
                    w.write_record([o.to_string(), r.to_string(), headline.to_string(), v.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            sink.finish().map(Some)
        }
        Command::Bootstrap {
            common,
            model,
            region,
            horizon,
            replications,
            seed,
        } => {
            let (cfg, mut sink) = open(&common, name)?;
            let m = build_model(&cfg, &model.overrides(), &mut sink.manifest)?;
            let mut bc = cfg.config.bootstrap.clone();
            if let Some(h) = horizon {
                bc.horizon = h;
            }
            if let Some(r) = replications {
                bc.replications = r;
            }
            if let Some(s) = seed {
                bc.seed = s;
            }
            sink.manifest.seed = Some(bc.seed);
            let origin: Region = region.parse()?;
            let map = RegionMap::noaa();
            let weighting = region_weighting(&cfg, &m.scheme.labels)?;
            let sc = make_region_scenario(origin.code(), &map, &m.scheme.labels, cfg.config.irf.intensity)?;
            let sample = Sample {
                y: &m.data.y,
                shocks: &m.data.s,
                start: m.start,
            };
            let banded = bootstrap_irf(&sample, &m.scheme, &m.specs, &sc, &bc, Some((&map, &weighting)))?;
            let labels: Vec<String> = bc.percentiles.iter().map(|q| format!("p{q}")).collect();
            let units = unit_names(&m);
            let state_bands = Bands {
                labels: labels.clone(),
                matrices: banded.states.percentiles.iter().map(|(_, v)| v).collect(),
            };
            sink.write(&format!("bootstrap_{origin}_states.csv"), |b| {
                write_long(&units, &banded.states.mean, Some(&state_bands), b)
            })?;
            if let Some(rb) = &banded.regions {
                let regs = region_names(&rb.regions);
                let bands = Bands {
                    labels,
                    matrices: rb.bands.percentiles.iter().map(|(_, v)| v).collect(),
                };
                sink.write(&format!("bootstrap_{origin}_regions.csv"), |b| {
                    write_long(&regs, &rb.bands.mean, Some(&bands), b)
                })?;
            }
            sink.write(&format!("bootstrap_{origin}_info.csv"), |b| {
                let mut w = csv_writer(b);
                w.write_record(["replications", "kept", "discarded", "seed"])?;
                w.write_record([
                    bc.replications.to_string(),
                    banded.kept.to_string(),
                    banded.discarded.to_string(),
                    bc.seed.to_string(),
                ])?;
                w.flush()?;
                Ok(())
            })?;
            sink.finish().map(Some)
        }
        Command::Compare { common } => {
            let (cfg, mut sink) = open(&common, name)?;
            let m = build_model(&cfg, &Overrides::default(), &mut sink.manifest)?;
            let c = compare_models(&cfg, &m, &mut sink.manifest)?;
            if cfg.config.compare.bias_correct {
                sink.manifest.seed = Some(cfg.config.compare.bias_correction.seed);
            }
            let table = render_comparison(Some(&c.sdpm), Some(&c.ardl), Some(&c.theta));
            sink.write("comparison.txt", |b| {
                b.extend_from_slice(table.as_bytes());
                Ok(())
            })?;
            print!("{table}");
            sink.finish().map(Some)
        }
        Command::SecondRound { common, model, horizon } => {
            let (cfg, mut sink) = open(&common, name)?;
            let m = build_model(&cfg, &model.overrides(), &mut sink.manifest)?;
            let h = horizon.unwrap_or(cfg.config.irf.headline);
            let n = m.system.n();
            let mut rows = Vec::with_capacity(n);
            for i in 0..n {
                let sc = ShockScenario::single(n, i, cfg.config.irf.intensity)?;
                let sr = second_round(&m.system, &m.estimates, &sc, h)?;
                rows.push((m.scheme.labels[i], sr.gvar_cumulated[h], sr.muted_cumulated[h], sr.effect(h)));
            }
            sink.write("second_round.csv", |b| {
                let mut w = csv_writer(b);
                w.write_record(["state", "horizon", "gvar", "muted", "second_round"])?;
                for (s, g, mu, e) in &rows {
                    w.write_record([s.to_string(), h.to_string(), g.to_string(), mu.to_string(), e.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            sink.finish().map(Some)
        }
        Command::Simulate {
            out,
            n,
            t,
            lags,
            seed,
            t_df,
            first_month,
        } => {
            simulate_command(&out, n, t, lags, seed, t_df, &first_month)?;
            Ok(None)
        }
    }
}

fn write_estimates(sink: &mut OutputSink, m: &Model, lags: usize) -> Result<()> {
    sink.write("estimates.csv", |b| {
        let mut w = csv_writer(b);
        w.write_record(["state", "parameter", "estimate", "std_error"])?;
        for (st, e) in m.scheme.labels.iter().zip(&m.estimates) {
            for (p, v, se) in e.coefficient_rows() {
                w.write_record([st.to_string(), p, v.to_string(), se.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    let levels = &m.data.levels.values;
    let star_levels = m.scheme.star_panel(levels);
    let g_lags = lags.max(1);
    sink.write("diagnostics.csv", |b| {
        let mut w = csv_writer(b);
        w.write_record([
            "state",
            "p_dom",
            "p_star",
            "n_obs",
            "sigma2",
            "bic",
            "adf_level",
            "adf_diff",
            "adf_critical",
            "granger_domestic_to_foreign_p",
            "granger_foreign_to_domestic_p",
        ])?;
        for (i, (st, e)) in m.scheme.labels.iter().zip(&m.estimates).enumerate() {
            let lv: Vec<f64> = levels.column(i).iter().copied().collect();
            let dv: Vec<f64> = lv.windows(2).map(|x| x[1] - x[0]).collect();
            let sv: Vec<f64> = star_levels.column(i).iter().copied().collect();
            let fmt = |r: Result<f64>| r.map(|v| v.to_string()).unwrap_or_else(|_| "NA".into());
            let adf_l = fmt(adf_test(&lv, 2, Deterministic::Const).map(|a| a.statistic));
            let adf_d = fmt(adf_test(&dv, 2, Deterministic::Const).map(|a| a.statistic));
            let gr = granger_test(&lv, &sv, g_lags);
            let (g1, g2) = match &gr {
                Ok(g) => (g.domestic_to_foreign.p_value.to_string(), g.foreign_to_domestic.p_value.to_string()),
                Err(_) => ("NA".into(), "NA".into()),
            };
            w.write_record([
                st.to_string(),
                e.spec.p_dom.to_string(),
                e.spec.p_star.unwrap_or(0).to_string(),
                e.n_obs().to_string(),
                e.sigma2.to_string(),
                e.bic().to_string(),
                adf_l,
                adf_d,
                Deterministic::Const.critical_5pct().to_string(),
                g1,
                g2,
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    if let Some(sel) = &m.selection {
        sink.write("lag_selection.csv", |b| {
            let mut w = csv_writer(b);
            w.write_record(["state", "p_dom", "p_star", "bic"])?;
            for (st, l) in m.scheme.labels.iter().zip(sel) {
                for c in &l.candidates {
                    if c.p_dom == l.p_dom && c.p_star == l.p_star {
                        w.write_record([st.to_string(), c.p_dom.to_string(), c.p_star.to_string(), c.bic.to_string()])?;
                    }
                }
            }
            w.flush()?;
            Ok(())
        })?;
    }
    Ok(())
}

/// National activity levels on the panel's months: the configured series
/// or the cross-state mean.
/// Writes a synthetic dataset, its truth and a configuration that runs the
/// full pipeline on it.
pub fn simulate_command(
    out: &Path,
    n: usize,
    t: usize,
    lags: usize,
    seed: u64,
    t_df: Option<f64>,
    first_month: &str,
) -> Result<()> {
    let mut spec = DgpSpec::new(n, t, lags, seed);
    if let Some(df) = t_df {
        spec.errors = ErrorDist::ScaledT { df };
    }
    let sim = simulate_gvar(&spec)?;
    let first: YearMonth = first_month.parse()?;
    let files = export(&sim, out, first)?;

    let mut cfg = RunConfig {
        universe: Some(sim.labels().to_vec()),
        ..Default::default()
    };
    cfg.window.start = files.first_month.to_string();
    cfg.window.end = files.last_month.to_string();
    cfg.inputs.activity = Some(files.activity.clone().into());
    cfg.inputs.declarations = Some(files.declarations.clone().into());
    cfg.inputs.counties = Some(files.counties.clone().into());
    cfg.inputs.trade = files.trade.clone().map(Into::into);
    cfg.inputs.weights = files.weights.clone().map(Into::into);
    if files.weights.is_some() {
        cfg.weights.scheme = SchemeKind::File;
    }
    cfg.weights.fallback.clear();
    cfg.model.lags = lags;
    cfg.bootstrap.replications = 200;
    cfg.bootstrap.seed = seed;
    let text = toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(out.join("config.toml"), text)?;

    let mut w = csv::Writer::from_path(out.join("truth.csv"))?;
    let mut header = vec!["state".to_string(), "alpha".to_string()];
    header.extend((1..=lags).map(|l| format!("beta_{l}")));
    header.push("gamma_0".into());
    header.extend((1..=lags).map(|l| format!("gamma_{l}")));
    header.extend(["theta".to_string(), "sigma2".to_string()]);
    w.write_record(&header)?;
    for (st, e) in sim.labels().iter().zip(&sim.truth) {
        let mut rec = vec![st.to_string(), e.alpha.to_string()];
        rec.extend(e.beta.iter().map(|v| v.to_string()));
        rec.push(e.gamma0.to_string());
        rec.extend(e.gamma.iter().map(|v| v.to_string()));
        rec.extend([e.theta.to_string(), e.sigma2.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Machine-readable error record.
pub fn error_record(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

/// Parses arguments, runs, and maps the outcome to an exit code. Errors are
/// written to stderr as a JSON record.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli) {
        Ok(_) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", error_record(&e));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_command_fails() {
        assert_ne!(main_with_args(["gvar-spill", "frobnicate"]), 0);
    }

    #[test]
    fn missing_config_is_reported() {
        assert_eq!(main_with_args(["gvar-spill", "shocks", "--config", "/nonexistent/run.toml"]), 1);
    }

    #[test]
    fn error_record_is_json() {
        let v: serde_json::Value = serde_json::from_str(&error_record(&Error::Config("x".into()))).unwrap();
        assert_eq!(v["error"], "ConfigError");
    }

    #[test]
    fn region_and_group_flags_parse() {
        let cli = Cli::try_parse_from([
            "gvar-spill",
            "irf",
            "--config",
            "c.toml",
            "--region",
            "S",
            "--horizon",
            "12",
            "--event-group",
            "winter,tropical_storm",
            "--adjacency",
        ])
        .unwrap();
        match cli.command {
            Command::Irf { model, region, horizon, .. } => {
                assert_eq!(region.as_deref(), Some("S"));
                assert_eq!(horizon, Some(12));
                assert!(model.adjacency);
                assert_eq!(model.event_group, vec![EventGroup::Winter, EventGroup::TropicalStorm]);
            }
            _ => panic!("wrong command"),
        }
    }
}
