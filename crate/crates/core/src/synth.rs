//! Known-truth data-generating processes for Monte Carlo checks.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::estimation::ArxEstimate;
use crate::gvar::{assemble, companion, solve_reduced_form, GvarSystem, DEFAULT_COND_BOUND};
use crate::ingest::{
    write_activity_panel, write_declarations, write_state_meta, write_trade_flows, ActivityPanel, CountyHits,
    DeclarationColumns, DeclarationRecord, EventGroup, StateMeta, TradeColumns, TradeFlowTable,
};
use crate::irf::{compute_irf, IrfResult, ShockScenario};
use crate::states::{default_universe, StateCode};
use crate::weights::{write_weights, WeightScheme};

pub const MAX_RADIUS: f64 = 0.98;
pub const DEFAULT_BURN_IN: usize = 200;
pub const SYNTH_COUNTIES: u32 = 20;

/// Closed interval for uniform coefficient draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range(pub f64, pub f64);

impl Range {
    fn draw(self, rng: &mut impl Rng) -> f64 {
        if self.0 == self.1 {
            self.0
        } else {
            rng.random_range(self.0..=self.1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoefRanges {
    pub alpha: Range,
    pub beta_first: Range,
    pub beta_rest: Range,
    pub gamma0: Range,
    pub gamma: Range,
    pub theta: Range,
    pub sigma2: Range,
}

impl Default for CoefRanges {
    fn default() -> Self {
        Self {
            alpha: Range(-0.05, 0.05),
            beta_first: Range(0.2, 0.6),
            beta_rest: Range(-0.1, 0.1),
            gamma0: Range(0.1, 0.5),
            gamma: Range(-0.2, 0.2),
            theta: Range(-0.5, -0.05),
            sigma2: Range(0.02, 0.06),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Random(CoefRanges),
    /// One equation per unit; every lag vector must have length `lags`.
    Explicit(Vec<ArxEstimate>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightGen {
    /// Symmetric bilateral strengths on a ring plus extra links with the
    /// given probability.
    RandomSparse { density: f64 },
    Supplied(WeightScheme),
}

/// Bernoulli hit times a Beta-distributed county share, rounded to whole
/// counties out of `SYNTH_COUNTIES`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShockProcess {
    pub hit_prob: f64,
    pub share_a: f64,
    pub share_b: f64,
}

impl Default for ShockProcess {
    fn default() -> Self {
        Self {
            hit_prob: 0.25,
            share_a: 2.0,
            share_b: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorDist {
    Gaussian,
    /// Student t rescaled to unit variance; `df > 2`.
    ScaledT { df: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub n: usize,
    pub t: usize,
    pub lags: usize,
    pub coefficients: Coefficients,
    pub weights: WeightGen,
    pub shocks: ShockProcess,
    pub errors: ErrorDist,
    pub burn_in: usize,
    pub max_attempts: usize,
    pub seed: u64,
}

impl DgpSpec {
    pub fn new(n: usize, t: usize, lags: usize, seed: u64) -> Self {
        Self {
            n,
            t,
            lags,
            coefficients: Coefficients::Random(CoefRanges::default()),
            weights: WeightGen::RandomSparse { density: 0.3 },
            shocks: ShockProcess::default(),
            errors: ErrorDist::Gaussian,
            burn_in: DEFAULT_BURN_IN,
            max_attempts: 1000,
            seed,
        }
    }
}

/// Simulated data and the exact system that generated it.
#[derive(Debug, Clone)]
pub struct Simulation {
    /// `T x N` differenced activity.
    pub y: DMatrix<f64>,
    /// `T x N` shock intensities, `hits / SYNTH_COUNTIES`.
    pub shocks: DMatrix<f64>,
    pub hits: DMatrix<u32>,
    pub scheme: WeightScheme,
    /// Bilateral strengths behind a randomly generated scheme.
    pub strengths: Option<DMatrix<f64>>,
    pub truth: Vec<ArxEstimate>,
    pub system: GvarSystem,
}

impl Simulation {
    pub fn labels(&self) -> &[StateCode] {
        &self.scheme.labels
    }

    pub fn true_irf(&self, scenario: &ShockScenario, horizon: usize) -> Result<IrfResult> {
        compute_irf(&self.system, scenario, horizon)
    }
}

/// First `n` codes of the default universe.
pub fn synthetic_labels(n: usize) -> Result<Vec<StateCode>> {
    let all = default_universe();
    if n < 2 || n > all.len() {
        return Err(Error::InvalidArgument(format!("synthetic N must lie in 2..={}", all.len())));
    }
    Ok(all[..n].to_vec())
}

fn random_strengths(n: usize, density: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let ring = j == i + 1 || (i == 0 && j == n - 1);
            if ring || rng.random::<f64>() < density {
                let v = rng.random_range(0.1..1.0);
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
    }
    b
}

fn random_equation(lags: usize, r: &CoefRanges, rng: &mut impl Rng) -> ArxEstimate {
    let alpha = r.alpha.draw(rng);
    let beta = (0..lags)
        .map(|l| if l == 0 { r.beta_first.draw(rng) } else { r.beta_rest.draw(rng) })
        .collect();
    let gamma0 = r.gamma0.draw(rng);
    let gamma = (0..lags).map(|_| r.gamma.draw(rng)).collect();
    let theta = r.theta.draw(rng);
    let sigma2 = r.sigma2.draw(rng);
    ArxEstimate::from_coefficients(alpha, beta, gamma0, gamma, theta, sigma2)
}

fn build_system(truth: &[ArxEstimate], scheme: &WeightScheme) -> Result<GvarSystem> {
    solve_reduced_form(assemble(truth, scheme)?, DEFAULT_COND_BOUND)
}

fn draw_shock(p: &ShockProcess, share: &Beta<f64>, rng: &mut impl Rng) -> u32 {
    if rng.random::<f64>() >= p.hit_prob {
        return 0;
    }
    let k = (share.sample(rng) * SYNTH_COUNTIES as f64).round() as u32;
    k.clamp(1, SYNTH_COUNTIES)
}

/// Draws a stable system (rejection sampling for random coefficients) and
/// simulates `burn_in + T` periods of the reduced form, keeping the last `T`.
pub fn simulate_gvar(spec: &DgpSpec) -> Result<Simulation> {
    let labels = synthetic_labels(spec.n)?;
    if spec.t == 0 || spec.lags == 0 {
        return Err(Error::InvalidArgument("T and lag order must be positive".into()));
    }
    let p = &spec.shocks;
    if !(0.0..=1.0).contains(&p.hit_prob) {
        return Err(Error::InvalidArgument("hit probability must lie in [0, 1]".into()));
    }
    let share = Beta::new(p.share_a, p.share_b)
        .map_err(|e| Error::InvalidArgument(format!("county share distribution: {e}")))?;
    let t_dist = match spec.errors {
        ErrorDist::Gaussian => None,
        ErrorDist::ScaledT { df } => {
            if df <= 2.0 {
                return Err(Error::InvalidArgument("t degrees of freedom must exceed 2".into()));
            }
            Some((StudentT::new(df).map_err(|e| Error::InvalidArgument(e.to_string()))?, ((df - 2.0) / df).sqrt()))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let (scheme, strengths) = match &spec.weights {
        WeightGen::Supplied(s) => {
            if s.labels.len() != spec.n {
                return Err(Error::DimensionMismatch("supplied weights do not match N".into()));
            }
            (s.clone(), None)
        }
        WeightGen::RandomSparse { density } => {
            let b = random_strengths(spec.n, *density, &mut rng);
            (WeightScheme::from_strengths("synthetic", labels.clone(), &b)?, Some(b))
        }
    };

    let (truth, system) = match &spec.coefficients {
        Coefficients::Explicit(eqs) => {
            if eqs.len() != spec.n || eqs.iter().any(|e| e.beta.len() != spec.lags || e.gamma.len() != spec.lags) {
                return Err(Error::DimensionMismatch("explicit coefficients do not match N and lags".into()));
            }
            let sys = build_system(eqs, &scheme)?;
            if companion(&sys.f).spectral_radius >= MAX_RADIUS {
                return Err(Error::UnstableSpec(1));
            }
            (eqs.clone(), sys)
        }
        Coefficients::Random(ranges) => {
            let mut found = None;
            for _ in 0..spec.max_attempts {
                let eqs: Vec<ArxEstimate> = (0..spec.n).map(|_| random_equation(spec.lags, ranges, &mut rng)).collect();
                let sys = build_system(&eqs, &scheme)?;
                if companion(&sys.f).spectral_radius < MAX_RADIUS {
                    found = Some((eqs, sys));
                    break;
                }
            }
            found.ok_or(Error::UnstableSpec(spec.max_attempts))?
        }
    };

    let n = spec.n;
    let total = spec.burn_in + spec.t;
    let sd: Vec<f64> = truth.iter().map(|e| e.sigma2.max(0.0).sqrt()).collect();
    let lu = system.stacked.g.clone().lu();
    let mut hist: Vec<DVector<f64>> = vec![DVector::zeros(n); spec.lags];
    let mut y = DMatrix::zeros(spec.t, n);
    let mut hits = DMatrix::zeros(spec.t, n);
    for step in 0..total {
        let h: DVector<u32> = DVector::from_fn(n, |_, _| draw_shock(p, &share, &mut rng));
        let s = h.map(|k| k as f64 / SYNTH_COUNTIES as f64);
        let u = DVector::from_fn(n, |i, _| {
            let z: f64 = match &t_dist {
                None => rng.sample(StandardNormal),
                Some((d, scale)) => d.sample(&mut rng) * scale,
            };
            sd[i] * z
        });
        let eps = lu.solve(&u).ok_or(Error::SingularG)?;
        let lagged: Vec<&DVector<f64>> = hist.iter().rev().collect();
        let yt = system.step(&lagged, &s, &eps);
        hist.remove(0);
        hist.push(yt.clone());
        if step >= spec.burn_in {
            let r = step - spec.burn_in;
            y.row_mut(r).copy_from(&yt.transpose());
            hits.row_mut(r).copy_from(&h.transpose());
        }
    }
    let shocks = hits.map(|k: u32| k as f64 / SYNTH_COUNTIES as f64);
    Ok(Simulation {
        y,
        shocks,
        hits,
        scheme,
        strengths,
        truth,
        system,
    })
}

/// Files written by [`export`], relative to its directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportedFiles {
    pub activity: String,
    pub declarations: String,
    pub counties: String,
    pub trade: Option<String>,
    pub weights: Option<String>,
    pub first_month: YearMonth,
    pub last_month: YearMonth,
}

/// Writes the simulation in the ingestion formats: an activity level panel
/// (running sums from a zero first month, so differencing recovers `y`),
/// one declaration per hit state-month, county counts, and trade flows or
/// a weight matrix.
pub fn export(sim: &Simulation, dir: &Path, first_month: YearMonth) -> Result<ExportedFiles> {
    std::fs::create_dir_all(dir)?;
    let labels = sim.labels().to_vec();
    let (t, n) = sim.y.shape();
    let dates: Vec<YearMonth> = (0..=t as i64).map(|k| first_month.offset(k)).collect();
    let mut levels = DMatrix::zeros(t + 1, n);
    for r in 0..t {
        for i in 0..n {
            levels[(r + 1, i)] = levels[(r, i)] + sim.y[(r, i)];
        }
    }
    let panel = ActivityPanel::new(dates.clone(), labels.clone(), levels)?;
    let create = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
        Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
    };
    write_activity_panel(&panel, create("activity.csv")?)?;

    let mut records = Vec::new();
    for r in 0..t {
        let day = dates[r + 1].first_day();
        for (i, st) in labels.iter().enumerate() {
            let k = sim.hits[(r, i)];
            if k > 0 {
                records.push(DeclarationRecord {
                    declaration_id: format!("SYN-{}", records.len() + 1),
                    state: *st,
                    incident_type: "Severe Storm".into(),
                    group: EventGroup::Storm,
                    begin_date: day,
                    end_date: Some(day),
                    counties: CountyHits::counted(k),
                });
            }
        }
    }
    write_declarations(&records, create("declarations.csv")?, &DeclarationColumns::default())?;

    let meta: Vec<StateMeta> = labels
        .iter()
        .map(|s| StateMeta {
            state: *s,
            counties: SYNTH_COUNTIES,
        })
        .collect();
    write_state_meta(&meta, create("counties.csv")?)?;

    let (trade, weights) = match &sim.strengths {
        Some(b) => {
            let mut flows = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j && b[(i, j)] != 0.0 {
                        flows.push((labels[i], labels[j], b[(i, j)]));
                    }
                }
            }
            let table = TradeFlowTable::from_flows(flows)?;
            write_trade_flows(&table, create("trade.csv")?, &TradeColumns::default())?;
            (Some("trade.csv".to_string()), None)
        }
        None => {
            write_weights(&sim.scheme, create("weights.csv")?)?;
            (None, Some("weights.csv".to_string()))
        }
    };
    Ok(ExportedFiles {
        activity: "activity.csv".into(),
        declarations: "declarations.csv".into(),
        counties: "counties.csv".into(),
        trade,
        weights,
        first_month,
        last_month: dates[t],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_shockless_panel_is_zero() {
        let mut spec = DgpSpec::new(3, 50, 1, 4);
        spec.coefficients = Coefficients::Random(CoefRanges {
            alpha: Range(0.0, 0.0),
            sigma2: Range(0.0, 0.0),
            ..Default::default()
        });
        spec.shocks.hit_prob = 0.0;
        let sim = simulate_gvar(&spec).unwrap();
        assert_eq!(sim.y.amax(), 0.0);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let spec = DgpSpec::new(4, 100, 2, 11);
        let a = simulate_gvar(&spec).unwrap();
        let b = simulate_gvar(&spec).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.hits, b.hits);
        let mut other = spec.clone();
        other.seed = 12;
        assert_ne!(simulate_gvar(&other).unwrap().y, a.y);
    }

    #[test]
    fn drawn_systems_are_stable() {
        for seed in 0..10 {
            let sim = simulate_gvar(&DgpSpec::new(5, 10, 2, seed)).unwrap();
            assert!(companion(&sim.system.f).spectral_radius < MAX_RADIUS);
        }
    }

    #[test]
    fn explosive_explicit_spec_is_rejected() {
        let mut spec = DgpSpec::new(2, 10, 1, 0);
        spec.coefficients = Coefficients::Explicit(vec![
            ArxEstimate::from_coefficients(0.0, vec![1.1], 0.0, vec![0.0], -0.1, 1.0),
            ArxEstimate::from_coefficients(0.0, vec![0.5], 0.0, vec![0.0], -0.1, 1.0),
        ]);
        assert!(matches!(simulate_gvar(&spec), Err(Error::UnstableSpec(1))));
    }

    #[test]
    fn heavy_tailed_errors_run() {
        let mut spec = DgpSpec::new(3, 200, 1, 2);
        spec.errors = ErrorDist::ScaledT { df: 5.0 };
        let sim = simulate_gvar(&spec).unwrap();
        assert!(sim.y.iter().all(|v| v.is_finite()));
        spec.errors = ErrorDist::ScaledT { df: 2.0 };
        assert!(simulate_gvar(&spec).is_err());
    }

    #[test]
    fn shocks_are_whole_county_shares() {
        let sim = simulate_gvar(&DgpSpec::new(3, 300, 1, 9)).unwrap();
        assert!(sim.hits.iter().any(|k| *k > 0));
        assert!(sim.hits.iter().all(|k| *k <= SYNTH_COUNTIES));
        for (k, s) in sim.hits.iter().zip(sim.shocks.iter()) {
            assert_eq!(*s, *k as f64 / 20.0);
        }
    }
}
