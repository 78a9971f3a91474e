//! Recursive-design residual bootstrap for impulse-response percentile bands.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::ArxSpec;
use crate::gvar::{fit_gvar, stability, GvarSystem, DEFAULT_COND_BOUND, DEFAULT_STABILITY_TOL};
use crate::irf::{aggregate_to_regions, compute_irf, IrfResult, RegionWeighting, ShockScenario, DEFAULT_HORIZON};
use crate::states::{Region, RegionMap};
use crate::weights::WeightScheme;

pub const MAX_DISCARD_SHARE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub percentiles: Vec<f64>,
    pub seed: u64,
    pub horizon: usize,
    pub allow_unstable: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replications: 1000,
            percentiles: vec![10.0, 90.0],
            seed: 0,
            horizon: DEFAULT_HORIZON,
            allow_unstable: false,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be positive".into()));
        }
        if self.percentiles.iter().any(|p| !(*p > 0.0 && *p < 100.0)) {
            return Err(Error::InvalidArgument("percentiles must lie in (0, 100)".into()));
        }
        if self.percentiles.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("percentiles must be sorted".into()));
        }
        Ok(())
    }
}

/// Estimation sample: `T x N` differenced activity and shocks, dependent
/// variable starting at `start`.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub y: &'a DMatrix<f64>,
    pub shocks: &'a DMatrix<f64>,
    pub start: usize,
}

/// Percentile bands for one set of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub mean: DMatrix<f64>,
    /// `(percentile, values)` in configured order.
    pub percentiles: Vec<(f64, DMatrix<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionBands {
    pub regions: Vec<Region>,
    pub bands: Bands,
    pub point: DMatrix<f64>,
}

/// Bands on the cumulated (level) responses.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedIrf {
    pub point: IrfResult,
    pub states: Bands,
    pub regions: Option<RegionBands>,
    pub kept: usize,
    pub discarded: usize,
}

/// Row `r` is `T x N` row `idx[r]` of `residuals`, with `idx` drawn
/// uniformly with replacement.
pub fn resample_residuals(residuals: &DMatrix<f64>, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let t = residuals.nrows();
    if t == 0 || residuals.ncols() == 0 {
        return Err(Error::EmptyResiduals);
    }
    let mut out = DMatrix::zeros(t, residuals.ncols());
    for r in 0..t {
        let k = rng.random_range(0..t);
        out.row_mut(r).copy_from(&residuals.row(k));
    }
    Ok(out)
}

/// Generator for replication `rep`: a distinct ChaCha stream per replication.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Reduced-form residuals `G^-1 u_t`, one row per effective observation.
fn reduced_residuals(system: &GvarSystem, estimates: &[crate::estimation::ArxEstimate]) -> Result<DMatrix<f64>> {
    let t_eff = estimates.first().map_or(0, |e| e.residuals.len());
    let n = estimates.len();
    let u = DMatrix::from_fn(t_eff, n, |r, i| estimates[i].residuals[r]);
    let lu = system.stacked.g.clone().lu();
    let eps = lu.solve(&u.transpose()).ok_or(Error::SingularG)?;
    Ok(eps.transpose())
}

/// Regenerates a panel from the reduced form: rows before `start` keep their
/// sample values, later rows follow the recursion with the observed shocks
/// and the supplied errors.
pub fn regenerate(system: &GvarSystem, sample: &Sample<'_>, eps: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = sample.y.clone();
    let n = y.ncols();
    for t in sample.start..y.nrows() {
        let mut v: DVector<f64> = &system.c + &system.lambda * sample.shocks.row(t).transpose();
        for (l, fl) in system.f.iter().enumerate() {
            v += fl * y.row(t - l - 1).transpose();
        }
        v += eps.row(t - sample.start).transpose();
        for i in 0..n {
            y[(t, i)] = v[i];
        }
    }
    y
}

/// Cumulated scenario responses of every stable replication, in replication
/// order, and the number of discarded (unstable) replications.
pub fn replicate_irfs(
    sample: &Sample<'_>,
    scheme: &WeightScheme,
    specs: &[ArxSpec],
    scenario: &ShockScenario,
    config: &BootstrapConfig,
) -> Result<(IrfResult, Vec<DMatrix<f64>>, usize)> {
    config.validate()?;
    let (estimates, system) = fit_gvar(sample.y, sample.shocks, scheme, specs, sample.start, DEFAULT_COND_BOUND)?;
    let st = stability(&system, DEFAULT_STABILITY_TOL);
    if !st.stable && !config.allow_unstable {
        return Err(Error::UnstableSystem(st.spectral_radius));
    }
    let point = compute_irf(&system, scenario, config.horizon)?;
    let eps = reduced_residuals(&system, &estimates)?;
    if eps.nrows() == 0 {
        return Err(Error::EmptyResiduals);
    }

    let draws: Vec<Option<DMatrix<f64>>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| -> Result<Option<DMatrix<f64>>> {
            let mut rng = replication_rng(config.seed, rep);
            let e = resample_residuals(&eps, &mut rng)?;
            let y = regenerate(&system, sample, &e);
            let (_, sys) = fit_gvar(&y, sample.shocks, scheme, specs, sample.start, DEFAULT_COND_BOUND)?;
            if !stability(&sys, DEFAULT_STABILITY_TOL).stable {
                return Ok(None);
            }
            Ok(Some(compute_irf(&sys, scenario, config.horizon)?.cumulated))
        })
        .collect::<Result<_>>()?;

    let discarded = draws.iter().filter(|d| d.is_none()).count();
    if discarded as f64 > MAX_DISCARD_SHARE * config.replications as f64 {
        return Err(Error::TooManyUnstableReplications {
            discarded,
            total: config.replications,
        });
    }
    if discarded > 0 {
        log::warn!("{discarded} of {} replications discarded as unstable", config.replications);
    }
    Ok((point, draws.into_iter().flatten().collect(), discarded))
}

/// Linear interpolation between order statistics (`q` in percent).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Cellwise mean and percentiles across draws of equal shape.
pub fn summarize_draws(draws: &[DMatrix<f64>], percentiles: &[f64]) -> Result<Bands> {
    let first = draws.first().ok_or(Error::EmptyResiduals)?;
    let (rows, cols) = first.shape();
    let mut mean = DMatrix::zeros(rows, cols);
    let mut out: Vec<(f64, DMatrix<f64>)> = percentiles.iter().map(|&q| (q, DMatrix::zeros(rows, cols))).collect();
    let mut cell = Vec::with_capacity(draws.len());
    for r in 0..rows {
        for c in 0..cols {
            cell.clear();
            cell.extend(draws.iter().map(|d| d[(r, c)]));
            mean[(r, c)] = cell.iter().sum::<f64>() / cell.len() as f64;
            cell.sort_by(f64::total_cmp);
            for (q, m) in out.iter_mut() {
                m[(r, c)] = percentile(&cell, *q);
            }
        }
    }
    Ok(Bands { mean, percentiles: out })
}

/// Point IRF plus bootstrap mean and percentile bands, optionally also for
/// regional aggregates.
pub fn bootstrap_irf(
    sample: &Sample<'_>,
    scheme: &WeightScheme,
    specs: &[ArxSpec],
    scenario: &ShockScenario,
    config: &BootstrapConfig,
    regions: Option<(&RegionMap, &RegionWeighting)>,
) -> Result<BandedIrf> {
    let (point, draws, discarded) = replicate_irfs(sample, scheme, specs, scenario, config)?;
    let states = summarize_draws(&draws, &config.percentiles)?;
    let regions = match regions {
        None => None,
        Some((map, weighting)) => {
            let agg = |m: &DMatrix<f64>| aggregate_to_regions(m, &scheme.labels, map, weighting);
            let point_agg = agg(&point.cumulated)?;
            let region_draws = draws
                .iter()
                .map(|d| agg(d).map(|r| r.values))
                .collect::<Result<Vec<_>>>()?;
            Some(RegionBands {
                regions: point_agg.regions,
                bands: summarize_draws(&region_draws, &config.percentiles)?,
                point: point_agg.values,
            })
        }
    };
    Ok(BandedIrf {
        point,
        states,
        regions,
        kept: draws.len(),
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_resample_repeats_it() {
        let r = DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]);
        let out = resample_residuals(&r, &mut replication_rng(7, 0)).unwrap();
        assert_eq!(out, r);
    }

    #[test]
    fn resampling_is_deterministic_and_rowwise() {
        let r = DMatrix::from_fn(50, 3, |i, j| (i * 10 + j) as f64);
        let a = resample_residuals(&r, &mut replication_rng(3, 4)).unwrap();
        let b = resample_residuals(&r, &mut replication_rng(3, 4)).unwrap();
        assert_eq!(a, b);
        for row in a.row_iter() {
            let base = row[0];
            assert_eq!(row[1], base + 1.0);
            assert_eq!(row[2], base + 2.0);
        }
        assert_ne!(a, resample_residuals(&r, &mut replication_rng(3, 5)).unwrap());
    }

    #[test]
    fn empty_residuals_rejected() {
        let r = DMatrix::<f64>::zeros(0, 2);
        assert!(matches!(
            resample_residuals(&r, &mut replication_rng(0, 0)),
            Err(Error::EmptyResiduals)
        ));
    }

    #[test]
    fn percentile_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 10.0), 1.4);
        assert_eq!(percentile(&[2.5], 90.0), 2.5);
    }

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::default().validate().is_ok());
        let bad = BootstrapConfig {
            percentiles: vec![90.0, 10.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = BootstrapConfig {
            replications: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_draw_collapses_bands() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = summarize_draws(&[d.clone()], &[10.0, 90.0]).unwrap();
        assert_eq!(b.mean, d);
        assert_eq!(b.percentiles[0].1, d);
        assert_eq!(b.percentiles[1].1, d);
    }
}
