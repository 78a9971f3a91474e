//! Impulse responses to a one-period exogenous shock, regional aggregation
//! and the second-round (feedback) decomposition.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::ArxEstimate;
use crate::gvar::GvarSystem;
use crate::states::{Region, RegionMap, StateCode};

pub const DEFAULT_HORIZON: usize = 48;
pub const HEADLINE_HORIZON: usize = 12;

/// Shock intensities applied at horizon 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockScenario {
    pub intensity: DVector<f64>,
}

impl ShockScenario {
    pub fn new(intensity: DVector<f64>) -> Result<Self> {
        if intensity.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("shock intensities must lie in [0, 1]".into()));
        }
        Ok(Self { intensity })
    }

    pub fn single(n: usize, unit: usize, intensity: f64) -> Result<Self> {
        if unit >= n {
            return Err(Error::IndexOutOfRange { index: unit, len: n });
        }
        let mut v = DVector::zeros(n);
        v[unit] = intensity;
        Self::new(v)
    }

    pub fn hit_units(&self) -> Vec<usize> {
        (0..self.intensity.len()).filter(|&i| self.intensity[i] != 0.0).collect()
    }
}

/// Every member of `region` is hit with `intensity`.
pub fn make_region_scenario(
    region: &str,
    map: &RegionMap,
    labels: &[StateCode],
    intensity: f64,
) -> Result<ShockScenario> {
    let r: Region = region.parse()?;
    let members = map.member_indices(r, labels);
    if members.is_empty() {
        return Err(Error::EmptyRegion(r.to_string()));
    }
    let mut v = DVector::zeros(labels.len());
    for i in members {
        v[i] = intensity;
    }
    ShockScenario::new(v)
}

/// Responses on the estimation (difference) scale and their running sums
/// (level scale). Rows are horizons `0..=H`, columns units.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfResult {
    pub responses: DMatrix<f64>,
    pub cumulated: DMatrix<f64>,
}

impl IrfResult {
    pub fn horizon(&self) -> usize {
        self.responses.nrows().saturating_sub(1)
    }
}

pub(crate) fn cumulate(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for h in 1..out.nrows() {
        for j in 0..out.ncols() {
            out[(h, j)] += out[(h - 1, j)];
        }
    }
    out
}

/// `r_0 = Lambda s`, `r_h = sum_l F_l r_{h-l}`.
pub fn compute_irf(system: &GvarSystem, scenario: &ShockScenario, horizon: usize) -> Result<IrfResult> {
    let n = system.n();
    if scenario.intensity.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "scenario has {} entries for {n} units",
            scenario.intensity.len()
        )));
    }
    let mut r: Vec<DVector<f64>> = Vec::with_capacity(horizon + 1);
    r.push(&system.lambda * &scenario.intensity);
    for h in 1..=horizon {
        let mut next = DVector::zeros(n);
        for (l, fl) in system.f.iter().enumerate() {
            if h > l {
                next += fl * &r[h - 1 - l];
            }
        }
        r.push(next);
    }
    let responses = DMatrix::from_fn(horizon + 1, n, |h, j| r[h][j]);
    let cumulated = cumulate(&responses);
    Ok(IrfResult { responses, cumulated })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionWeighting {
    Uniform,
    /// One weight per unit, in label order.
    Supplied(Vec<f64>),
}

/// Responses averaged within regions. Columns follow `regions`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionResponses {
    pub regions: Vec<Region>,
    pub values: DMatrix<f64>,
}

/// Weighted mean of member responses per horizon, for every region with at
/// least one member among `labels`.
pub fn aggregate_to_regions(
    responses: &DMatrix<f64>,
    labels: &[StateCode],
    map: &RegionMap,
    weighting: &RegionWeighting,
) -> Result<RegionResponses> {
    if responses.ncols() != labels.len() {
        return Err(Error::DimensionMismatch("responses do not match labels".into()));
    }
    if let RegionWeighting::Supplied(w) = weighting {
        if w.len() != labels.len() {
            return Err(Error::WeightMismatch(format!("{} weights for {} units", w.len(), labels.len())));
        }
        if w.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::WeightMismatch("weights must be non-negative".into()));
        }
    }
    let mut regions = Vec::new();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for r in Region::ALL {
        let members = map.member_indices(r, labels);
        if members.is_empty() {
            continue;
        }
        let wts: Vec<f64> = match weighting {
            RegionWeighting::Uniform => vec![1.0; members.len()],
            RegionWeighting::Supplied(w) => members.iter().map(|&i| w[i]).collect(),
        };
        let total: f64 = wts.iter().sum();
        if total <= 0.0 {
            return Err(Error::WeightMismatch(format!("region {r} has zero total weight")));
        }
        let col = DVector::from_fn(responses.nrows(), |h, _| {
            members
                .iter()
                .zip(&wts)
                .map(|(&i, w)| w * responses[(h, i)])
                .sum::<f64>()
                / total
        });
        regions.push(r);
        cols.push(col);
    }
    if regions.is_empty() {
        return Err(Error::EmptyRegion("no region has members among the units".into()));
    }
    Ok(RegionResponses {
        values: DMatrix::from_columns(&cols),
        regions,
    })
}

/// Own-state response in the full system versus the unit's equation with the
/// foreign average held at baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondRound {
    pub unit: usize,
    /// Difference-scale responses, horizons `0..=H`.
    pub gvar: Vec<f64>,
    pub muted: Vec<f64>,
    pub gvar_cumulated: Vec<f64>,
    pub muted_cumulated: Vec<f64>,
}

impl SecondRound {
    /// Cumulated full-system minus cumulated muted response at `h`.
    pub fn effect(&self, h: usize) -> f64 {
        self.gvar_cumulated[h] - self.muted_cumulated[h]
    }
}

/// Muted path of one equation: `m_0 = theta s`, `m_h = sum_l beta_l m_{h-l}`.
pub fn muted_response(estimate: &ArxEstimate, intensity: f64, horizon: usize) -> Vec<f64> {
    let mut m = Vec::with_capacity(horizon + 1);
    m.push(estimate.theta * intensity);
    for h in 1..=horizon {
        let v = (1..=estimate.beta.len().min(h))
            .map(|l| estimate.beta[l - 1] * m[h - l])
            .sum();
        m.push(v);
    }
    m
}

pub fn second_round(
    system: &GvarSystem,
    estimates: &[ArxEstimate],
    scenario: &ShockScenario,
    horizon: usize,
) -> Result<SecondRound> {
    let hit = scenario.hit_units();
    if hit.len() != 1 {
        return Err(Error::MultiStateScenario(hit.len()));
    }
    if estimates.len() != system.n() {
        return Err(Error::DimensionMismatch("one estimate per unit required".into()));
    }
    let i = hit[0];
    let irf = compute_irf(system, scenario, horizon)?;
    let gvar: Vec<f64> = irf.responses.column(i).iter().copied().collect();
    let muted = muted_response(&estimates[i], scenario.intensity[i], horizon);
    let running = |v: &[f64]| {
        v.iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect::<Vec<_>>()
    };
    Ok(SecondRound {
        unit: i,
        gvar_cumulated: running(&gvar),
        muted_cumulated: running(&muted),
        gvar,
        muted,
    })
}

/// Optional percentile bands for the long-format writer.
pub struct Bands<'a> {
    pub labels: Vec<String>,
    pub matrices: Vec<&'a DMatrix<f64>>,
}

/// Long format `horizon,unit,mean[,pXX...]`.
pub fn write_long<W: Write>(
    units: &[String],
    mean: &DMatrix<f64>,
    bands: Option<&Bands<'_>>,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["horizon".to_string(), "unit".to_string(), "mean".to_string()];
    if let Some(b) = bands {
        header.extend(b.labels.iter().cloned());
    }
    w.write_record(&header)?;
    for h in 0..mean.nrows() {
        for (j, u) in units.iter().enumerate() {
            let mut rec = vec![h.to_string(), u.clone(), mean[(h, j)].to_string()];
            if let Some(b) = bands {
                rec.extend(b.matrices.iter().map(|m| m[(h, j)].to_string()));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gvar::{assemble, solve_reduced_form, DEFAULT_COND_BOUND};
    use crate::states::code;
    use crate::weights::WeightScheme;

    fn one_unit(beta: f64, theta: f64) -> (GvarSystem, Vec<ArxEstimate>) {
        let e = vec![ArxEstimate {
            spec: crate::estimation::ArxSpec::ardl(1),
            ..ArxEstimate::from_coefficients(0.0, vec![beta], 0.0, vec![], theta, 1.0)
        }];
        // a single unit has no partners; build the system directly
        let stacked = crate::gvar::StackedSystem {
            labels: vec![code("AA")],
            g: DMatrix::identity(1, 1),
            h: vec![DMatrix::from_element(1, 1, beta)],
            theta: DVector::from_element(1, theta),
            alpha: DVector::zeros(1),
            sigma2: DVector::from_element(1, 1.0),
        };
        (solve_reduced_form(stacked, DEFAULT_COND_BOUND).unwrap(), e)
    }

    #[test]
    fn single_unit_closed_form() {
        let (beta, theta) = (0.7, -0.3);
        let (sys, _) = one_unit(beta, theta);
        let irf = compute_irf(&sys, &ShockScenario::single(1, 0, 1.0).unwrap(), 24).unwrap();
        for h in 0..=24 {
            let r = theta * beta.powi(h as i32);
            let c = theta * (1.0 - beta.powi(h as i32 + 1)) / (1.0 - beta);
            assert!((irf.responses[(h, 0)] - r).abs() < 1e-12);
            assert!((irf.cumulated[(h, 0)] - c).abs() < 1e-12);
        }
    }

    #[test]
    fn single_unit_second_round_is_zero() {
        let (sys, est) = one_unit(0.6, -0.4);
        let sr = second_round(&sys, &est, &ShockScenario::single(1, 0, 1.0).unwrap(), 12).unwrap();
        assert_eq!(sr.gvar, sr.muted);
        assert_eq!(sr.effect(12), 0.0);
    }

    #[test]
    fn zero_scenario_gives_zero_irf() {
        let (sys, _) = one_unit(0.6, -0.4);
        let irf = compute_irf(&sys, &ShockScenario::new(DVector::zeros(1)).unwrap(), 10).unwrap();
        assert_eq!(irf.cumulated.amax(), 0.0);
    }

    #[test]
    fn region_scenarios() {
        let labels = crate::states::default_universe();
        let map = RegionMap::noaa();
        let ne = make_region_scenario("NE", &map, &labels, 1.0).unwrap();
        assert_eq!(ne.intensity.sum(), 11.0);
        let zero = make_region_scenario("NE", &map, &labels, 0.0).unwrap();
        assert_eq!(zero.intensity.sum(), 0.0);
        let mut total = DVector::zeros(50);
        for r in Region::ALL {
            total += make_region_scenario(r.code(), &map, &labels, 1.0).unwrap().intensity;
        }
        assert_eq!(total.sum(), 48.0);
        assert!(total.iter().all(|v| *v == 0.0 || *v == 1.0));
        let ak = labels.iter().position(|s| *s == code("AK")).unwrap();
        assert_eq!(total[ak], 0.0);
        assert!(matches!(make_region_scenario("XX", &map, &labels, 1.0), Err(Error::UnknownRegion(_))));
        assert!(matches!(
            make_region_scenario("W", &map, &[code("NY")], 1.0),
            Err(Error::EmptyRegion(_))
        ));
    }

    #[test]
    fn regional_means() {
        let labels = vec![code("TX"), code("LA"), code("CA")];
        let resp = DMatrix::from_row_slice(1, 3, &[-1.0, -3.0, 5.0]);
        let map = RegionMap::noaa();
        let agg = aggregate_to_regions(&resp, &labels, &map, &RegionWeighting::Uniform).unwrap();
        assert_eq!(agg.regions, vec![Region::S, Region::W]);
        assert_eq!(agg.values[(0, 0)], -2.0);
        assert_eq!(agg.values[(0, 1)], 5.0);
        let wtd = aggregate_to_regions(
            &resp,
            &labels,
            &map,
            &RegionWeighting::Supplied(vec![3.0, 1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(wtd.values[(0, 0)], -1.5);
        assert!(matches!(
            aggregate_to_regions(&resp, &labels, &map, &RegionWeighting::Supplied(vec![1.0])),
            Err(Error::WeightMismatch(_))
        ));
        let flat = DMatrix::from_element(2, 3, 0.25);
        let agg = aggregate_to_regions(&flat, &labels, &map, &RegionWeighting::Supplied(vec![0.1, 7.0, 2.0])).unwrap();
        assert!(agg.values.iter().all(|v| (*v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn multi_state_second_round_is_rejected() {
        let w = WeightScheme::from_matrix(
            "swap",
            vec![code("AA"), code("BB")],
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap();
        let est = vec![
            ArxEstimate::from_coefficients(0.0, vec![0.5], 0.2, vec![0.1], -0.1, 1.0),
            ArxEstimate::from_coefficients(0.0, vec![0.5], 0.2, vec![0.1], -0.1, 1.0),
        ];
        let sys = solve_reduced_form(assemble(&est, &w).unwrap(), DEFAULT_COND_BOUND).unwrap();
        let both = ShockScenario::new(DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!(matches!(second_round(&sys, &est, &both, 12), Err(Error::MultiStateScenario(2))));
    }
}
