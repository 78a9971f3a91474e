//! Unit-level ARX* equations and the accompanying time-series diagnostics.
//!
//! The equation for unit `i` regresses `y_it` on a constant, `p_dom` own lags,
//! the contemporaneous foreign average `y*_it`, `p_star` foreign lags and the
//! exogenous shock `s_it`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols;
use crate::weights::WeightScheme;

pub const DEFAULT_MAX_LAG: usize = 12;

/// Lag structure of one ARX* equation. `p_star = None` drops every foreign
/// term, including the contemporaneous one (plain ARDL).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArxSpec {
    pub p_dom: usize,
    pub p_star: Option<usize>,
    pub include_constant: bool,
    pub include_shock: bool,
}

impl ArxSpec {
    pub fn new(p_dom: usize, p_star: usize) -> Self {
        Self {
            p_dom,
            p_star: Some(p_star),
            include_constant: true,
            include_shock: true,
        }
    }

    pub fn ardl(lags: usize) -> Self {
        Self {
            p_dom: lags,
            p_star: None,
            include_constant: true,
            include_shock: true,
        }
    }

    pub fn max_lag(&self) -> usize {
        self.p_dom.max(self.p_star.unwrap_or(0))
    }

    pub fn n_params(&self) -> usize {
        self.include_constant as usize
            + self.p_dom
            + self.p_star.map_or(0, |p| p + 1)
            + self.include_shock as usize
    }

    fn check(&self, max: usize) -> Result<()> {
        if self.p_dom > max || self.p_star.unwrap_or(0) > max {
            return Err(Error::InvalidArgument(format!("lag order exceeds maximum {max}")));
        }
        if self.n_params() == 0 {
            return Err(Error::InvalidArgument("equation has no regressors".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ArxStdErrors {
    pub alpha: Option<f64>,
    pub beta: Vec<f64>,
    pub gamma0: Option<f64>,
    pub gamma: Vec<f64>,
    pub theta: Option<f64>,
}

/// Fitted ARX* equation. Coefficients of excluded terms are zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArxEstimate {
    pub spec: ArxSpec,
    pub alpha: f64,
    /// Own lags `1..=p_dom`.
    pub beta: Vec<f64>,
    /// Contemporaneous foreign coefficient.
    pub gamma0: f64,
    /// Foreign lags `1..=p_star`.
    pub gamma: Vec<f64>,
    pub theta: f64,
    /// Residual variance with `1/(T_eff - k)` scaling.
    pub sigma2: f64,
    pub residuals: Vec<f64>,
    pub std_errors: ArxStdErrors,
    /// Index of the first observation used as dependent variable.
    pub sample_start: usize,
}

impl ArxEstimate {
    /// An equation with known coefficients (simulation truth).
    pub fn from_coefficients(
        alpha: f64,
        beta: Vec<f64>,
        gamma0: f64,
        gamma: Vec<f64>,
        theta: f64,
        sigma2: f64,
    ) -> Self {
        let spec = ArxSpec {
            p_dom: beta.len(),
            p_star: Some(gamma.len()),
            include_constant: true,
            include_shock: true,
        };
        Self {
            spec,
            alpha,
            beta,
            gamma0,
            gamma,
            theta,
            sigma2,
            residuals: Vec::new(),
            std_errors: ArxStdErrors::default(),
            sample_start: 0,
        }
    }

    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }

    pub fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    pub fn bic(&self) -> f64 {
        bic(self.sigma2, self.n_obs(), self.n_params())
    }

    /// Own-lag coefficient at lag `l` (1-based), zero beyond `p_dom`.
    pub fn beta_at(&self, l: usize) -> f64 {
        self.beta.get(l - 1).copied().unwrap_or(0.0)
    }

    /// Foreign-lag coefficient at lag `l` (1-based), zero beyond `p_star`.
    pub fn gamma_at(&self, l: usize) -> f64 {
        self.gamma.get(l - 1).copied().unwrap_or(0.0)
    }

    /// `(parameter, estimate, std. error)` rows for tabular export.
    pub fn coefficient_rows(&self) -> Vec<(String, f64, f64)> {
        let se = &self.std_errors;
        let mut rows = Vec::new();
        if self.spec.include_constant {
            rows.push(("alpha".to_string(), self.alpha, se.alpha.unwrap_or(f64::NAN)));
        }
        for (l, b) in self.beta.iter().enumerate() {
            rows.push((format!("beta_{}", l + 1), *b, se.beta.get(l).copied().unwrap_or(f64::NAN)));
        }
        if self.spec.p_star.is_some() {
            rows.push(("gamma_0".to_string(), self.gamma0, se.gamma0.unwrap_or(f64::NAN)));
        }
        for (l, g) in self.gamma.iter().enumerate() {
            rows.push((format!("gamma_{}", l + 1), *g, se.gamma.get(l).copied().unwrap_or(f64::NAN)));
        }
        if self.spec.include_shock {
            rows.push(("theta".to_string(), self.theta, se.theta.unwrap_or(f64::NAN)));
        }
        rows.push(("sigma2".to_string(), self.sigma2, f64::NAN));
        rows
    }
}

/// Schwarz criterion from the stored residual variance:
/// `ln(sigma2 (n-k)/n) + k ln(n) / n`.
pub fn bic(sigma2: f64, n_obs: usize, n_params: usize) -> f64 {
    let n = n_obs as f64;
    let k = n_params as f64;
    (sigma2 * (n - k) / n).ln() + k * n.ln() / n
}

fn design(
    y: &[f64],
    y_star: &[f64],
    s: &[f64],
    spec: &ArxSpec,
    start: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let t_eff = y.len() - start;
    let k = spec.n_params();
    let mut x = DMatrix::zeros(t_eff, k);
    for r in 0..t_eff {
        let t = start + r;
        let mut c = 0;
        if spec.include_constant {
            x[(r, c)] = 1.0;
            c += 1;
        }
        for l in 1..=spec.p_dom {
            x[(r, c)] = y[t - l];
            c += 1;
        }
        if let Some(ps) = spec.p_star {
            x[(r, c)] = y_star[t];
            c += 1;
            for l in 1..=ps {
                x[(r, c)] = y_star[t - l];
                c += 1;
            }
        }
        if spec.include_shock {
            x[(r, c)] = s[t];
        }
    }
    (x, DVector::from_column_slice(&y[start..]))
}

/// OLS on the default sample, which starts at the equation's own maximum lag.
pub fn estimate_arx(y: &[f64], y_star: &[f64], s: &[f64], spec: &ArxSpec) -> Result<ArxEstimate> {
    estimate_arx_from(y, y_star, s, spec, spec.max_lag())
}

/// OLS with the dependent variable starting at observation `start`, which
/// must be at least the maximum lag.
pub fn estimate_arx_from(
    y: &[f64],
    y_star: &[f64],
    s: &[f64],
    spec: &ArxSpec,
    start: usize,
) -> Result<ArxEstimate> {
    spec.check(start.max(DEFAULT_MAX_LAG))?;
    if y_star.len() != y.len() || s.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "series lengths {} / {} / {}",
            y.len(),
            y_star.len(),
            s.len()
        )));
    }
    if start < spec.max_lag() {
        return Err(Error::InvalidArgument(format!(
            "sample start {start} precedes maximum lag {}",
            spec.max_lag()
        )));
    }
    let k = spec.n_params();
    let t_eff = y.len().saturating_sub(start);
    if t_eff <= k + 5 {
        return Err(Error::SampleTooShort(format!("{t_eff} effective observations for {k} regressors")));
    }
    let (x, yv) = design(y, y_star, s, spec, start);
    let fit = ols::fit(&x, &yv)?;

    let mut c = 0;
    let mut take = |n: usize| {
        let v: Vec<(f64, f64)> = (c..c + n).map(|j| (fit.coef[j], fit.std_err[j])).collect();
        c += n;
        v
    };
    let alpha = take(spec.include_constant as usize);
    let beta = take(spec.p_dom);
    let gamma0 = take(spec.p_star.is_some() as usize);
    let gamma = take(spec.p_star.unwrap_or(0));
    let theta = take(spec.include_shock as usize);

    let first = |v: &[(f64, f64)]| v.first().copied();
    Ok(ArxEstimate {
        spec: *spec,
        alpha: first(&alpha).map_or(0.0, |v| v.0),
        beta: beta.iter().map(|v| v.0).collect(),
        gamma0: first(&gamma0).map_or(0.0, |v| v.0),
        gamma: gamma.iter().map(|v| v.0).collect(),
        theta: first(&theta).map_or(0.0, |v| v.0),
        sigma2: fit.sigma2,
        residuals: fit.residuals.iter().copied().collect(),
        std_errors: ArxStdErrors {
            alpha: first(&alpha).map(|v| v.1),
            beta: beta.iter().map(|v| v.1).collect(),
            gamma0: first(&gamma0).map(|v| v.1),
            gamma: gamma.iter().map(|v| v.1).collect(),
            theta: first(&theta).map(|v| v.1),
        },
        sample_start: start,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagCandidate {
    pub p_dom: usize,
    pub p_star: usize,
    pub bic: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagSelection {
    pub p_dom: usize,
    pub p_star: usize,
    pub candidates: Vec<LagCandidate>,
}

/// Chooses `(p_dom, p_star)` in `0..=max_p` by BIC on a common sample starting
/// at `max_p`. Ties go to the smaller total lag count, then smaller `p_dom`.
pub fn select_lag_bic(
    y: &[f64],
    y_star: &[f64],
    s: &[f64],
    max_p: usize,
    include_constant: bool,
    include_shock: bool,
) -> Result<LagSelection> {
    if max_p == 0 {
        return Err(Error::InvalidArgument("maximum lag must be at least 1".into()));
    }
    let mut candidates = Vec::new();
    for p_dom in 0..=max_p {
        for p_star in 0..=max_p {
            let spec = ArxSpec {
                p_dom,
                p_star: Some(p_star),
                include_constant,
                include_shock,
            };
            let est = estimate_arx_from(y, y_star, s, &spec, max_p)?;
            candidates.push(LagCandidate {
                p_dom,
                p_star,
                bic: est.bic(),
                n_obs: est.n_obs(),
                n_params: est.n_params(),
                sigma2: est.sigma2,
            });
        }
    }
    let best = candidates
        .iter()
        .min_by(|a, b| {
            a.bic
                .total_cmp(&b.bic)
                .then((a.p_dom + a.p_star).cmp(&(b.p_dom + b.p_star)))
                .then(a.p_dom.cmp(&b.p_dom))
        })
        .expect("at least one candidate");
    Ok(LagSelection {
        p_dom: best.p_dom,
        p_star: best.p_star,
        candidates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deterministic {
    Const,
    ConstTrend,
}

impl Deterministic {
    /// Large-sample 5% critical values.
    pub fn critical_5pct(self) -> f64 {
        match self {
            Deterministic::Const => -2.86,
            Deterministic::ConstTrend => -3.41,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub n_obs: usize,
}

/// Augmented Dickey-Fuller t-test on the lagged level in
/// `dy_t = a (+ b t) + rho y_{t-1} + sum_j c_j dy_{t-j} + e_t`.
pub fn adf_test(series: &[f64], lags: usize, deterministic: Deterministic) -> Result<AdfResult> {
    if series.len() <= 25 {
        return Err(Error::SampleTooShort(format!("{} observations (need > 25)", series.len())));
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[t-1] = y_t - y_{t-1}
    let first = lags + 1;
    let n = series.len() - first;
    let trend = deterministic == Deterministic::ConstTrend;
    let k = 2 + trend as usize + lags;
    if n <= k + 5 {
        return Err(Error::SampleTooShort(format!("{n} usable observations")));
    }
    let mut x = DMatrix::zeros(n, k);
    let mut yv = DVector::zeros(n);
    for r in 0..n {
        let t = first + r;
        yv[r] = dy[t - 1];
        let mut c = 0;
        x[(r, c)] = 1.0;
        c += 1;
        if trend {
            x[(r, c)] = t as f64;
            c += 1;
        }
        x[(r, c)] = series[t - 1];
        c += 1;
        for j in 1..=lags {
            x[(r, c)] = dy[t - 1 - j];
            c += 1;
        }
    }
    let fit = ols::fit(&x, &yv)?;
    let j = 1 + trend as usize;
    let statistic = fit.coef[j] / fit.std_err[j];
    let critical_value = deterministic.critical_5pct();
    Ok(AdfResult {
        statistic,
        critical_value,
        reject: statistic < critical_value,
        n_obs: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FTest {
    pub statistic: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
}

/// Joint F-test of 11 month-of-year dummies added to an AR(`ar_order`)
/// regression with constant. `first_month` (1..=12) is the calendar month of
/// `series[0]`.
pub fn seasonality_ftest(series: &[f64], first_month: u32, ar_order: usize) -> Result<FTest> {
    if !(1..=12).contains(&first_month) {
        return Err(Error::InvalidArgument(format!("month {first_month}")));
    }
    if series.len() < 36 + ar_order {
        return Err(Error::SampleTooShort(format!(
            "{} observations; need three full years after {ar_order} lags",
            series.len()
        )));
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    if series.iter().all(|v| *v == mean) {
        return Err(Error::ZeroVariance);
    }
    let n = series.len() - ar_order;
    let k_r = 1 + ar_order;
    let k_u = k_r + 11;
    let mut x = DMatrix::zeros(n, k_u);
    let mut yv = DVector::zeros(n);
    for r in 0..n {
        let t = ar_order + r;
        yv[r] = series[t];
        x[(r, 0)] = 1.0;
        for l in 1..=ar_order {
            x[(r, l)] = series[t - l];
        }
        // January is the base month
        let month = ((first_month as usize - 1 + t) % 12) + 1;
        if month > 1 {
            x[(r, k_r + month - 2)] = 1.0;
        }
    }
    let unrestricted = ols::fit(&x, &yv)?;
    let restricted = ols::fit(&x.columns(0, k_r).into_owned(), &yv)?;
    let df_den = n - k_u;
    if unrestricted.rss == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let (statistic, p_value) = ols::f_test(restricted.rss, unrestricted.rss, 11, df_den);
    Ok(FTest {
        statistic,
        p_value,
        df_num: 11,
        df_den,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrangerResult {
    /// H0: the domestic variable does not Granger-cause the foreign one.
    pub domestic_to_foreign: FTest,
    /// H0: the foreign variable does not Granger-cause the domestic one.
    pub foreign_to_domestic: FTest,
}

fn granger_one(target: &[f64], other: &[f64], lags: usize) -> Result<FTest> {
    let n = target.len() - lags;
    let k_r = 1 + lags;
    let k_u = 1 + 2 * lags;
    let mut x = DMatrix::zeros(n, k_u);
    let mut yv = DVector::zeros(n);
    for r in 0..n {
        let t = lags + r;
        yv[r] = target[t];
        x[(r, 0)] = 1.0;
        for l in 1..=lags {
            x[(r, l)] = target[t - l];
            x[(r, lags + l)] = other[t - l];
        }
    }
    let unrestricted = ols::fit(&x, &yv)?;
    let restricted = ols::fit(&x.columns(0, k_r).into_owned(), &yv)?;
    let df_den = n - k_u;
    let (statistic, p_value) = ols::f_test(restricted.rss, unrestricted.rss, lags, df_den);
    Ok(FTest {
        statistic,
        p_value,
        df_num: lags,
        df_den,
    })
}

/// Bivariate Granger F-tests on first differences of the two level series.
pub fn granger_test(y: &[f64], y_star: &[f64], lags: usize) -> Result<GrangerResult> {
    if lags == 0 {
        return Err(Error::InvalidArgument("lag order must be at least 1".into()));
    }
    if y.len() != y_star.len() {
        return Err(Error::DimensionMismatch("series lengths differ".into()));
    }
    if y.len() <= 4 * lags || y.len() < 2 * lags + 8 {
        return Err(Error::SampleTooShort(format!("{} observations for {lags} lags", y.len())));
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let ds: Vec<f64> = y_star.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(GrangerResult {
        domestic_to_foreign: granger_one(&ds, &dy, lags)?,
        foreign_to_domestic: granger_one(&dy, &ds, lags)?,
    })
}

/// Estimates every unit's equation on a common sample starting at `start`.
/// `y` and `shocks` are `T x N`; foreign averages come from `scheme`.
pub fn estimate_units(
    y: &DMatrix<f64>,
    shocks: &DMatrix<f64>,
    scheme: &WeightScheme,
    specs: &[ArxSpec],
    start: usize,
) -> Result<Vec<ArxEstimate>> {
    let n = scheme.len();
    if y.ncols() != n || shocks.shape() != y.shape() || specs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "panel {}x{}, shocks {}x{}, {} specs, {n} units",
            y.nrows(),
            y.ncols(),
            shocks.nrows(),
            shocks.ncols(),
            specs.len()
        )));
    }
    let star = scheme.star_panel(y);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let yi: Vec<f64> = y.column(i).iter().copied().collect();
            let si: Vec<f64> = star.column(i).iter().copied().collect();
            let shi: Vec<f64> = shocks.column(i).iter().copied().collect();
            estimate_arx_from(&yi, &si, &shi, &specs[i], start)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn identical_foreign_series_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = noise(&mut rng, 200);
        let s = noise(&mut rng, 200);
        let err = estimate_arx(&y, &y, &s, &ArxSpec::new(1, 1)).unwrap_err();
        assert!(matches!(err, Error::SingularDesign(_)));
    }

    #[test]
    fn short_sample_is_rejected() {
        let y = vec![0.1, 0.5, 0.2, 0.3, 0.9, 0.4, 0.8, 0.1];
        let err = estimate_arx(&y, &y, &y, &ArxSpec::new(1, 1)).unwrap_err();
        assert!(matches!(err, Error::SampleTooShort(_)));
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ys = noise(&mut rng, 300);
        let s: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
        let mut y = vec![0.0; 300];
        for t in 1..300 {
            y[t] = 0.4 * y[t - 1] + 0.3 * ys[t] - 0.2 * s[t] + rng.sample::<f64, _>(StandardNormal);
        }
        let spec = ArxSpec::new(2, 1);
        let est = estimate_arx(&y, &ys, &s, &spec).unwrap();
        let (x, _) = design(&y, &ys, &s, &spec, 2);
        let e = DVector::from_vec(est.residuals.clone());
        for j in 0..x.ncols() {
            let scale = x.column(j).norm() * e.norm();
            assert!(x.column(j).dot(&e).abs() < 1e-8 * scale.max(1.0));
        }
        assert!(e.sum().abs() < 1e-9);
    }

    #[test]
    fn shock_rescaling_rescales_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ys = noise(&mut rng, 200);
        let s: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let y = noise(&mut rng, 200);
        let spec = ArxSpec::new(1, 1);
        let base = estimate_arx(&y, &ys, &s, &spec).unwrap();
        let s4: Vec<f64> = s.iter().map(|v| v * 4.0).collect();
        let scaled = estimate_arx(&y, &ys, &s4, &spec).unwrap();
        assert_eq!(scaled.theta, base.theta / 4.0);
        let s3: Vec<f64> = s.iter().map(|v| v * 3.0).collect();
        let scaled = estimate_arx(&y, &ys, &s3, &spec).unwrap();
        assert!((scaled.theta * 3.0 - base.theta).abs() <= 1e-12 * base.theta.abs().max(1.0));
    }

    #[test]
    fn bic_recomputes_bit_for_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ys = noise(&mut rng, 250);
        let s: Vec<f64> = (0..250).map(|_| rng.random::<f64>()).collect();
        let y = noise(&mut rng, 250);
        let sel = select_lag_bic(&y, &ys, &s, 3, true, true).unwrap();
        assert_eq!(sel.candidates.len(), 16);
        for c in &sel.candidates {
            assert_eq!(bic(c.sigma2, c.n_obs, c.n_params).to_bits(), c.bic.to_bits());
            let est = estimate_arx_from(&y, &ys, &s, &ArxSpec::new(c.p_dom, c.p_star), 3).unwrap();
            assert_eq!(est.bic().to_bits(), c.bic.to_bits());
            assert_eq!(c.n_obs, 247);
        }
    }

    #[test]
    fn ardl_spec_has_no_foreign_terms() {
        let spec = ArxSpec::ardl(2);
        assert_eq!(spec.n_params(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = noise(&mut rng, 100);
        let s: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let zeros = vec![0.0; 100];
        let est = estimate_arx(&y, &zeros, &s, &spec).unwrap();
        assert_eq!(est.gamma0, 0.0);
        assert!(est.gamma.is_empty());
        assert_eq!(est.coefficient_rows().len(), 5);
    }

    #[test]
    fn constant_series_fails_adf_and_seasonality() {
        let y = vec![3.0; 60];
        assert!(matches!(
            adf_test(&y, 1, Deterministic::Const),
            Err(Error::SingularDesign(_)) | Err(Error::SampleTooShort(_))
        ));
        assert!(matches!(seasonality_ftest(&y, 1, 1), Err(Error::ZeroVariance)));
        assert!(matches!(adf_test(&y[..20], 1, Deterministic::Const), Err(Error::SampleTooShort(_))));
    }

    #[test]
    fn identical_series_granger_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y: Vec<f64> = noise(&mut rng, 100)
            .into_iter()
            .scan(0.0, |acc, e| {
                *acc += e;
                Some(*acc)
            })
            .collect();
        assert!(matches!(granger_test(&y, &y, 2), Err(Error::SingularDesign(_))));
        assert!(matches!(granger_test(&y[..8], &y[..8], 2), Err(Error::SampleTooShort(_))));
    }
}
