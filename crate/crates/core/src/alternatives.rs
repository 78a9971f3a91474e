//! Comparison estimators: spatial dynamic panel QMLE with fixed effects, an
//! aggregate ARDL, and the cross-state spread of shock coefficients.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate_arx, ArxEstimate, ArxSpec};
use crate::ols;
use crate::states::StateCode;
use crate::weights::WeightScheme;

const GRID_POINTS: usize = 81;
const EDGE: f64 = 1e-3;
const GOLDEN_TOL: f64 = 1e-10;

/// Fitted spatial dynamic panel
/// `y_it = p (W y_t)_i + gamma y_{i,t-1} + rho (W y_{t-1})_i + beta s_it + c_i + e_it`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdpmEstimate {
    pub p: f64,
    pub gamma: f64,
    pub rho: f64,
    pub beta: f64,
    pub fixed_effects: Vec<f64>,
    pub sigma2: f64,
    /// Standard errors of `(p, gamma, rho, beta)`.
    pub std_errors: [f64; 4],
    pub log_likelihood: f64,
    /// Spatial-parameter interval searched.
    pub interval: (f64, f64),
}

impl SdpmEstimate {
    pub fn params(&self) -> [f64; 4] {
        [self.p, self.gamma, self.rho, self.beta]
    }
}

/// Subtracts each column's mean.
pub fn within(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
    }
    out
}

fn stack(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Pieces of the concentrated likelihood that do not depend on `p`.
struct Profile {
    ee: f64,
    ef: f64,
    ff: f64,
    n: usize,
    t: usize,
    eig: Vec<(f64, f64)>,
    x: DMatrix<f64>,
    yd: DVector<f64>,
    wyd: DVector<f64>,
}

impl Profile {
    fn new(y: &DMatrix<f64>, scheme: &WeightScheme, shocks: &DMatrix<f64>) -> Result<Self> {
        let (t_all, n) = y.shape();
        if n != scheme.len() || shocks.shape() != y.shape() {
            return Err(Error::DimensionMismatch("panel, shocks and weights disagree".into()));
        }
        if t_all < 3 {
            return Err(Error::SampleTooShort(format!("{t_all} periods")));
        }
        let wy = scheme.star_panel(y);
        let t = t_all - 1;
        let cur = |m: &DMatrix<f64>| within(&m.rows(1, t).into_owned());
        let lag = |m: &DMatrix<f64>| within(&m.rows(0, t).into_owned());
        let yd = stack(&cur(y));
        let wyd = stack(&cur(&wy));
        let x = DMatrix::from_columns(&[stack(&lag(y)), stack(&lag(&wy)), stack(&cur(shocks))]);
        let e0 = ols::fit(&x, &yd)?.residuals;
        let e1 = ols::fit(&x, &wyd)?.residuals;
        let eig = scheme
            .w
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect();
        Ok(Self {
            ee: e0.dot(&e0),
            ef: e0.dot(&e1),
            ff: e1.dot(&e1),
            n,
            t,
            eig,
            x,
            yd,
            wyd,
        })
    }

    fn nt(&self) -> f64 {
        (self.n * self.t) as f64
    }

    fn sigma2(&self, p: f64) -> f64 {
        (self.ee - 2.0 * p * self.ef + p * p * self.ff) / self.nt()
    }

    fn log_det(&self, p: f64) -> f64 {
        self.eig
            .iter()
            .map(|&(re, im)| ((1.0 - p * re).powi(2) + (p * im).powi(2)).sqrt().ln())
            .sum()
    }

    fn loglik(&self, p: f64) -> f64 {
        let nt = self.nt();
        -0.5 * nt * ((2.0 * std::f64::consts::PI).ln() + self.sigma2(p).ln() + 1.0) + self.t as f64 * self.log_det(p)
    }
}

/// Spatial-parameter interval `|p| < 1 / max row sum`, shrunk by a small margin.
pub fn stable_interval(scheme: &WeightScheme) -> (f64, f64) {
    let r = scheme
        .w
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let b = 1.0 / r;
    (-b + EDGE, b - EDGE)
}

/// Evenly spaced points over `[lo, hi]`, endpoints included.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Slope coefficients and residual variance with `p` held fixed (within
/// least squares of `y - p W y` on the non-spatial regressors).
pub fn sdpm_profile_at(
    panel: &DMatrix<f64>,
    scheme: &WeightScheme,
    shocks: &DMatrix<f64>,
    p: f64,
) -> Result<([f64; 3], f64)> {
    let prof = Profile::new(panel, scheme, shocks)?;
    let fit = ols::fit(&prof.x, &(&prof.yd - &prof.wyd * p))?;
    Ok(([fit.coef[0], fit.coef[1], fit.coef[2]], prof.sigma2(p)))
}

/// Concentrated quasi-likelihood maximized over `p` by grid search and
/// golden-section refinement; `(gamma, rho, beta)` profiled by within
/// least squares.
pub fn estimate_sdpm(panel: &DMatrix<f64>, scheme: &WeightScheme, shocks: &DMatrix<f64>) -> Result<SdpmEstimate> {
    let prof = Profile::new(panel, scheme, shocks)?;
    if prof.ee <= 0.0 {
        return Err(Error::SingularDesign("no residual variation".into()));
    }
    let (lo, hi) = stable_interval(scheme);
    let pts = grid(lo, hi, GRID_POINTS);
    let lls: Vec<f64> = pts.iter().map(|&p| prof.loglik(p)).collect();
    let (k, _) = lls
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if k == 0 || k == GRID_POINTS - 1 {
        return Err(Error::NonConcaveLikelihood(pts[k]));
    }
    let refined = golden_max(|p| prof.loglik(p), pts[k - 1], pts[k + 1]);
    let p = if prof.loglik(refined) >= lls[k] { refined } else { pts[k] };

    let h = 1e-4;
    let curv = (prof.loglik(p + h) - 2.0 * prof.loglik(p) + prof.loglik(p - h)) / (h * h);
    let se_p = if curv < 0.0 { (-1.0 / curv).sqrt() } else { f64::NAN };

    let fit = ols::fit(&prof.x, &(&prof.yd - &prof.wyd * p))?;
    let sigma2 = prof.sigma2(p);
    // degrees of freedom lost to the fixed effects
    let nt = prof.nt();
    let scale = ((nt - 3.0) / (nt - prof.n as f64 - 3.0)).max(1.0).sqrt();
    let se = |j: usize| fit.std_err[j] * scale;

    let (t_all, n) = panel.shape();
    let wy = scheme.star_panel(panel);
    let fixed_effects = (0..n)
        .map(|i| {
            (1..t_all)
                .map(|t| {
                    panel[(t, i)]
                        - p * wy[(t, i)]
                        - fit.coef[0] * panel[(t - 1, i)]
                        - fit.coef[1] * wy[(t - 1, i)]
                        - fit.coef[2] * shocks[(t, i)]
                })
                .sum::<f64>()
                / (t_all - 1) as f64
        })
        .collect();

    Ok(SdpmEstimate {
        p,
        gamma: fit.coef[0],
        rho: fit.coef[1],
        beta: fit.coef[2],
        fixed_effects,
        sigma2,
        std_errors: [se_p, se(0), se(1), se(2)],
        log_likelihood: prof.loglik(p),
        interval: (lo, hi),
    })
}

/// Concentrated log-likelihood at `p` (for diagnostics and grid checks).
pub fn sdpm_loglik(panel: &DMatrix<f64>, scheme: &WeightScheme, shocks: &DMatrix<f64>, p: f64) -> Result<f64> {
    Ok(Profile::new(panel, scheme, shocks)?.loglik(p))
}

/// Simulates the spatial panel from `y_0 = initial` with Gaussian errors.
/// `shocks` is `T x N`; row 0 is unused.
pub fn simulate_sdpm(
    params: [f64; 4],
    fixed_effects: &[f64],
    sigma2: f64,
    scheme: &WeightScheme,
    shocks: &DMatrix<f64>,
    initial: &DVector<f64>,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let [p, gamma, rho, beta] = params;
    let n = scheme.len();
    let t_all = shocks.nrows();
    let a = DMatrix::identity(n, n) - &scheme.w * p;
    let lu = a.lu();
    let c = DVector::from_column_slice(fixed_effects);
    let sd = sigma2.max(0.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = DMatrix::zeros(t_all, n);
    y.row_mut(0).copy_from(&initial.transpose());
    for t in 1..t_all {
        let prev: DVector<f64> = y.row(t - 1).transpose();
        let e = DVector::from_fn(n, |_, _| sd * Distribution::<f64>::sample(&StandardNormal, &mut rng));
        let rhs = &prev * gamma + (&scheme.w * &prev) * rho + shocks.row(t).transpose() * beta + &c + e;
        let yt = lu.solve(&rhs).ok_or(Error::SingularG)?;
        y.row_mut(t).copy_from(&yt.transpose());
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasCorrection {
    /// Cap on fixed-point iterations; zero returns the input unchanged.
    pub iterations: usize,
    /// Simulated panels per iteration.
    pub draws: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for BiasCorrection {
    fn default() -> Self {
        Self {
            iterations: 1000,
            draws: 50,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

/// Iterative simulation-based bias subtraction: `theta_{k+1} = theta_hat -
/// (mean re-estimate at theta_k - theta_k)`, with the same simulation seeds
/// at every iteration and shocks held at their observed values.
pub fn bias_correct(
    estimate: &SdpmEstimate,
    panel: &DMatrix<f64>,
    scheme: &WeightScheme,
    shocks: &DMatrix<f64>,
    config: &BiasCorrection,
) -> Result<SdpmEstimate> {
    if config.iterations == 0 || estimate.sigma2 <= f64::EPSILON * estimate.sigma2.abs().max(1.0) {
        return Ok(estimate.clone());
    }
    if config.draws == 0 {
        return Err(Error::InvalidArgument("bias correction needs at least one draw".into()));
    }
    let hat = estimate.params();
    let initial: DVector<f64> = panel.row(0).transpose();
    let (lo, hi) = estimate.interval;
    let mut cur = hat;
    for _ in 0..config.iterations {
        let sims: Vec<[f64; 4]> = (0..config.draws)
            .into_par_iter()
            .filter_map(|d| {
                let seed = config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(d as u64);
                let y = simulate_sdpm(cur, &estimate.fixed_effects, estimate.sigma2, scheme, shocks, &initial, seed).ok()?;
                estimate_sdpm(&y, scheme, shocks).ok().map(|e| e.params())
            })
            .collect();
        if sims.is_empty() {
            return Err(Error::NonConvergence(0));
        }
        let mut next = [0.0; 4];
        for j in 0..4 {
            let mean = sims.iter().map(|s| s[j]).sum::<f64>() / sims.len() as f64;
            next[j] = hat[j] - (mean - cur[j]);
        }
        next[0] = next[0].clamp(lo, hi);
        let step = (0..4).map(|j| (next[j] - cur[j]).abs()).fold(0.0, f64::max);
        cur = next;
        if step < config.tolerance {
            let mut out = estimate.clone();
            out.p = cur[0];
            out.gamma = cur[1];
            out.rho = cur[2];
            out.beta = cur[3];
            return Ok(out);
        }
    }
    Err(Error::NonConvergence(config.iterations))
}

/// Aggregate ARDL on differenced national activity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArdlEstimate {
    pub fit: ArxEstimate,
}

impl ArdlEstimate {
    pub fn lag(&self, l: usize) -> f64 {
        self.fit.beta_at(l)
    }

    pub fn shock(&self) -> f64 {
        self.fit.theta
    }

    pub fn constant(&self) -> f64 {
        self.fit.alpha
    }
}

/// Least squares of the first difference of `activity` on its own `lags`,
/// the contemporaneous shock (unless excluded) and a constant. Both series
/// are monthly and aligned; the shock's first month is dropped with the
/// differencing.
pub fn estimate_ardl_us(activity: &[f64], shock: &[f64], lags: usize, include_shock: bool) -> Result<ArdlEstimate> {
    if activity.len() != shock.len() {
        return Err(Error::DimensionMismatch("activity and shock lengths differ".into()));
    }
    if activity.len() < 2 {
        return Err(Error::SampleTooShort(format!("{} observations", activity.len())));
    }
    let dy: Vec<f64> = activity.windows(2).map(|w| w[1] - w[0]).collect();
    let s = &shock[1..];
    let spec = ArxSpec {
        include_shock,
        ..ArxSpec::ardl(lags)
    };
    let fit = estimate_arx(&dy, &vec![0.0; dy.len()], s, &spec)?;
    Ok(ArdlEstimate { fit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSummary {
    pub mean: f64,
    /// `1/(N-1)` scaling.
    pub sd: f64,
    /// `1/N` scaling.
    pub sd_population: f64,
    pub min: f64,
    pub max: f64,
    pub argmin: StateCode,
    pub argmax: StateCode,
    pub n: usize,
}

pub fn theta_summary(estimates: &[ArxEstimate], labels: &[StateCode]) -> Result<ThetaSummary> {
    let n = estimates.len();
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch("one label per estimate required".into()));
    }
    let th: Vec<f64> = estimates.iter().map(|e| e.theta).collect();
    let mean = th.iter().sum::<f64>() / n as f64;
    let ss: f64 = th.iter().map(|v| (v - mean).powi(2)).sum();
    let (imin, imax) = (0..n).fold((0, 0), |(a, b), i| {
        (if th[i] < th[a] { i } else { a }, if th[i] > th[b] { i } else { b })
    });
    Ok(ThetaSummary {
        mean,
        sd: (ss / (n - 1) as f64).sqrt(),
        sd_population: (ss / n as f64).sqrt(),
        min: th[imin],
        max: th[imax],
        argmin: labels[imin],
        argmax: labels[imax],
        n,
    })
}

fn fmt_se(v: f64, se: f64) -> String {
    if se.is_finite() {
        format!("{v:>9.4} ({se:.4})")
    } else {
        format!("{v:>9.4}")
    }
}

/// Three-panel plain-text comparison table.
pub fn render_comparison(
    sdpm: Option<&SdpmEstimate>,
    ardl: Option<&ArdlEstimate>,
    theta: Option<&ThetaSummary>,
) -> String {
    let mut out = String::new();
    let na = "  not estimated\n";
    let _ = writeln!(out, "(a) Spatial dynamic panel");
    match sdpm {
        Some(e) => {
            let names = ["p (W y_t)", "gamma (y_t-1)", "rho (W y_t-1)", "beta (s_t)"];
            for ((name, v), se) in names.iter().zip(e.params()).zip(e.std_errors) {
                let _ = writeln!(out, "  {name:<16}{}", fmt_se(v, se));
            }
            let _ = writeln!(out, "  {:<16}{:>9.4}", "log-likelihood", e.log_likelihood);
        }
        None => out.push_str(na),
    }
    let _ = writeln!(out, "(b) Aggregate ARDL");
    match ardl {
        Some(a) => {
            let rows = a.fit.coefficient_rows();
            for (name, v, se) in rows.iter().filter(|r| r.0 != "sigma2") {
                let label = match name.as_str() {
                    "alpha" => "constant".to_string(),
                    "theta" => "s_t".to_string(),
                    b => b.replace("beta_", "y_t-"),
                };
                let _ = writeln!(out, "  {label:<16}{}", fmt_se(*v, *se));
            }
            let _ = writeln!(out, "  {:<16}{:>9}", "observations", a.fit.n_obs());
        }
        None => out.push_str(na),
    }
    let _ = writeln!(out, "(c) State shock coefficients");
    match theta {
        Some(t) => {
            let _ = writeln!(out, "  {:<16}{:>9.4}", "mean", t.mean);
            let _ = writeln!(out, "  {:<16}{:>9.4}", "std. dev.", t.sd);
            let _ = writeln!(out, "  {:<16}{:>9.4}  {}", "min", t.min, t.argmin);
            let _ = writeln!(out, "  {:<16}{:>9.4}  {}", "max", t.max, t.argmax);
            let _ = writeln!(out, "  {:<16}{:>9}", "states", t.n);
        }
        None => out.push_str(na),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::code;
    use crate::synth::synthetic_labels;
    use rand::Rng;

    fn ring(n: usize) -> WeightScheme {
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            b[(i, j)] = 1.0;
            b[(j, i)] = 1.0;
        }
        WeightScheme::from_strengths("ring", synthetic_labels(n).unwrap(), &b).unwrap()
    }

    fn shocks(t: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(t, n, |_, _| if rng.random::<f64>() < 0.2 { rng.random::<f64>() } else { 0.0 })
    }

    fn panel(params: [f64; 4], n: usize, t: usize, seed: u64) -> (WeightScheme, DMatrix<f64>, DMatrix<f64>) {
        let w = ring(n);
        let s = shocks(t, n, seed + 1000);
        let fe: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 - 0.3).collect();
        let y = simulate_sdpm(params, &fe, 1.0, &w, &s, &DVector::zeros(n), seed).unwrap();
        (w, y, s)
    }

    #[test]
    fn within_is_idempotent() {
        let m = DMatrix::from_fn(7, 3, |i, j| (i * i + 3 * j) as f64 * 0.37);
        let once = within(&m);
        let twice = within(&once);
        assert!((once - twice).amax() < 1e-14);
    }

    #[test]
    fn recovers_parameters_on_long_panel() {
        let truth = [0.5, 0.2, -0.1, -0.05];
        let (w, y, s) = panel(truth, 10, 2000, 3);
        let e = estimate_sdpm(&y, &w, &s).unwrap();
        for (j, (est, tr)) in e.params().iter().zip(truth).enumerate() {
            assert!((est - tr).abs() < 4.0 * e.std_errors[j] + 0.01, "param {j}: {est} vs {tr}");
        }
        assert!(e.p.abs() < 1.0);
    }

    #[test]
    fn optimum_dominates_coarse_grid() {
        let (w, y, s) = panel([0.3, 0.3, 0.1, -0.2], 8, 150, 5);
        let e = estimate_sdpm(&y, &w, &s).unwrap();
        let (lo, hi) = e.interval;
        for p in grid(lo, hi, 21) {
            assert!(e.log_likelihood >= sdpm_loglik(&y, &w, &s, p).unwrap());
        }
    }

    #[test]
    fn zero_p_profile_is_fixed_effects_ols() {
        let (w, y, s) = panel([0.0, 0.4, 0.2, -0.3], 6, 120, 8);
        let (b, _) = sdpm_profile_at(&y, &w, &s, 0.0).unwrap();
        // dummy-variable regression as the independent oracle
        let (t_all, n) = y.shape();
        let wy = w.star_panel(&y);
        let rows = (t_all - 1) * n;
        let mut x = DMatrix::zeros(rows, 3 + n);
        let mut yv = DVector::zeros(rows);
        let mut r = 0;
        for i in 0..n {
            for t in 1..t_all {
                x[(r, 0)] = y[(t - 1, i)];
                x[(r, 1)] = wy[(t - 1, i)];
                x[(r, 2)] = s[(t, i)];
                x[(r, 3 + i)] = 1.0;
                yv[r] = y[(t, i)];
                r += 1;
            }
        }
        let fit = ols::fit(&x, &yv).unwrap();
        for j in 0..3 {
            assert!((b[j] - fit.coef[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn bias_correction_edge_cases() {
        let (w, y, s) = panel([0.2, 0.3, 0.0, -0.1], 5, 60, 2);
        let e = estimate_sdpm(&y, &w, &s).unwrap();
        let cfg = BiasCorrection {
            iterations: 0,
            ..Default::default()
        };
        assert_eq!(bias_correct(&e, &y, &w, &s, &cfg).unwrap(), e);
        let mut quiet = e.clone();
        quiet.sigma2 = 0.0;
        let cfg = BiasCorrection {
            iterations: 5,
            draws: 4,
            ..Default::default()
        };
        assert_eq!(bias_correct(&quiet, &y, &w, &s, &cfg).unwrap(), quiet);
        let cfg = BiasCorrection {
            iterations: 1,
            draws: 4,
            tolerance: 0.0,
            seed: 1,
        };
        assert!(matches!(bias_correct(&e, &y, &w, &s, &cfg), Err(Error::NonConvergence(1))));
    }

    #[test]
    fn ardl_matches_arx_without_foreign_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 300;
        let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 0.3).collect();
        let mut level = vec![0.0; n];
        let mut d = vec![0.0; n];
        for t in 1..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            d[t] = 0.01 + 0.5 * d[t - 1] + if t > 1 { 0.1 * d[t - 2] } else { 0.0 } - 0.2 * s[t] + 0.1 * e;
            level[t] = level[t - 1] + d[t];
        }
        let a = estimate_ardl_us(&level, &s, 2, true).unwrap();
        let dy: Vec<f64> = level.windows(2).map(|w| w[1] - w[0]).collect();
        let direct = estimate_arx(&dy, &vec![0.0; dy.len()], &s[1..], &ArxSpec::ardl(2)).unwrap();
        assert_eq!(a.fit.beta, direct.beta);
        assert_eq!(a.shock(), direct.theta);
        assert_eq!(a.fit.n_obs(), n - 3);
        assert!(matches!(
            estimate_ardl_us(&level, &vec![0.0; n], 2, true),
            Err(Error::SingularDesign(_))
        ));
        let no_shock = estimate_ardl_us(&level, &vec![0.0; n], 2, false).unwrap();
        assert_eq!(no_shock.shock(), 0.0);
    }

    #[test]
    fn theta_moments() {
        let e = |t: f64| ArxEstimate::from_coefficients(0.0, vec![], 0.0, vec![], t, 1.0);
        let labels = [code("LA"), code("ME")];
        let s = theta_summary(&[e(-1.0), e(1.0)], &labels).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.sd_population, 1.0);
        assert_eq!(s.sd, 2f64.sqrt());
        assert_eq!((s.min, s.max), (-1.0, 1.0));
        assert_eq!((s.argmin, s.argmax), (code("LA"), code("ME")));
        let same = theta_summary(&[e(0.3), e(0.3), e(0.3)], &[code("AA"), code("BB"), code("CC")]).unwrap();
        assert_eq!(same.sd, 0.0);
        assert!(matches!(theta_summary(&[e(0.1)], &[code("AA")]), Err(Error::TooFewStates(1))));
    }

    #[test]
    fn table_has_three_panels() {
        let txt = render_comparison(None, None, None);
        assert!(txt.contains("(a)") && txt.contains("(b)") && txt.contains("(c)"));
    }
}
