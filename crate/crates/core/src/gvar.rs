//! Stacking unit equations into the system
//! `G y_t = alpha + sum_l H_l y_{t-l} + Theta s_t + u_t`
//! and solving it into the reduced form
//! `y_t = c + sum_l F_l y_{t-l} + Lambda s_t + eps_t`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{estimate_units, ArxEstimate, ArxSpec};
use crate::states::StateCode;
use crate::weights::{write_labeled_matrix, WeightScheme};

pub const DEFAULT_COND_BOUND: f64 = 1e10;
pub const DEFAULT_STABILITY_TOL: f64 = 1e-8;

/// Structural (stacked) form.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem {
    pub labels: Vec<StateCode>,
    pub g: DMatrix<f64>,
    /// `H_1..H_p`.
    pub h: Vec<DMatrix<f64>>,
    /// Diagonal of `Theta`.
    pub theta: DVector<f64>,
    pub alpha: DVector<f64>,
    /// Unit residual variances.
    pub sigma2: DVector<f64>,
}

impl StackedSystem {
    pub fn lags(&self) -> usize {
        self.h.len()
    }

    pub fn theta_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.theta)
    }
}

/// Stacks unit equations. Row `i` of `G` is `(1, -gamma0_i) W_i`, row `i` of
/// `H_l` is `(beta_il, gamma_li) W_i`; shorter lag structures are zero-padded
/// to the system maximum.
pub fn assemble(estimates: &[ArxEstimate], scheme: &WeightScheme) -> Result<StackedSystem> {
    let n = scheme.len();
    if estimates.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} estimates for {n} units",
            estimates.len()
        )));
    }
    let p = estimates.iter().map(|e| e.spec.max_lag()).max().unwrap_or(0);
    let mut g = DMatrix::identity(n, n);
    let mut h = vec![DMatrix::zeros(n, n); p];
    for (i, est) in estimates.iter().enumerate() {
        let w = scheme.w.row(i);
        for j in 0..n {
            g[(i, j)] -= est.gamma0 * w[j];
        }
        for (l, hl) in h.iter_mut().enumerate() {
            let (b, c) = (est.beta_at(l + 1), est.gamma_at(l + 1));
            for j in 0..n {
                hl[(i, j)] = c * w[j];
            }
            hl[(i, i)] += b;
        }
    }
    Ok(StackedSystem {
        labels: scheme.labels.clone(),
        g,
        h,
        theta: DVector::from_iterator(n, estimates.iter().map(|e| e.theta)),
        alpha: DVector::from_iterator(n, estimates.iter().map(|e| e.alpha)),
        sigma2: DVector::from_iterator(n, estimates.iter().map(|e| e.sigma2)),
    })
}

/// Reduced-form system.
#[derive(Debug, Clone, PartialEq)]
pub struct GvarSystem {
    pub stacked: StackedSystem,
    pub c: DVector<f64>,
    /// `F_1..F_p`.
    pub f: Vec<DMatrix<f64>>,
    pub lambda: DMatrix<f64>,
    pub sigma_eps: DMatrix<f64>,
    pub g_condition: f64,
}

impl GvarSystem {
    pub fn n(&self) -> usize {
        self.stacked.labels.len()
    }

    pub fn lags(&self) -> usize {
        self.f.len()
    }

    pub fn labels(&self) -> &[StateCode] {
        &self.stacked.labels
    }

    /// Solves `G z = x` for a vector (structural shock to reduced-form error).
    pub fn solve_g(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.stacked.g.clone().lu().solve(x).ok_or(Error::SingularG)
    }

    /// One step of the reduced-form recursion given lagged values
    /// (`lagged[0]` is `y_{t-1}`), the shock and a reduced-form error.
    pub fn step(&self, lagged: &[&DVector<f64>], shock: &DVector<f64>, eps: &DVector<f64>) -> DVector<f64> {
        let mut y = &self.c + &self.lambda * shock + eps;
        for (fl, yl) in self.f.iter().zip(lagged) {
            y += fl * *yl;
        }
        y
    }
}

fn condition_number(g: &DMatrix<f64>) -> f64 {
    let sv = g.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves the stacked form through an LU factorization of `G`.
pub fn solve_reduced_form(stacked: StackedSystem, cond_bound: f64) -> Result<GvarSystem> {
    let n = stacked.labels.len();
    if stacked.g.shape() != (n, n) {
        return Err(Error::DimensionMismatch("G is not N x N".into()));
    }
    let cond = condition_number(&stacked.g);
    if !cond.is_finite() {
        return Err(Error::SingularG);
    }
    if cond > cond_bound {
        return Err(Error::IllConditioned { cond, bound: cond_bound });
    }
    let lu = stacked.g.clone().lu();
    let solve = |m: &DMatrix<f64>| lu.solve(m).ok_or(Error::SingularG);
    let f = stacked.h.iter().map(solve).collect::<Result<Vec<_>>>()?;
    let lambda = solve(&stacked.theta_matrix())?;
    let c = lu.solve(&stacked.alpha).ok_or(Error::SingularG)?;
    let sd = DMatrix::from_diagonal(&stacked.sigma2.map(|v| v.max(0.0).sqrt()));
    let a = solve(&sd)?;
    let raw = &a * a.transpose();
    let sigma_eps = (&raw + raw.transpose()) * 0.5;
    Ok(GvarSystem {
        stacked,
        c,
        f,
        lambda,
        sigma_eps,
        g_condition: cond,
    })
}

/// Unit estimation, stacking and reduced-form solution in one call.
pub fn fit_gvar(
    y: &DMatrix<f64>,
    shocks: &DMatrix<f64>,
    scheme: &WeightScheme,
    specs: &[ArxSpec],
    start: usize,
    cond_bound: f64,
) -> Result<(Vec<ArxEstimate>, GvarSystem)> {
    let estimates = estimate_units(y, shocks, scheme, specs, start)?;
    let system = solve_reduced_form(assemble(&estimates, scheme)?, cond_bound)?;
    Ok((estimates, system))
}

/// Companion matrix of the reduced-form lag polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionForm {
    pub matrix: DMatrix<f64>,
    pub spectral_radius: f64,
}

pub fn companion(f: &[DMatrix<f64>]) -> CompanionForm {
    let p = f.len();
    if p == 0 {
        return CompanionForm {
            matrix: DMatrix::zeros(0, 0),
            spectral_radius: 0.0,
        };
    }
    let n = f[0].nrows();
    let mut m = DMatrix::zeros(n * p, n * p);
    for (l, fl) in f.iter().enumerate() {
        m.view_mut((0, l * n), (n, n)).copy_from(fl);
    }
    for b in 1..p {
        m.view_mut((b * n, (b - 1) * n), (n, n)).fill_with_identity();
    }
    let spectral_radius = spectral_radius(&m);
    CompanionForm {
        matrix: m,
        spectral_radius,
    }
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub spectral_radius: f64,
    pub stable: bool,
}

/// Stable iff the companion spectral radius is below `1 - tol`.
pub fn stability(system: &GvarSystem, tol: f64) -> Stability {
    let r = companion(&system.f).spectral_radius;
    Stability {
        spectral_radius: r,
        stable: r < 1.0 - tol,
    }
}

/// Writes every system matrix as dense labeled text into `dir`, returning
/// the file names written.
pub fn export_matrices(system: &GvarSystem, dir: &std::path::Path) -> Result<Vec<String>> {
    let labels = system.labels();
    let mut written = Vec::new();
    let mut put = |name: String, m: &DMatrix<f64>| -> Result<()> {
        let file = std::fs::File::create(dir.join(&name))?;
        write_labeled_matrix(labels, m, std::io::BufWriter::new(file))?;
        written.push(name);
        Ok(())
    };
    put("G.csv".into(), &system.stacked.g)?;
    for (l, h) in system.stacked.h.iter().enumerate() {
        put(format!("H{}.csv", l + 1), h)?;
    }
    put("Theta.csv".into(), &system.stacked.theta_matrix())?;
    for (l, f) in system.f.iter().enumerate() {
        put(format!("F{}.csv", l + 1), f)?;
    }
    put("Lambda.csv".into(), &system.lambda)?;
    put("Sigma_eps.csv".into(), &system.sigma_eps)?;

    let file = std::fs::File::create(dir.join("intercepts.csv"))?;
    write_vectors(
        labels,
        &[("alpha", &system.stacked.alpha), ("c", &system.c), ("sigma2", &system.stacked.sigma2)],
        std::io::BufWriter::new(file),
    )?;
    written.push("intercepts.csv".into());
    Ok(written)
}

fn write_vectors<W: Write>(labels: &[StateCode], cols: &[(&str, &DVector<f64>)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["unit".to_string()];
    header.extend(cols.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header)?;
    for (i, l) in labels.iter().enumerate() {
        let mut rec = vec![l.to_string()];
        rec.extend(cols.iter().map(|(_, v)| v[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::code;

    fn swap2() -> WeightScheme {
        WeightScheme::from_matrix(
            "swap",
            vec![code("AA"), code("BB")],
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap()
    }

    fn est(beta: f64, g0: f64, g1: f64, theta: f64) -> ArxEstimate {
        ArxEstimate::from_coefficients(0.1, vec![beta], g0, vec![g1], theta, 1.0)
    }

    #[test]
    fn two_unit_stacking() {
        let s = assemble(&[est(0.5, 0.3, 0.1, -0.2), est(0.4, 0.2, 0.05, -0.1)], &swap2()).unwrap();
        assert_eq!(s.g, DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.2, 1.0]));
        assert_eq!(s.h[0], DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.05, 0.4]));
        assert_eq!(s.theta_matrix(), DMatrix::from_row_slice(2, 2, &[-0.2, 0.0, 0.0, -0.1]));
    }

    #[test]
    fn zero_contemporaneous_gives_identity_g() {
        let s = assemble(&[est(0.5, 0.0, 0.1, -0.2), est(0.4, 0.0, 0.05, -0.1)], &swap2()).unwrap();
        assert_eq!(s.g, DMatrix::identity(2, 2));
        let sys = solve_reduced_form(s.clone(), DEFAULT_COND_BOUND).unwrap();
        assert_eq!(sys.f[0], s.h[0]);
        assert_eq!(sys.lambda, s.theta_matrix());
    }

    #[test]
    fn hand_inverted_two_unit_system() {
        let s = assemble(&[est(0.5, 0.5, 0.1, -0.2), est(0.4, 0.5, 0.05, -0.1)], &swap2()).unwrap();
        let sys = solve_reduced_form(s, DEFAULT_COND_BOUND).unwrap();
        let g_inv = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]) / 0.75;
        let expect = &g_inv * DMatrix::from_row_slice(2, 2, &[-0.2, 0.0, 0.0, -0.1]);
        assert!((&sys.lambda - &expect).amax() < 1e-15);
        assert!(sys.lambda[(0, 1)] != 0.0 && sys.lambda[(1, 0)] != 0.0);
    }

    #[test]
    fn padding_to_uniform_lag_order() {
        let short = ArxEstimate::from_coefficients(0.0, vec![0.3], 0.2, vec![], 0.1, 1.0);
        let long = ArxEstimate::from_coefficients(0.0, vec![0.3, 0.1], 0.2, vec![0.05, 0.02], 0.1, 1.0);
        let s = assemble(&[short, long], &swap2()).unwrap();
        assert_eq!(s.lags(), 2);
        assert_eq!(s.h[1].row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert_eq!(s.h[1].row(1).iter().copied().collect::<Vec<_>>(), vec![0.02, 0.1]);
    }

    #[test]
    fn singular_and_ill_conditioned_g() {
        let s = assemble(&[est(0.5, 1.0, 0.0, 0.1), est(0.5, 1.0, 0.0, 0.1)], &swap2()).unwrap();
        assert!(matches!(solve_reduced_form(s, DEFAULT_COND_BOUND), Err(Error::SingularG)));
        let s = assemble(&[est(0.5, 1.0, 0.0, 0.1), est(0.5, 1.0 - 1e-12, 0.0, 0.1)], &swap2()).unwrap();
        assert!(matches!(
            solve_reduced_form(s, DEFAULT_COND_BOUND),
            Err(Error::IllConditioned { .. }) | Err(Error::SingularG)
        ));
        assert!(matches!(
            assemble(&[est(0.5, 0.0, 0.0, 0.1)], &swap2()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn stability_of_simple_companions() {
        let half = companion(&[DMatrix::identity(3, 3) * 0.5]);
        assert!((half.spectral_radius - 0.5).abs() < 1e-12);
        let unit = companion(&[DMatrix::identity(3, 3)]);
        assert!((unit.spectral_radius - 1.0).abs() < 1e-12);
        assert!(!(unit.spectral_radius < 1.0 - DEFAULT_STABILITY_TOL));
        let two = companion(&[DMatrix::identity(2, 2) * 0.1, DMatrix::identity(2, 2) * 0.3]);
        assert_eq!(two.matrix.view((2, 0), (2, 2)), DMatrix::<f64>::identity(2, 2));
        // roots of z^2 - 0.1 z - 0.3: 0.6 and -0.5
        assert!((two.spectral_radius - 0.6).abs() < 1e-12);
    }

    #[test]
    fn sigma_eps_is_symmetric_psd() {
        let s = assemble(&[est(0.5, 0.5, 0.1, -0.2), est(0.4, 0.3, 0.05, -0.1)], &swap2()).unwrap();
        let sys = solve_reduced_form(s, DEFAULT_COND_BOUND).unwrap();
        assert_eq!(sys.sigma_eps, sys.sigma_eps.transpose());
        assert!(sys.sigma_eps.clone().symmetric_eigenvalues().iter().all(|&v| v >= -1e-12));
    }
}
