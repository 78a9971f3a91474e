//! Least squares via Householder QR on column-normalized designs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot below which the design is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coef: DVector<f64>,
    pub std_err: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    /// `rss / (n - k)`.
    pub sigma2: f64,
    pub n_obs: usize,
    pub n_params: usize,
}

/// Ordinary least squares of `y` on the columns of `x`.
///
/// Columns are scaled to unit norm before factorization, so rescaling a
/// regressor by a power of two rescales its coefficient exactly.
pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows but response has {}",
            y.len()
        )));
    }
    if n <= k {
        return Err(Error::SampleTooShort(format!("{n} observations for {k} regressors")));
    }

    let norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0 || !v.is_finite()) {
        return Err(Error::SingularDesign(format!(": column {j} is zero or non-finite")));
    }
    let mut xs = x.clone();
    for (j, &nj) in norms.iter().enumerate() {
        xs.column_mut(j).unscale_mut(nj);
    }

    let qr = xs.qr();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)].abs() < RANK_TOL {
            return Err(Error::SingularDesign(format!(": column {j} is collinear")));
        }
    }
    let qty = qr.q().transpose() * y;
    let scaled = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign(String::new()))?;
    let coef = DVector::from_iterator(k, scaled.iter().zip(&norms).map(|(b, nj)| b / nj));

    let residuals = y - x * &coef;
    let rss = residuals.norm_squared();
    let sigma2 = rss / (n - k) as f64;

    // (X'X)^{-1} = D^{-1} R^{-1} R^{-T} D^{-1}
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularDesign(String::new()))?;
    let std_err = DVector::from_iterator(
        k,
        (0..k).map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt() / norms[j]),
    );

    Ok(OlsFit {
        coef,
        std_err,
        residuals,
        rss,
        sigma2,
        n_obs: n,
        n_params: k,
    })
}

/// Classical F test of `q` exclusion restrictions given the restricted and
/// unrestricted residual sums of squares.
pub fn f_test(rss_restricted: f64, rss_unrestricted: f64, q: usize, df_resid: usize) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, FisherSnedecor};
    let f = ((rss_restricted - rss_unrestricted) / q as f64) / (rss_unrestricted / df_resid as f64);
    let f = f.max(0.0);
    let p = FisherSnedecor::new(q as f64, df_resid as f64)
        .map(|d| 1.0 - d.cdf(f))
        .unwrap_or(f64::NAN);
    (f, p)
}
