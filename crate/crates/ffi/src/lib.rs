//! C ABI over the estimation core.
//!
//! Objects are opaque handles created by `gvs_*_new`/`gvs_model_estimate`
//! and released with the matching `*_free`. Every fallible function returns
//! a status code (`GVS_OK` on success); the message of the last failure on
//! the calling thread is available from `gvs_last_error`. Matrices are
//! dense row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gvar_spill::bootstrap::{bootstrap_irf, BootstrapConfig, Sample};
use gvar_spill::estimation::{ArxEstimate, ArxSpec};
use gvar_spill::gvar::{companion, fit_gvar, GvarSystem, DEFAULT_COND_BOUND};
use gvar_spill::irf::{compute_irf, second_round, ShockScenario};
use gvar_spill::states::StateCode;
use gvar_spill::synth::synthetic_labels;
use gvar_spill::weights::WeightScheme;
use gvar_spill::Error;
use nalgebra::{DMatrix, DVector};

pub const GVS_OK: i32 = 0;
pub const GVS_NULL_POINTER: i32 = 1;
pub const GVS_INVALID_ARGUMENT: i32 = 2;
pub const GVS_DIMENSION_MISMATCH: i32 = 3;
pub const GVS_ISOLATED_UNIT: i32 = 4;
pub const GVS_SINGULAR_DESIGN: i32 = 5;
pub const GVS_SAMPLE_TOO_SHORT: i32 = 6;
pub const GVS_SINGULAR_G: i32 = 7;
pub const GVS_ILL_CONDITIONED: i32 = 8;
pub const GVS_UNSTABLE: i32 = 9;
pub const GVS_BOOTSTRAP_FAILED: i32 = 10;
pub const GVS_OTHER: i32 = 98;
pub const GVS_PANIC: i32 = 99;

/// Row-normalized cross-unit weight matrix.
pub struct GvsWeights {
    inner: WeightScheme,
}

/// Estimated system together with its estimation sample.
pub struct GvsModel {
    scheme: WeightScheme,
    specs: Vec<ArxSpec>,
    y: DMatrix<f64>,
    s: DMatrix<f64>,
    start: usize,
    estimates: Vec<ArxEstimate>,
    system: GvarSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::IndexOutOfRange { .. } | Error::UnknownLabel(_) => GVS_INVALID_ARGUMENT,
        Error::DimensionMismatch(_) => GVS_DIMENSION_MISMATCH,
        Error::IsolatedUnit(_) => GVS_ISOLATED_UNIT,
        Error::SingularDesign(_) => GVS_SINGULAR_DESIGN,
        Error::SampleTooShort(_) => GVS_SAMPLE_TOO_SHORT,
        Error::SingularG => GVS_SINGULAR_G,
        Error::IllConditioned { .. } => GVS_ILL_CONDITIONED,
        Error::UnstableSystem(_) => GVS_UNSTABLE,
        Error::TooManyUnstableReplications { .. } | Error::EmptyResiduals => GVS_BOOTSTRAP_FAILED,
        _ => GVS_OTHER,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GVS_OK,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GVS_NULL_POINTER
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(format!("{}: {e}", e.kind()));
            code_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            GVS_PANIC
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn labels(n: usize, names: *const *const c_char) -> Result<Vec<StateCode>, Failure> {
    if names.is_null() {
        return Ok(synthetic_labels(n)?);
    }
    (0..n)
        .map(|i| {
            let p = *names.add(i);
            if p.is_null() {
                return Err(Failure::Null("label"));
            }
            let s = CStr::from_ptr(p).to_string_lossy();
            s.parse::<StateCode>().map_err(Failure::Core)
        })
        .collect()
}

fn row_major(m: &DMatrix<f64>, out: &mut [f64]) {
    let c = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..c {
            out[i * c + j] = m[(i, j)];
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gvs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gvs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds weights by row-normalizing non-negative link strengths (`n x n`,
/// diagonal ignored). `names` holds `n` two-letter codes or is NULL for
/// default codes.
///
/// # Safety
/// `strengths` must point to `n * n` doubles, `names` (if not NULL) to `n`
/// C strings, and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvs_weights_from_strengths(
    n: usize,
    strengths: *const f64,
    names: *const *const c_char,
    out: *mut *mut GvsWeights,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let b = DMatrix::from_row_slice(n, n, slice(strengths, n * n, "strengths")?);
        let inner = WeightScheme::from_strengths("ffi", labels(n, names)?, &b)?;
        *out = Box::into_raw(Box::new(GvsWeights { inner }));
        Ok(())
    })
}

/// Wraps an already row-normalized matrix with zero diagonal.
///
/// # Safety
/// As for [`gvs_weights_from_strengths`].
#[no_mangle]
pub unsafe extern "C" fn gvs_weights_from_matrix(
    n: usize,
    w: *const f64,
    names: *const *const c_char,
    out: *mut *mut GvsWeights,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let m = DMatrix::from_row_slice(n, n, slice(w, n * n, "w")?);
        let inner = WeightScheme::from_matrix("ffi", labels(n, names)?, m)?;
        *out = Box::into_raw(Box::new(GvsWeights { inner }));
        Ok(())
    })
}

/// Releases weights; NULL is ignored.
///
/// # Safety
/// `w` must come from a `gvs_weights_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gvs_weights_free(w: *mut GvsWeights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Estimates every unit equation with `lags` own and foreign lags on a
/// `t x n` panel `y` with shocks `s`, then solves the reduced form.
///
/// # Safety
/// `weights` must be a live handle; `y` and `s` must point to `t * n`
/// doubles; `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_estimate(
    weights: *const GvsWeights,
    t: usize,
    n: usize,
    y: *const f64,
    s: *const f64,
    lags: usize,
    out: *mut *mut GvsModel,
) -> i32 {
    guard(|| {
        let w = handle(weights, "weights")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if n != w.inner.len() {
            return Err(Error::DimensionMismatch(format!("{n} columns for {} units", w.inner.len())).into());
        }
        if lags == 0 {
            return Err(Error::InvalidArgument("lags must be at least 1".into()).into());
        }
        let y = DMatrix::from_row_slice(t, n, slice(y, t * n, "y")?);
        let s = DMatrix::from_row_slice(t, n, slice(s, t * n, "s")?);
        let specs = vec![ArxSpec::new(lags, lags); n];
        let (estimates, system) = fit_gvar(&y, &s, &w.inner, &specs, lags, DEFAULT_COND_BOUND)?;
        *out = Box::into_raw(Box::new(GvsModel {
            scheme: w.inner.clone(),
            specs,
            y,
            s,
            start: lags,
            estimates,
            system,
        }));
        Ok(())
    })
}

/// Releases a model; NULL is ignored.
///
/// # Safety
/// `m` must come from [`gvs_model_estimate`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_free(m: *mut GvsModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of units, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_units(m: *const GvsModel) -> usize {
    m.as_ref().map_or(0, |m| m.system.n())
}

/// Reduced-form lag order, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_lags(m: *const GvsModel) -> usize {
    m.as_ref().map_or(0, |m| m.system.lags())
}

/// Copies the `n x n` shock-impact matrix.
///
/// # Safety
/// `m` must be a live handle and `out` must hold `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_lambda(m: *const GvsModel, out: *mut f64) -> i32 {
    guard(|| {
        let m = handle(m, "model")?;
        let n = m.system.n();
        row_major(&m.system.lambda, slice_mut(out, n * n, "out")?);
        Ok(())
    })
}

/// Copies reduced-form lag matrix `lag` (1-based).
///
/// # Safety
/// `m` must be a live handle and `out` must hold `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_f(m: *const GvsModel, lag: usize, out: *mut f64) -> i32 {
    guard(|| {
        let m = handle(m, "model")?;
        let n = m.system.n();
        if lag == 0 || lag > m.system.lags() {
            return Err(Error::IndexOutOfRange {
                index: lag,
                len: m.system.lags(),
            }
            .into());
        }
        row_major(&m.system.f[lag - 1], slice_mut(out, n * n, "out")?);
        Ok(())
    })
}

/// Copies the estimated shock coefficient of every unit.
///
/// # Safety
/// `m` must be a live handle and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_theta(m: *const GvsModel, out: *mut f64) -> i32 {
    guard(|| {
        let m = handle(m, "model")?;
        let o = slice_mut(out, m.system.n(), "out")?;
        for (v, e) in o.iter_mut().zip(&m.estimates) {
            *v = e.theta;
        }
        Ok(())
    })
}

/// Writes the companion-matrix spectral radius.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_spectral_radius(m: *const GvsModel, out: *mut f64) -> i32 {
    guard(|| {
        let m = handle(m, "model")?;
        let o = slice_mut(out, 1, "out")?;
        o[0] = companion(&m.system.f).spectral_radius;
        Ok(())
    })
}

/// Responses to a one-period shock `scenario` (length `n`) for horizons
/// `0..=horizon`, as `(horizon + 1) x n`; cumulated when `cumulated` is
/// nonzero.
///
/// # Safety
/// `m` must be a live handle, `scenario` must hold `n` doubles and `out`
/// `(horizon + 1) * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_irf(
    m: *const GvsModel,
    scenario: *const f64,
    horizon: usize,
    cumulated: i32,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let m = handle(m, "model")?;
        let n = m.system.n();
        let sc = ShockScenario::new(DVector::from_column_slice(slice(scenario, n, "scenario")?))?;
        let irf = compute_irf(&m.system, &sc, horizon)?;
        let r = if cumulated != 0 { &irf.cumulated } else { &irf.responses };
        row_major(r, slice_mut(out, (horizon + 1) * n, "out")?);
        Ok(())
    })
}

/// Cumulated own-state responses of `unit` with and without feedback
/// from other units, each of length `horizon + 1`.
///
/// # Safety
/// `m` must be a live handle; `out_gvar` and `out_muted` must each hold
/// `horizon + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvs_model_second_round(
    m: *const GvsModel,
    unit: usize,
    horizon: usize,
    out_gvar: *mut f64,
    out_muted: *mut f64,
) -> i32 {
    guard(|| {
        let m = handle(m, "model")?;
        let sc = ShockScenario::single(m.system.n(), unit, 1.0)?;
        let sr = second_round(&m.system, &m.estimates, &sc, horizon)?;
        slice_mut(out_gvar, horizon + 1, "out_gvar")?.copy_from_slice(&sr.gvar_cumulated);
        slice_mut(out_muted, horizon + 1, "out_muted")?.copy_from_slice(&sr.muted_cumulated);
        Ok(())
    })
}

/// Residual bootstrap of the cumulated responses to `scenario`: bootstrap
/// mean and the `p_lo`/`p_hi` percentiles, each `(horizon + 1) x n`.
/// `discarded` receives the number of unstable replications dropped.
///
/// # Safety
/// `m` must be a live handle, `scenario` must hold `n` doubles, the three
/// output arrays `(horizon + 1) * n` doubles each, and `discarded` must be
/// writable or NULL.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gvs_model_bootstrap(
    m: *const GvsModel,
    scenario: *const f64,
    horizon: usize,
    replications: usize,
    seed: u64,
    p_lo: f64,
    p_hi: f64,
    out_mean: *mut f64,
    out_lo: *mut f64,
    out_hi: *mut f64,
    discarded: *mut usize,
) -> i32 {
    guard(|| {
        let m = handle(m, "model")?;
        let n = m.system.n();
        let sc = ShockScenario::new(DVector::from_column_slice(slice(scenario, n, "scenario")?))?;
        let cfg = BootstrapConfig {
            replications,
            percentiles: vec![p_lo, p_hi],
            seed,
            horizon,
            allow_unstable: false,
        };
        let sample = Sample {
            y: &m.y,
            shocks: &m.s,
            start: m.start,
        };
        let b = bootstrap_irf(&sample, &m.scheme, &m.specs, &sc, &cfg, None)?;
        let len = (horizon + 1) * n;
        row_major(&b.states.mean, slice_mut(out_mean, len, "out_mean")?);
        row_major(&b.states.percentiles[0].1, slice_mut(out_lo, len, "out_lo")?);
        row_major(&b.states.percentiles[1].1, slice_mut(out_hi, len, "out_hi")?);
        if !discarded.is_null() {
            *discarded = b.discarded;
        }
        Ok(())
    })
}
