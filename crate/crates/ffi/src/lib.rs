//! C interface to `stablefit`.
//!
//! Every fallible function returns an [`SfStatus`]. On failure the message
//! of the last error on the calling thread is available from
//! `sf_last_error_message`. Objects created by `*_new`, `sf_fit` and
//! `sf_rolling_fit` are owned by the caller and released with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use chrono::{Days, NaiveDate};
use stablefit::density::{pdf_at, pdf_grid};
use stablefit::estimator::{normalize_and_fit, EstimationConfig, FitFlags, FitResult, KSelection};
use stablefit::market::{rolling_fit, RollingResult, ReturnSeries};
use stablefit::sampler::sample;
use stablefit::{StableError, StableParams};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Convergence = 3,
    EmptyData = 4,
    Degenerate = 5,
    NearAlphaOne = 6,
    BranchCut = 7,
    AlphaOutOfRange = 8,
    TooShort = 9,
    InvalidGrid = 10,
    Parse = 11,
    NoData = 12,
    EmptyRange = 13,
    Io = 14,
    OutOfBounds = 15,
    Panic = 16,
}

pub const SF_FLAG_ALPHA_CLAMPED: u32 = 1;
pub const SF_FLAG_BETA_CLAMPED: u32 = 1 << 1;
pub const SF_FLAG_NEAR_ALPHA_ONE: u32 = 1 << 2;
pub const SF_FLAG_DEGENERATE_DATA: u32 = 1 << 3;
pub const SF_FLAG_NOT_CONVERGED: u32 = 1 << 4;
pub const SF_FLAG_SMALL_SAMPLE: u32 = 1 << 5;
pub const SF_FLAG_FIT_FAILED: u32 = 1 << 6;

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_last_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut buf = e.borrow_mut();
        buf.clear();
        buf.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &StableError) -> SfStatus {
    match err.root() {
        StableError::Domain { .. } => SfStatus::Domain,
        StableError::Convergence { .. } => SfStatus::Convergence,
        StableError::EmptyData => SfStatus::EmptyData,
        StableError::Degenerate(_) => SfStatus::Degenerate,
        StableError::NearAlphaOne { .. } => SfStatus::NearAlphaOne,
        StableError::BranchCut { .. } => SfStatus::BranchCut,
        StableError::AlphaOutOfRange { .. } => SfStatus::AlphaOutOfRange,
        StableError::TooShort { .. } => SfStatus::TooShort,
        StableError::InvalidGrid(_) => SfStatus::InvalidGrid,
        StableError::Parse(_) => SfStatus::Parse,
        StableError::NoData => SfStatus::NoData,
        StableError::EmptyRange(_) => SfStatus::EmptyRange,
        StableError::Io(_) | StableError::Context { .. } => SfStatus::Io,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), SfStatusError>>(f: F) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(SfStatusError(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SfStatus::Panic
        }
    }
}

struct SfStatusError(SfStatus, String);

impl From<StableError> for SfStatusError {
    fn from(e: StableError) -> Self {
        SfStatusError(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> SfStatusError {
    SfStatusError(SfStatus::NullPointer, format!("{name} is null"))
}

unsafe fn obj<'a, T>(p: *const T, name: &str) -> Result<&'a T, SfStatusError> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, SfStatusError> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn input_slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], SfStatusError> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn output_slice<'a>(p: *mut f64, n: usize, name: &str) -> Result<&'a mut [f64], SfStatusError> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

/// Opaque stable-law parameters.
pub struct SfParams {
    inner: StableParams,
}

/// Opaque result of a full fit.
pub struct SfFitResult {
    inner: FitResult,
}

/// Opaque result of a rolling fit.
pub struct SfRolling {
    inner: RollingResult,
}

/// Estimator settings. `k_max <= 0` selects the modulus-threshold rule with
/// `k_threshold`; a positive `k_max` fixes the grid end in normalized units.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfConfig {
    pub n_k_points: usize,
    pub k_threshold: f64,
    pub k_max: f64,
    pub normalization_tol: f64,
    pub max_normalization_iters: usize,
    pub alpha_clamp: bool,
}

impl From<SfConfig> for EstimationConfig {
    fn from(c: SfConfig) -> Self {
        EstimationConfig {
            n_k_points: c.n_k_points,
            k_selection: if c.k_max > 0.0 {
                KSelection::Fixed(c.k_max)
            } else {
                KSelection::ModulusThreshold(c.k_threshold)
            },
            normalization_tol: c.normalization_tol,
            max_normalization_iters: c.max_normalization_iters,
            alpha_clamp: c.alpha_clamp,
        }
    }
}

unsafe fn config_or_default(cfg: *const SfConfig) -> EstimationConfig {
    cfg.as_ref().map_or_else(EstimationConfig::default, |c| (*c).into())
}

#[no_mangle]
pub extern "C" fn sf_config_default() -> SfConfig {
    let d = EstimationConfig::default();
    let k_threshold = match d.k_selection {
        KSelection::ModulusThreshold(t) => t,
        KSelection::Fixed(_) => 0.3,
    };
    SfConfig {
        n_k_points: d.n_k_points,
        k_threshold,
        k_max: 0.0,
        normalization_tol: d.normalization_tol,
        max_normalization_iters: d.max_normalization_iters,
        alpha_clamp: d.alpha_clamp,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `out_params` must be a valid pointer to receive the new handle.
#[no_mangle]
pub unsafe extern "C" fn sf_params_new(alpha: f64, beta: f64, gamma: f64, delta: f64, out_params: *mut *mut SfParams) -> SfStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        let inner = StableParams::new(alpha, beta, gamma, delta)?;
        *slot = Box::into_raw(Box::new(SfParams { inner }));
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from `sf_params_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_params_free(params: *mut SfParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_params_values(
    params: *const SfParams,
    alpha: *mut f64,
    beta: *mut f64,
    gamma: *mut f64,
    delta: *mut f64,
) -> SfStatus {
    guard(|| {
        let p = obj(params, "params")?.inner;
        *out(alpha, "alpha")? = p.alpha();
        *out(beta, "beta")? = p.beta();
        *out(gamma, "gamma")? = p.gamma();
        *out(delta, "delta")? = p.delta();
        Ok(())
    })
}

/// Characteristic function at `k`.
///
/// # Safety
/// `params` must be a live handle; `re` and `im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_char_fn(params: *const SfParams, k: f64, re: *mut f64, im: *mut f64) -> SfStatus {
    guard(|| {
        let phi = obj(params, "params")?.inner.char_fn(k);
        *out(re, "re")? = phi.re;
        *out(im, "im")? = phi.im;
        Ok(())
    })
}

/// Density at `x` to absolute tolerance `tol`.
///
/// # Safety
/// `params` must be a live handle; `density` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_pdf(params: *const SfParams, x: f64, tol: f64, density: *mut f64) -> SfStatus {
    guard(|| {
        let p = obj(params, "params")?;
        let slot = out(density, "density")?;
        *slot = pdf_at(&p.inner, x, tol)?;
        Ok(())
    })
}

/// Densities on `n_points` uniform abscissae; both buffers hold `n_points` values.
///
/// # Safety
/// `params` must be a live handle; the buffers must hold `n_points` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_pdf_grid(
    params: *const SfParams,
    x_min: f64,
    x_max: f64,
    n_points: usize,
    tol: f64,
    x_values: *mut f64,
    f_values: *mut f64,
) -> SfStatus {
    guard(|| {
        let p = obj(params, "params")?;
        let xs = output_slice(x_values, n_points, "x_values")?;
        let fs = output_slice(f_values, n_points, "f_values")?;
        let g = pdf_grid(&p.inner, x_min, x_max, n_points, tol)?;
        xs.copy_from_slice(&g.x_values);
        fs.copy_from_slice(&g.f_values);
        Ok(())
    })
}

/// `n` draws into `values`; identical for identical `seed`.
///
/// # Safety
/// `params` must be a live handle; `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_sample(params: *const SfParams, n: usize, seed: u64, values: *mut f64) -> SfStatus {
    guard(|| {
        let p = obj(params, "params")?;
        let buf = output_slice(values, n, "values")?;
        buf.copy_from_slice(&sample(&p.inner, n, seed)?.values);
        Ok(())
    })
}

/// Fit all four parameters to `n` values. `config` may be null for defaults.
///
/// # Safety
/// `data` must hold `n` doubles; `config` must be null or valid; `out_result`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_fit(
    data: *const f64,
    n: usize,
    config: *const SfConfig,
    out_result: *mut *mut SfFitResult,
) -> SfStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        let values = input_slice(data, n, "data")?;
        let inner = normalize_and_fit(values, &config_or_default(config))?;
        *slot = Box::into_raw(Box::new(SfFitResult { inner }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle from `sf_fit` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_fit_result_free(result: *mut SfFitResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Fitted parameters as a new handle, to be released with `sf_params_free`.
///
/// # Safety
/// `result` must be a live handle; `out_params` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_fit_result_params(result: *const SfFitResult, out_params: *mut *mut SfParams) -> SfStatus {
    guard(|| {
        let r = obj(result, "result")?;
        *out(out_params, "out_params")? = Box::into_raw(Box::new(SfParams { inner: r.inner.params }));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_fit_result_diagnostics(
    result: *const SfFitResult,
    alpha_gamma_residual: *mut f64,
    beta_delta_residual: *mut f64,
    iterations: *mut usize,
    flags: *mut u32,
) -> SfStatus {
    guard(|| {
        let r = &obj(result, "result")?.inner;
        *out(alpha_gamma_residual, "alpha_gamma_residual")? = r.alpha_gamma_residual;
        *out(beta_delta_residual, "beta_delta_residual")? = r.beta_delta_residual;
        *out(iterations, "iterations")? = r.iterations;
        *out(flags, "flags")? = r.flags.bits();
        Ok(())
    })
}

/// Rolling fit over `n` returns: entry `i` is fitted on returns
/// `i .. i + window` and belongs to return index `i + window`.
///
/// # Safety
/// `returns` must hold `n` doubles; `config` must be null or valid;
/// `out_rolling` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_rolling_fit(
    returns: *const f64,
    n: usize,
    window: usize,
    config: *const SfConfig,
    out_rolling: *mut *mut SfRolling,
) -> SfStatus {
    guard(|| {
        let slot = out(out_rolling, "out_rolling")?;
        let values = input_slice(returns, n, "returns")?;
        // dates are not part of the C interface; use consecutive placeholder days
        let start = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date");
        let series = ReturnSeries {
            dates: (0..n).map(|i| start + Days::new(i as u64)).collect(),
            returns: values.to_vec(),
            symbol: String::new(),
        };
        let inner = rolling_fit(&series, window, &config_or_default(config))?;
        *slot = Box::into_raw(Box::new(SfRolling { inner }));
        Ok(())
    })
}

/// # Safety
/// `rolling` must be null or a handle from `sf_rolling_fit` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_rolling_free(rolling: *mut SfRolling) {
    if !rolling.is_null() {
        drop(Box::from_raw(rolling));
    }
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `rolling` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_rolling_len(rolling: *const SfRolling) -> usize {
    rolling.as_ref().map_or(0, |r| r.inner.len())
}

/// Entry `i`. Failed windows report NaN estimates and carry `SF_FLAG_FIT_FAILED`.
///
/// # Safety
/// `rolling` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_rolling_get(
    rolling: *const SfRolling,
    i: usize,
    index: *mut usize,
    alpha: *mut f64,
    beta: *mut f64,
    flags: *mut u32,
) -> SfStatus {
    guard(|| {
        let r = &obj(rolling, "rolling")?.inner;
        if i >= r.len() {
            return Err(SfStatusError(
                SfStatus::OutOfBounds,
                format!("entry {i} out of range for length {}", r.len()),
            ));
        }
        *out(index, "index")? = r.indices[i];
        *out(alpha, "alpha")? = r.alphas[i].unwrap_or(f64::NAN);
        *out(beta, "beta")? = r.betas[i].unwrap_or(f64::NAN);
        *out(flags, "flags")? = r.flags[i].bits();
        Ok(())
    })
}

const _: () = {
    assert!(SF_FLAG_ALPHA_CLAMPED == FitFlags::ALPHA_CLAMPED.bits());
    assert!(SF_FLAG_BETA_CLAMPED == FitFlags::BETA_CLAMPED.bits());
    assert!(SF_FLAG_NEAR_ALPHA_ONE == FitFlags::NEAR_ALPHA_ONE.bits());
    assert!(SF_FLAG_DEGENERATE_DATA == FitFlags::DEGENERATE_DATA.bits());
    assert!(SF_FLAG_NOT_CONVERGED == FitFlags::NOT_CONVERGED.bits());
    assert!(SF_FLAG_SMALL_SAMPLE == FitFlags::SMALL_SAMPLE.bits());
    assert!(SF_FLAG_FIT_FAILED == FitFlags::FIT_FAILED.bits());
};
