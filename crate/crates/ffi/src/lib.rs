//! C ABI over `genou`.
//!
//! Models and simulated series are opaque heap handles released with their
//! `_free` function. Every fallible call returns a [`GenouStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`genou_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use genou::sim::{simulate_skeleton, SimOptions, SkeletonSeries, SupMode};
use genou::stats::{hill_estimator, sample_acv_with};
use genou::{Error, JumpLaw, LevyModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenouStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidModel = 2,
    InvalidArgument = 3,
    NoPositiveRoot = 4,
    InsufficientData = 5,
    BufferTooSmall = 6,
    Panic = 7,
    Other = 8,
}

/// Sequence selector for [`genou_series_copy`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenouColumn {
    /// `V_0..V_{nh}` (`n + 1` values).
    Volatility = 0,
    /// Block suprema `H_1..H_n`.
    BlockMax = 1,
    /// Increments `I_1..I_n`.
    Increments = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenouJumpLaw {
    TwoPoint = 0,
    Gaussian = 1,
    DeterministicAbs = 2,
}

/// Opaque model handle.
pub struct GenouModel {
    inner: LevyModel,
}

/// Opaque simulated-series handle.
pub struct GenouSeries {
    inner: SkeletonSeries,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GenouStatus {
    match e {
        Error::InvalidModel(_) => GenouStatus::InvalidModel,
        Error::InvalidConfig(_) | Error::Domain(_) | Error::Parse(_) | Error::Validation(_) => {
            GenouStatus::InvalidArgument
        }
        Error::NoPositiveRoot { .. } | Error::NotStationaryHeavyTail { .. } => {
            GenouStatus::NoPositiveRoot
        }
        Error::InsufficientData(_)
        | Error::NonPositiveData(_)
        | Error::TooFewExceedances { .. }
        | Error::NoExceedances { .. } => GenouStatus::InsufficientData,
        _ => GenouStatus::Other,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> GenouStatus
where
    F: FnOnce() -> Result<(), (GenouStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GenouStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside genou".into());
            GenouStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (GenouStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (GenouStatus, String) {
    (GenouStatus::NullPointer, format!("{name} is NULL"))
}

fn emit_model(model: LevyModel, out: *mut *mut GenouModel) -> Result<(), (GenouStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    model.validate().map_err(lib_err)?;
    let handle = Box::into_raw(Box::new(GenouModel { inner: model }));
    // SAFETY: `out` is non-null and points to writable storage per the contract.
    unsafe { *out = handle };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn genou_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Nelson diffusion `dV = lambda (a - V) dt + sigma V dW`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn genou_model_nelson(
    lambda: f64,
    a: f64,
    sigma: f64,
    out: *mut *mut GenouModel,
) -> GenouStatus {
    guard(|| emit_model(LevyModel::nelson(lambda, a, sigma), out))
}

/// COGARCH(1,1) with compound-Poisson driver of rate `mu`; `law_param` is
/// the jump size (`two_point`, `deterministic_abs`) or standard deviation
/// (`gaussian`).
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn genou_model_cogarch(
    beta: f64,
    c: f64,
    lambda_g: f64,
    mu: f64,
    law: GenouJumpLaw,
    law_param: f64,
    out: *mut *mut GenouModel,
) -> GenouStatus {
    let jump_law = match law {
        GenouJumpLaw::TwoPoint => JumpLaw::TwoPoint { z: law_param },
        GenouJumpLaw::Gaussian => JumpLaw::Gaussian { sd: law_param },
        GenouJumpLaw::DeterministicAbs => JumpLaw::DeterministicAbs { z: law_param },
    };
    guard(|| emit_model(LevyModel::cogarch(beta, c, lambda_g, mu, jump_law), out))
}

/// Exponent `xi_t = sigma W_t + m t` with deterministic `eta_t = eta_rate t`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn genou_model_brownian(
    m: f64,
    sigma: f64,
    eta_rate: f64,
    out: *mut *mut GenouModel,
) -> GenouStatus {
    guard(|| emit_model(LevyModel::brownian(m, sigma, eta_rate), out))
}

/// Model from a TOML table such as `family = "nelson"\nlambda = 1.0 ...`.
///
/// # Safety
/// `doc` must be NULL or a NUL-terminated string; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn genou_model_from_toml(
    doc: *const c_char,
    out: *mut *mut GenouModel,
) -> GenouStatus {
    guard(|| {
        if doc.is_null() {
            return Err(null("doc"));
        }
        // SAFETY: non-null and NUL-terminated per the contract.
        let text = unsafe { CStr::from_ptr(doc) }.to_str().map_err(|e| {
            (
                GenouStatus::InvalidArgument,
                format!("doc is not UTF-8: {e}"),
            )
        })?;
        let model: LevyModel =
            genou::experiment::config::parse_model_toml(text).map_err(lib_err)?;
        emit_model(model, out)
    })
}

/// # Safety
/// `model` must be NULL or a handle from a `genou_model_*` constructor that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn genou_model_free(model: *mut GenouModel) {
    if !model.is_null() {
        // SAFETY: created by Box::into_raw in `emit_model`, freed once.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Positive root `alpha` of the Laplace exponent.
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn genou_model_find_alpha(
    model: *const GenouModel,
    out: *mut f64,
) -> GenouStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let model = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let alpha = model.inner.find_alpha(None).map_err(lib_err)?;
        // SAFETY: checked non-null above.
        unsafe { *out = alpha };
        Ok(())
    })
}

/// `Psi(v) = log E exp(-v xi_1)`.
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn genou_model_laplace_exponent(
    model: *const GenouModel,
    v: f64,
    out: *mut f64,
) -> GenouStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let model = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let psi = model.inner.laplace_exponent(v).map_err(lib_err)?;
        // SAFETY: checked non-null above.
        unsafe { *out = psi };
        Ok(())
    })
}

/// Stationary skeleton of `n` blocks of length `h`. `subgrid` sub-steps per
/// block for diffusion models; `bridge_sup != 0` takes exact bridge suprema.
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn genou_simulate_skeleton(
    model: *const GenouModel,
    h: f64,
    n: usize,
    subgrid: usize,
    bridge_sup: i32,
    seed: u64,
    out: *mut *mut GenouSeries,
) -> GenouStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let model = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = SimOptions {
            subgrid,
            sup_mode: if bridge_sup != 0 {
                SupMode::Bridge
            } else {
                SupMode::Grid
            },
            ..SimOptions::default()
        };
        let series = simulate_skeleton(&model.inner, h, n, &opts, seed).map_err(lib_err)?;
        let handle = Box::into_raw(Box::new(GenouSeries { inner: series }));
        // SAFETY: checked non-null above.
        unsafe { *out = handle };
        Ok(())
    })
}

/// Number of blocks `n` (0 for NULL).
///
/// # Safety
/// `series` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn genou_series_len(series: *const GenouSeries) -> usize {
    // SAFETY: live handle per the contract.
    unsafe { series.as_ref() }.map_or(0, |s| s.inner.len())
}

/// Copy a column into `buf` (capacity `cap`). `*written` receives the
/// column length even when the buffer is too small.
///
/// # Safety
/// `series` NULL or live; `buf` NULL or valid for `cap` writes; `written`
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn genou_series_copy(
    series: *const GenouSeries,
    column: GenouColumn,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> GenouStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let series = unsafe { series.as_ref() }.ok_or_else(|| null("series"))?;
        let data = match column {
            GenouColumn::Volatility => &series.inner.v,
            GenouColumn::BlockMax => &series.inner.block_max,
            GenouColumn::Increments => &series.inner.increments,
        };
        if !written.is_null() {
            // SAFETY: non-null and writable per the contract.
            unsafe { *written = data.len() };
        }
        if cap < data.len() {
            return Err((
                GenouStatus::BufferTooSmall,
                format!("buffer holds {cap} values, column has {}", data.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        // SAFETY: `buf` is valid for `cap >= data.len()` writes and cannot
        // overlap the Rust-owned column.
        unsafe { ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len()) };
        Ok(())
    })
}

/// # Safety
/// `series` must be NULL or a live handle, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn genou_series_free(series: *mut GenouSeries) {
    if !series.is_null() {
        // SAFETY: created by Box::into_raw in `genou_simulate_skeleton`.
        drop(unsafe { Box::from_raw(series) });
    }
}

unsafe fn slice<'a>(data: *const f64, n: usize) -> Result<&'a [f64], (GenouStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("data"));
    }
    // SAFETY: caller guarantees `n` readable values.
    Ok(unsafe { std::slice::from_raw_parts(data, n) })
}

/// Hill estimator on the `k` largest of `n` values.
///
/// # Safety
/// `data` valid for `n` reads; `alpha_hat` and `se` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn genou_hill(
    data: *const f64,
    n: usize,
    k: usize,
    alpha_hat: *mut f64,
    se: *mut f64,
) -> GenouStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let x = unsafe { slice(data, n) }?;
        if alpha_hat.is_null() {
            return Err(null("alpha_hat"));
        }
        let est = hill_estimator(x, k).map_err(lib_err)?;
        // SAFETY: checked non-null / optional outputs.
        unsafe {
            *alpha_hat = est.alpha_hat;
            if !se.is_null() {
                *se = est.se;
            }
        }
        Ok(())
    })
}

/// Sample autocovariances at lags `0..=max_lag` into `gamma` (length
/// `max_lag + 1`); `centered != 0` subtracts the mean first.
///
/// # Safety
/// `data` valid for `n` reads; `gamma` valid for `max_lag + 1` writes.
#[no_mangle]
pub unsafe extern "C" fn genou_sample_acv(
    data: *const f64,
    n: usize,
    max_lag: usize,
    centered: i32,
    gamma: *mut f64,
) -> GenouStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let x = unsafe { slice(data, n) }?;
        if gamma.is_null() {
            return Err(null("gamma"));
        }
        let est = sample_acv_with(x, max_lag, centered != 0).map_err(lib_err)?;
        // SAFETY: `gamma` holds `max_lag + 1` slots per the contract.
        unsafe { ptr::copy_nonoverlapping(est.gamma_hat.as_ptr(), gamma, est.gamma_hat.len()) };
        Ok(())
    })
}
