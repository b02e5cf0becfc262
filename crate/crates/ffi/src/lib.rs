//! C ABI over `esn-core`.
//!
//! Models cross the boundary as opaque `EsnModel` handles. Every fallible
//! function returns an `EsnStatus`; on failure `esn_last_error()` holds a
//! message for the calling thread. Output buffers are caller-allocated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use esn_core::datasets::{mackey_glass, MgParams};
use esn_core::reservoir::{self, init_esn, EsnConfig};
use esn_core::ts::{mse_slice, TimeSeries};
use esn_core::Error;

/// Result codes; `ESN_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    Untrained = 6,
    Diverged = 7,
    Numeric = 8,
    Panic = 9,
}

/// Opaque model handle.
pub struct EsnModel {
    inner: reservoir::EsnModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EsnStatus {
    match e {
        _ if e.is_divergence() => EsnStatus::Diverged,
        Error::Io { .. } => EsnStatus::Io,
        Error::Parse { .. } => EsnStatus::Parse,
        Error::Config { .. } => EsnStatus::Config,
        Error::Untrained => EsnStatus::Untrained,
        Error::Singular { .. } | Error::CannotScale(_) | Error::NonFinite { .. } => EsnStatus::Numeric,
        _ => EsnStatus::InvalidArgument,
    }
}

struct Fail(EsnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EsnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EsnStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EsnStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(EsnStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(EsnStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a>(m: *const EsnModel) -> Result<&'a reservoir::EsnModel, Fail> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn write_out(out: *mut f64, out_len: usize, values: &[f64]) -> Result<(), Fail> {
    if out_len < values.len() {
        return Err(Fail(
            EsnStatus::InvalidArgument,
            format!("output buffer holds {out_len} values, {} needed", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

unsafe fn give(out: *mut *mut EsnModel, inner: reservoir::EsnModel) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(EsnModel { inner }));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn esn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Load a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn esn_model_load(path: *const c_char, out: *mut *mut EsnModel) -> EsnStatus {
    guard(|| {
        let path = PathBuf::from(c_str(path, "path")?);
        give(out, reservoir::load_model(path)?)
    })
}

/// Save a model file.
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn esn_model_save(model: *const EsnModel, path: *const c_char) -> EsnStatus {
    guard(|| {
        let m = handle(model)?;
        let path = PathBuf::from(c_str(path, "path")?);
        Ok(reservoir::save_model(path, m)?)
    })
}

/// Build and train a model on `series`. `config` is a `;`-separated list of
/// `key=value` pairs over the model configuration keys, e.g.
/// `"n_res=200;rho=1.25;washout_len=100;master_seed=7"`; NULL or empty
/// keeps the defaults.
///
/// # Safety
/// `series` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn esn_model_train(
    config: *const c_char,
    series: *const f64,
    len: usize,
    out: *mut *mut EsnModel,
) -> EsnStatus {
    guard(|| {
        let mut cfg = EsnConfig::default();
        if !config.is_null() {
            for pair in c_str(config, "config")?.split(';').filter(|p| !p.trim().is_empty()) {
                let (k, v) = pair.split_once('=').ok_or_else(|| {
                    Fail(EsnStatus::Config, format!("expected `key=value`, got `{pair}`"))
                })?;
                cfg.set(k.trim(), v.trim())?;
            }
        }
        cfg.validate()?;
        let series = TimeSeries::new("ffi", slice(series, len, "series")?.to_vec())?;
        give(out, init_esn(&cfg)?.train(&series)?)
    })
}

/// Release a handle; NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn esn_model_free(model: *mut EsnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Reservoir size, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn esn_model_n_res(model: *const EsnModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.config().n_res)
}

/// 1 when the model has a readout, 0 otherwise (including NULL).
///
/// # Safety
/// `model` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn esn_model_is_trained(model: *const EsnModel) -> i32 {
    model.as_ref().map_or(0, |m| m.inner.is_trained() as i32)
}

/// Run `steps` free-running predictions into `out` (capacity `out_len`).
///
/// # Safety
/// `out` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn esn_predict_generative(
    model: *const EsnModel,
    steps: usize,
    out: *mut f64,
    out_len: usize,
) -> EsnStatus {
    guard(|| {
        let y = handle(model)?.predict_generative(steps)?;
        write_out(out, out_len, y.values())
    })
}

/// One-step-ahead predictions for `len` true inputs; `out[i]` predicts the
/// sample after `inputs[i]`.
///
/// # Safety
/// `inputs` must hold `len` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn esn_predict_guided(
    model: *const EsnModel,
    inputs: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> EsnStatus {
    guard(|| {
        let inputs = TimeSeries::new("inputs", slice(inputs, len, "inputs")?.to_vec())?;
        let y = handle(model)?.predict_guided(&inputs)?;
        write_out(out, out_len, y.values())
    })
}

/// `n` Mackey-Glass samples with delay `tau`, other parameters at their defaults.
///
/// # Safety
/// `out` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn esn_mackey_glass(n: usize, tau: f64, out: *mut f64, out_len: usize) -> EsnStatus {
    guard(|| {
        let p = MgParams {
            tau,
            ..MgParams::default()
        };
        let s = mackey_glass(n, &p)?;
        write_out(out, out_len, s.values())
    })
}

/// Mean squared error of two length-`len` arrays.
///
/// # Safety
/// `a` and `b` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn esn_mse(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> EsnStatus {
    guard(|| {
        let v = mse_slice(slice(a, len, "a")?, slice(b, len, "b")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v;
        Ok(())
    })
}
