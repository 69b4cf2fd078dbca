//! C ABI over `riesz_lab`.
//!
//! Every function returns an [`RlStatus`]. On failure a message is kept in a
//! thread-local slot and can be read with [`rl_last_error`]. Objects are
//! opaque handles released with their matching `_free` function; strings
//! returned to the caller are released with [`rl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use riesz_lab::cli::{execute, RunConfig, RunOutput};
use riesz_lab::construction::{
    build_heights, check_dissociation, sample_omega, stage_exponents, ConstructionParams, HeightSequence,
    SpacerSupport,
};
use riesz_lab::polyeval::{eval_stage_polynomial, CircleGrid};
use riesz_lab::presets::preset;
use riesz_lab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParams = 3,
    Overflow = 4,
    Grid = 5,
    BufferTooSmall = 6,
    Io = 7,
    Internal = 8,
    Panic = 9,
}

/// Validated construction parameters with their height sequence.
pub struct RlParams {
    params: ConstructionParams,
    heights: HeightSequence,
}

/// Result of [`rl_run`].
pub struct RlReport {
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> RlStatus {
    match err {
        Error::InvalidParams(_) => RlStatus::InvalidParams,
        Error::Overflow(_) => RlStatus::Overflow,
        Error::GridTooCoarse { .. } | Error::GridTooLarge { .. } => RlStatus::Grid,
        Error::InvalidConfig(_) | Error::Json(_) => RlStatus::InvalidArgument,
        Error::Io(_) => RlStatus::Io,
        Error::Internal(_) => RlStatus::Internal,
    }
}

fn fail(status: RlStatus, msg: impl Into<String>) -> RlStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), RlStatus>) -> RlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(RlStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lib<T>(r: riesz_lab::Result<T>) -> Result<T, RlStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), RlStatus> {
    if p.is_null() {
        Err(fail(RlStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, RlStatus> {
    nonnull(p, what)?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(RlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn into_handle(params: ConstructionParams) -> Result<*mut RlParams, RlStatus> {
    let heights = lib(build_heights(&params))?;
    Ok(Box::into_raw(Box::new(RlParams { params, heights })))
}

unsafe fn write_out<T>(out: *mut *mut T, value: Result<*mut T, RlStatus>) -> Result<(), RlStatus> {
    nonnull(out, "out")?;
    *out = value?;
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds parameters from `stages` entries of `m` and `t`. `nonnegative`
/// selects spacers in `0..=t` instead of `-t..=t`.
///
/// # Safety
/// `m` and `t` must point to `stages` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_params_new(
    m: *const usize,
    t: *const u64,
    stages: usize,
    h1: u64,
    nonnegative: bool,
    out: *mut *mut RlParams,
) -> RlStatus {
    guard(|| {
        nonnull(m, "m")?;
        nonnull(t, "t")?;
        let support = if nonnegative { SpacerSupport::NonNegative } else { SpacerSupport::Symmetric };
        let m = std::slice::from_raw_parts(m, stages).to_vec();
        let t = std::slice::from_raw_parts(t, stages).to_vec();
        write_out(out, lib(ConstructionParams::new(m, t, h1, support)).and_then(into_handle))
    })
}

/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_params_from_preset(name: *const c_char, out: *mut *mut RlParams) -> RlStatus {
    guard(|| {
        let name = text(name, "name")?;
        write_out(out, lib(preset(name)).and_then(into_handle))
    })
}

/// Parses a JSON object with keys `m`, `t`, `h1`, `stages` and optionally
/// `spacer_support` (`"symmetric"` or `"non_negative"`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_params_from_json(json: *const c_char, out: *mut *mut RlParams) -> RlStatus {
    guard(|| {
        let json = text(json, "json")?;
        let parsed = serde_json::from_str::<ConstructionParams>(json).map_err(Error::from);
        let params = lib(parsed.and_then(|p| p.validate().map(|_| p)))?;
        write_out(out, into_handle(params))
    })
}

/// # Safety
/// `params` must come from an `rl_params_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn rl_params_free(params: *mut RlParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Number of stages, or 0 for a null handle.
///
/// # Safety
/// `params` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rl_params_stages(params: *const RlParams) -> usize {
    params.as_ref().map_or(0, |p| p.params.stages)
}

/// Writes `h_1, ..., h_{J+1}` (`J + 1` values) into `out`.
///
/// # Safety
/// `params` must be a live handle; `out` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn rl_params_heights(params: *const RlParams, out: *mut u64, cap: usize) -> RlStatus {
    guard(|| {
        nonnull(params, "params")?;
        nonnull(out, "out")?;
        let h = (*params).heights.as_slice();
        if cap < h.len() {
            return Err(fail(RlStatus::BufferTooSmall, format!("need {} heights, buffer holds {cap}", h.len())));
        }
        ptr::copy_nonoverlapping(h.as_ptr(), out, h.len());
        Ok(())
    })
}

/// Sets `*dissociated` when stages `1..=n` are provably collision-free.
///
/// # Safety
/// `params` must be a live handle; `dissociated` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_check_dissociation(
    params: *const RlParams,
    n: usize,
    dissociated: *mut bool,
) -> RlStatus {
    guard(|| {
        nonnull(params, "params")?;
        nonnull(dissociated, "dissociated")?;
        let p = &*params;
        if n == 0 || n > p.params.stages {
            return Err(fail(RlStatus::InvalidArgument, format!("n must be in 1..={}", p.params.stages)));
        }
        *dissociated = check_dissociation(&p.params, &p.heights).dissociated_through(n);
        Ok(())
    })
}

/// Writes the `m_j` exponents of stage `stage` for the omega drawn from
/// `seed`. `*written` receives the count, also on `BufferTooSmall`.
///
/// # Safety
/// `params` must be a live handle; `out` must hold `cap` elements and
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_stage_exponents(
    params: *const RlParams,
    seed: u64,
    stage: usize,
    out: *mut u64,
    cap: usize,
    written: *mut usize,
) -> RlStatus {
    guard(|| {
        nonnull(params, "params")?;
        nonnull(out, "out")?;
        nonnull(written, "written")?;
        let p = &*params;
        if stage == 0 || stage > p.params.stages {
            return Err(fail(RlStatus::InvalidArgument, format!("stage must be in 1..={}", p.params.stages)));
        }
        let omega = lib(sample_omega(&p.params, seed, stage))?;
        let e = lib(stage_exponents(&p.params, &p.heights, &omega, stage))?;
        *written = e.n.len();
        if cap < e.n.len() {
            return Err(fail(RlStatus::BufferTooSmall, format!("need {} exponents, buffer holds {cap}", e.n.len())));
        }
        ptr::copy_nonoverlapping(e.n.as_ptr(), out, e.n.len());
        Ok(())
    })
}

/// Evaluates stage `stage` (omega drawn from `seed`) at the `grid` roots of
/// unity, writing real and imaginary parts.
///
/// # Safety
/// `params` must be a live handle; `re` and `im` must each hold `grid` elements.
#[no_mangle]
pub unsafe extern "C" fn rl_stage_polynomial(
    params: *const RlParams,
    seed: u64,
    stage: usize,
    grid: u64,
    re: *mut f64,
    im: *mut f64,
) -> RlStatus {
    guard(|| {
        nonnull(params, "params")?;
        nonnull(re, "re")?;
        nonnull(im, "im")?;
        let p = &*params;
        if stage == 0 || stage > p.params.stages {
            return Err(fail(RlStatus::InvalidArgument, format!("stage must be in 1..={}", p.params.stages)));
        }
        let g = lib(CircleGrid::new(grid))?;
        let omega = lib(sample_omega(&p.params, seed, stage))?;
        let e = lib(stage_exponents(&p.params, &p.heights, &omega, stage))?;
        let v = lib(eval_stage_polynomial(&e, &g))?;
        for (i, z) in v.values.iter().enumerate() {
            *re.add(i) = z.re;
            *im.add(i) = z.im;
        }
        Ok(())
    })
}

/// Runs an experiment described by a JSON run configuration (the same keys
/// as the command-line config file). No files are written.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_run(config_json: *const c_char, out: *mut *mut RlReport) -> RlStatus {
    guard(|| {
        let json = text(config_json, "config_json")?;
        let config = lib(RunConfig::from_json(json))?;
        let output = lib(execute(&config))?;
        write_out(out, Ok(Box::into_raw(Box::new(RlReport { output }))))
    })
}

/// # Safety
/// `report` must come from [`rl_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn rl_report_free(report: *mut RlReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Sets `*passed` when every gate of the report passed.
///
/// # Safety
/// `report` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_report_passed(report: *const RlReport, passed: *mut bool) -> RlStatus {
    guard(|| {
        nonnull(report, "report")?;
        nonnull(passed, "passed")?;
        *passed = (*report).output.report.passed();
        Ok(())
    })
}

/// Looks up a scalar result by label.
///
/// # Safety
/// `report` must be a live handle, `label` NUL-terminated, `value` and
/// `stderr` writable (`stderr` may be null).
#[no_mangle]
pub unsafe extern "C" fn rl_report_result(
    report: *const RlReport,
    label: *const c_char,
    value: *mut f64,
    stderr: *mut f64,
) -> RlStatus {
    guard(|| {
        nonnull(report, "report")?;
        nonnull(value, "value")?;
        let label = text(label, "label")?;
        let e = (*report)
            .output
            .report
            .estimate(label)
            .ok_or_else(|| fail(RlStatus::InvalidArgument, format!("no result labelled `{label}`")))?;
        *value = e.value;
        if !stderr.is_null() {
            *stderr = e.stderr;
        }
        Ok(())
    })
}

/// Serializes the report to JSON. Release the string with [`rl_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_report_to_json(report: *const RlReport, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        nonnull(report, "report")?;
        let json = lib((*report).output.report.to_json())?;
        let s = CString::new(json).map_err(|_| fail(RlStatus::Internal, "report JSON contains NUL"))?;
        write_out(out, Ok(s.into_raw()))
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
