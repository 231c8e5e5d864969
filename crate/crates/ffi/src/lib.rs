//! C ABI over `gsp-winding`.
//!
//! Every function returns a [`GspStatus`]; results go through out-pointers.
//! On failure the calling thread's last-error message describes the cause
//! until the next call on that thread. Measures are opaque handles created
//! by `gsp_measure_*` and released with [`gsp_measure_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gsp_winding::spectral::{builtin, CovarianceEval, SpectralMeasure};
use gsp_winding::stats::{self, McSettings};
use gsp_winding::theory::{self, KernelEvaluator};
use gsp_winding::Error;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Degenerate = 3,
    Numerical = 4,
    Simulation = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Which variance kernel to evaluate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GspKernel {
    K = 0,
    Ktilde = 1,
    KtildeStar = 2,
}

/// Opaque spectral measure with its covariance evaluator.
pub struct GspMeasure {
    measure: SpectralMeasure,
    eval: CovarianceEval,
}

/// Monte Carlo summary of the winding at one horizon.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GspMcSummary {
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
    pub n_paths: usize,
    pub failures: usize,
    pub n_freq: usize,
    pub dt0: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> GspStatus {
    match e {
        Error::Degenerate(_) | Error::NonDiscreteSingularSet(_) => GspStatus::Degenerate,
        Error::Divergent(_) | Error::Quadrature(_) | Error::Fit(_) => GspStatus::Numerical,
        Error::InsufficientFrequencies { .. }
        | Error::WindingRefinement { .. }
        | Error::SimulationFailures { .. }
        | Error::ZeroVariance => GspStatus::Simulation,
        _ => GspStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the last error.
fn guard(f: impl FnOnce() -> Result<(), (GspStatus, String)>) -> GspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GspStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            GspStatus::Panic
        }
    }
}

fn lib(e: Error) -> (GspStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (GspStatus, String) {
    (GspStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, (GspStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (GspStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn measure<'a>(m: *const GspMeasure) -> Result<&'a GspMeasure, (GspStatus, String)> {
    m.as_ref().ok_or_else(|| null("measure"))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (GspStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

fn boxed(measure: SpectralMeasure, eval: CovarianceEval) -> *mut GspMeasure {
    Box::into_raw(Box::new(GspMeasure { measure, eval }))
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn gsp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gsp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in measure by name. `params` may be null when `n_params` is 0.
///
/// # Safety
/// `name` must be a nul-terminated string, `params` must point to
/// `n_params` doubles and `out_measure` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_measure_builtin(
    name: *const c_char,
    params: *const f64,
    n_params: usize,
    out_measure: *mut *mut GspMeasure,
) -> GspStatus {
    guard(|| {
        let name = text(name, "name")?;
        let out_measure = out(out_measure, "out_measure")?;
        let params = if n_params == 0 {
            &[][..]
        } else if params.is_null() {
            return Err(null("params"));
        } else {
            std::slice::from_raw_parts(params, n_params)
        };
        let (m, e) = builtin(name, params).map_err(lib)?;
        *out_measure = boxed(m, e);
        Ok(())
    })
}

/// Measure from its JSON description.
///
/// # Safety
/// `json` must be a nul-terminated string and `out_measure` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_measure_from_json(
    json: *const c_char,
    out_measure: *mut *mut GspMeasure,
) -> GspStatus {
    guard(|| {
        let json = text(json, "json")?;
        let out_measure = out(out_measure, "out_measure")?;
        let m = SpectralMeasure::from_json(json).map_err(lib)?;
        *out_measure = boxed(m.clone(), CovarianceEval::closed_form(m));
        Ok(())
    })
}

/// Releases a measure; null is ignored.
///
/// # Safety
/// `m` must come from `gsp_measure_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gsp_measure_free(m: *mut GspMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Whether the measure is a single atom (1) or not (0).
///
/// # Safety
/// `m` must be a live handle and the output writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_measure_is_degenerate(
    m: *const GspMeasure,
    out_flag: *mut i32,
) -> GspStatus {
    guard(|| {
        let m = measure(m)?;
        *out(out_flag, "out_flag")? = m.measure.is_degenerate() as i32;
        Ok(())
    })
}

/// Covariance `r(t)`.
///
/// # Safety
/// `m` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_covariance(
    m: *const GspMeasure,
    t: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GspStatus {
    guard(|| {
        let m = measure(m)?;
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let r = gsp_winding::spectral::covariance(&m.eval, t).map_err(lib)?;
        *re = r.re;
        *im = r.im;
        Ok(())
    })
}

/// One variance kernel at `x`.
///
/// # Safety
/// `m` must be a live handle and the output writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_kernel(
    m: *const GspMeasure,
    kernel: GspKernel,
    x: f64,
    out_value: *mut f64,
) -> GspStatus {
    guard(|| {
        let m = measure(m)?;
        let v = out(out_value, "out_value")?;
        let ke = KernelEvaluator::new(&m.eval).map_err(lib)?;
        *v = match kernel {
            GspKernel::K => ke.k(x),
            GspKernel::Ktilde => ke.ktilde(x),
            GspKernel::KtildeStar => ke.ktilde_star(x),
        };
        Ok(())
    })
}

/// Expected winding over `[0, t]`.
///
/// # Safety
/// `m` must be a live handle and the output writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_mean_winding(
    m: *const GspMeasure,
    t: f64,
    out_value: *mut f64,
) -> GspStatus {
    guard(|| {
        let m = measure(m)?;
        *out(out_value, "out_value")? = theory::mean_winding(&m.eval, t).map_err(lib)?;
        Ok(())
    })
}

/// Winding variance at `t` by the `K` and `K̃` routes.
///
/// # Safety
/// `m` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_variance(
    m: *const GspMeasure,
    t: f64,
    out_v_k: *mut f64,
    out_v_ktilde: *mut f64,
) -> GspStatus {
    guard(|| {
        let m = measure(m)?;
        let (a, b) = (out(out_v_k, "out_v_k")?, out(out_v_ktilde, "out_v_ktilde")?);
        let c = theory::variance_curve(&m.eval, &[t]).map_err(lib)?;
        *a = c.v_k[0];
        *b = c.v_ktilde[0];
        Ok(())
    })
}

/// Limit of `V(T)/T`. `out_finite` is 0 when the limit is infinite, and
/// `out_value` then holds NaN.
///
/// # Safety
/// `m` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_asymptotic_slope(
    m: *const GspMeasure,
    out_value: *mut f64,
    out_finite: *mut i32,
) -> GspStatus {
    guard(|| {
        let m = measure(m)?;
        let (v, f) = (out(out_value, "out_value")?, out(out_finite, "out_finite")?);
        let s = theory::asymptotic_slope(&m.eval).map_err(lib)?;
        *v = s.value().unwrap_or(f64::NAN);
        *f = s.value().is_some() as i32;
        Ok(())
    })
}

/// Points of `[0, x_max]` where `|r| = 1`. Writes at most `capacity`
/// values and always stores the full count in `out_count`; returns
/// `BufferTooSmall` when they do not fit.
///
/// # Safety
/// `m` must be a live handle, `out_points` must hold `capacity` doubles
/// (or be null when `capacity` is 0) and `out_count` writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_singular_points(
    m: *const GspMeasure,
    x_max: f64,
    out_points: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> GspStatus {
    guard(|| {
        let m = measure(m)?;
        let count = out(out_count, "out_count")?;
        let pts = theory::singular_set(&m.eval, x_max).map_err(lib)?;
        *count = pts.len();
        copy_out(&pts, out_points, capacity)
    })
}

unsafe fn copy_out(v: &[f64], dst: *mut f64, capacity: usize) -> Result<(), (GspStatus, String)> {
    if v.len() > capacity {
        return Err((
            GspStatus::BufferTooSmall,
            format!("need room for {} values, got {capacity}", v.len()),
        ));
    }
    if !v.is_empty() {
        if dst.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), dst, v.len());
    }
    Ok(())
}

/// Monte Carlo winding over `[0, t]`. `n_freq = 0` and `dt0 <= 0` pick the
/// defaults. When `out_deltas` is not null it must hold `n_paths` doubles
/// and receives the windings of the `summary.n_paths` resolved paths.
///
/// # Safety
/// `m` must be a live handle, `out_summary` writable and `out_deltas`
/// either null or valid for `n_paths` doubles.
#[no_mangle]
pub unsafe extern "C" fn gsp_mc_winding(
    m: *const GspMeasure,
    t: f64,
    n_paths: usize,
    seed: u64,
    n_freq: usize,
    dt0: f64,
    out_summary: *mut GspMcSummary,
    out_deltas: *mut f64,
) -> GspStatus {
    guard(|| {
        let m = measure(m)?;
        let summary = out(out_summary, "out_summary")?;
        let settings = McSettings {
            n_freq: (n_freq > 0).then_some(n_freq),
            dt0: (dt0 > 0.0).then_some(dt0),
            start: 0.0,
        };
        let run = stats::mc_winding(&m.measure, t, n_paths, seed, &settings).map_err(lib)?;
        let r = &run.report;
        *summary = GspMcSummary {
            mean: r.mean,
            var: r.var,
            se_mean: r.se_mean,
            se_var: r.se_var,
            n_paths: r.n_paths,
            failures: r.failures,
            n_freq: r.n_freq,
            dt0: r.dt0,
        };
        if !out_deltas.is_null() {
            copy_out(&run.deltas(), out_deltas, n_paths)?;
        }
        Ok(())
    })
}

/// Normality test of standardized samples: KS statistic and p-value.
///
/// # Safety
/// `samples` must hold `n` doubles and the outputs be writable.
#[no_mangle]
pub unsafe extern "C" fn gsp_clt_test(
    samples: *const f64,
    n: usize,
    out_ks: *mut f64,
    out_p: *mut f64,
) -> GspStatus {
    guard(|| {
        if samples.is_null() {
            return Err(null("samples"));
        }
        let (ks, p) = (out(out_ks, "out_ks")?, out(out_p, "out_p")?);
        let r = stats::clt_test(std::slice::from_raw_parts(samples, n)).map_err(lib)?;
        *ks = r.ks;
        *p = r.p;
        Ok(())
    })
}
