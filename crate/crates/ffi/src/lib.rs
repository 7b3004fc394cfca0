//! C ABI for the sobolab core: opaque field handles, status codes, and the
//! experiment runner. Every function is panic-safe; failures set a
//! thread-local message retrievable with `sobolab_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64;
use sobolab::experiments;
use sobolab::{GridSpec, SpectralField};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolabStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericalFailure = 2,
    AssertionFailure = 3,
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let cstr = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstr));
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sobolab_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// Opaque handle to an m-component field on a periodic grid.
pub struct SobolabField {
    inner: SpectralField,
}

fn guard<T>(f: impl FnOnce() -> Result<T, SobolabStatus>) -> Result<T, SobolabStatus> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(_) => {
            set_error("internal panic".into());
            Err(SobolabStatus::Panic)
        }
    }
}

/// Create a field from interleaved (re, im) samples, component-major and
/// row-major within each component.
///
/// # Safety
/// `extents` and `points` must point to `dimension` readable elements;
/// `samples` must point to `2 * components * product(points)` readable
/// doubles. The returned handle must be released with `sobolab_field_free`.
#[no_mangle]
pub unsafe extern "C" fn sobolab_field_create(
    dimension: usize,
    extents: *const f64,
    points: *const usize,
    components: usize,
    samples: *const f64,
    out_field: *mut *mut SobolabField,
) -> SobolabStatus {
    if extents.is_null() || points.is_null() || samples.is_null() || out_field.is_null() {
        set_error("null pointer argument".into());
        return SobolabStatus::InvalidArgument;
    }
    let ext = std::slice::from_raw_parts(extents, dimension);
    let pts = std::slice::from_raw_parts(points, dimension);
    let result = guard(|| {
        let grid = GridSpec::new(ext, pts, components).map_err(|e| {
            set_error(e.to_string());
            SobolabStatus::InvalidArgument
        })?;
        let n = grid.total_len();
        let raw = unsafe { std::slice::from_raw_parts(samples, 2 * n) };
        let values: Vec<Complex64> = raw
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        SpectralField::from_values(grid, values).map_err(|e| {
            set_error(e.to_string());
            SobolabStatus::InvalidArgument
        })
    });
    match result {
        Ok(field) => {
            *out_field = Box::into_raw(Box::new(SobolabField { inner: field }));
            SobolabStatus::Ok
        }
        Err(code) => code,
    }
}

/// Release a field handle. NULL is accepted and ignored.
///
/// # Safety
/// `field` must be a pointer previously returned by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn sobolab_field_free(field: *mut SobolabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Total number of stored complex samples (components x grid points).
///
/// # Safety
/// `field` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sobolab_field_len(field: *const SobolabField) -> usize {
    if field.is_null() {
        return 0;
    }
    (*field).inner.grid().total_len()
}

/// Apply the Bessel potential of order t, producing a new field handle.
///
/// # Safety
/// `field` must be a live handle; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sobolab_bessel_potential(
    field: *const SobolabField,
    t: f64,
    out_field: *mut *mut SobolabField,
) -> SobolabStatus {
    if field.is_null() || out_field.is_null() {
        set_error("null pointer argument".into());
        return SobolabStatus::InvalidArgument;
    }
    let result = guard(|| {
        (*field).inner.bessel_potential(t).map_err(|e| {
            set_error(e.to_string());
            SobolabStatus::NumericalFailure
        })
    });
    match result {
        Ok(out) => {
            *out_field = Box::into_raw(Box::new(SobolabField { inner: out }));
            SobolabStatus::Ok
        }
        Err(code) => code,
    }
}

/// Fractional Sobolev norm ||u||_{H^s}.
///
/// # Safety
/// `field` must be a live handle; `out_norm` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sobolab_sobolev_norm(
    field: *const SobolabField,
    s: f64,
    out_norm: *mut f64,
) -> SobolabStatus {
    if field.is_null() || out_norm.is_null() {
        set_error("null pointer argument".into());
        return SobolabStatus::InvalidArgument;
    }
    match guard(|| Ok((*field).inner.sobolev_norm(s))) {
        Ok(v) => {
            *out_norm = v;
            SobolabStatus::Ok
        }
        Err(code) => code,
    }
}

/// Bilinear dual product of two fields on the same grid.
///
/// # Safety
/// `a` and `b` must be live handles; `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sobolab_dual_product(
    a: *const SobolabField,
    b: *const SobolabField,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SobolabStatus {
    if a.is_null() || b.is_null() || out_re.is_null() || out_im.is_null() {
        set_error("null pointer argument".into());
        return SobolabStatus::InvalidArgument;
    }
    let result = guard(|| {
        (*a).inner.dual_product(&(*b).inner).map_err(|e| {
            set_error(e.to_string());
            SobolabStatus::InvalidArgument
        })
    });
    match result {
        Ok(v) => {
            *out_re = v.re;
            *out_im = v.im;
            SobolabStatus::Ok
        }
        Err(code) => code,
    }
}

/// The trace constant C_s, s > 1/2.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sobolab_trace_constant(s: f64, out_value: *mut f64) -> SobolabStatus {
    if out_value.is_null() {
        set_error("null pointer argument".into());
        return SobolabStatus::InvalidArgument;
    }
    let result = guard(|| {
        sobolab::halfspace::trace_constant(s).map_err(|e| {
            set_error(e.to_string());
            SobolabStatus::InvalidArgument
        })
    });
    match result {
        Ok(c) => {
            *out_value = c.value;
            SobolabStatus::Ok
        }
        Err(code) => code,
    }
}

fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, SobolabStatus> {
    if ptr.is_null() {
        set_error("null string argument".into());
        return Err(SobolabStatus::InvalidArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8".into());
        SobolabStatus::InvalidArgument
    })
}

/// Run a registered experiment by name with an optional TOML configuration
/// string, writing artifacts under `out_dir`. Names match the CLI
/// subcommands: trace-norm, extension, recover-density, bvp, conormal,
/// green, commutator, product-bound, apriori, regularity, appendix, or
/// suite:acceptance / suite:quick. Returns AssertionFailure when the
/// experiment ran but an asserted bound did not hold.
///
/// # Safety
/// `name` and `out_dir` must be NUL-terminated strings; `config_toml` may be
/// NULL for defaults.
#[no_mangle]
pub unsafe extern "C" fn sobolab_run_experiment(
    name: *const c_char,
    config_toml: *const c_char,
    out_dir: *const c_char,
) -> SobolabStatus {
    let name = match cstr_arg(name) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let dir = match cstr_arg(out_dir) {
        Ok(s) => s.to_string(),
        Err(code) => return code,
    };
    let config: Option<String> = if config_toml.is_null() {
        None
    } else {
        match cstr_arg(config_toml) {
            Ok(s) => Some(s.to_string()),
            Err(code) => return code,
        }
    };
    let result = guard(|| {
        dispatch_experiment(name, config.as_deref(), Path::new(&dir)).map_err(|e| {
            set_error(e.to_string());
            match e {
                sobolab::Error::Domain(_) | sobolab::Error::Format(_) => {
                    SobolabStatus::InvalidArgument
                }
                _ => SobolabStatus::NumericalFailure,
            }
        })
    });
    match result {
        Ok(true) => SobolabStatus::Ok,
        Ok(false) => {
            set_error(format!("experiment '{name}' failed an asserted bound"));
            SobolabStatus::AssertionFailure
        }
        Err(code) => code,
    }
}

fn parse<T: serde::de::DeserializeOwned + Default>(config: Option<&str>) -> sobolab::Result<T> {
    match config {
        None => Ok(T::default()),
        Some(text) => toml::from_str(text).map_err(|e| sobolab::Error::Format(e.to_string())),
    }
}

fn dispatch_experiment(name: &str, config: Option<&str>, dir: &Path) -> sobolab::Result<bool> {
    let outcome = match name {
        "trace-norm" => experiments::run_trace_norm(&parse(config)?, dir)?,
        "extension" => experiments::run_extension(&parse(config)?, dir)?,
        "recover-density" => experiments::run_recover_density(&parse(config)?, dir)?,
        "bvp" => experiments::run_bvp(&parse(config)?, dir)?,
        "conormal" => experiments::run_conormal(&parse(config)?, dir)?,
        "green" => experiments::run_green(&parse(config)?, dir)?,
        "commutator" => experiments::run_commutator(&parse(config)?, dir)?,
        "product-bound" => experiments::run_product_bound(&parse(config)?, dir)?,
        "apriori" => experiments::run_apriori(&parse(config)?, dir)?,
        "regularity" => experiments::run_regularity(&parse(config)?, dir)?,
        "appendix" => experiments::run_appendix(&parse(config)?, dir)?,
        "suite:acceptance" => experiments::run_suite("acceptance", dir)?,
        "suite:quick" => experiments::run_suite("quick", dir)?,
        other => {
            return Err(sobolab::Error::Domain(format!(
                "unknown experiment '{other}'"
            )))
        }
    };
    Ok(outcome.passed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn field_roundtrip_and_norm() {
        unsafe {
            let extents = [16.0f64];
            let points = [64usize];
            // Gaussian samples on the centered box
            let mut samples = Vec::with_capacity(2 * 64);
            for i in 0..64 {
                let x = -8.0 + i as f64 * 0.25;
                samples.push((-std::f64::consts::PI * x * x).exp());
                samples.push(0.0);
            }
            let mut field: *mut SobolabField = ptr::null_mut();
            let code = sobolab_field_create(
                1,
                extents.as_ptr(),
                points.as_ptr(),
                1,
                samples.as_ptr(),
                &mut field,
            );
            assert_eq!(code, SobolabStatus::Ok);
            assert_eq!(sobolab_field_len(field), 64);
            let mut norm = 0.0;
            assert_eq!(sobolab_sobolev_norm(field, 0.0, &mut norm), SobolabStatus::Ok);
            // L2 norm of the unit Gaussian is 2^{-1/4}
            assert!((norm - 2f64.powf(-0.25)).abs() < 1e-6, "norm {norm}");
            let mut smoothed: *mut SobolabField = ptr::null_mut();
            assert_eq!(
                sobolab_bessel_potential(field, -2.0, &mut smoothed),
                SobolabStatus::Ok
            );
            let mut s0 = 0.0;
            let mut s2 = 0.0;
            sobolab_sobolev_norm(smoothed, 2.0, &mut s2);
            sobolab_sobolev_norm(field, 0.0, &mut s0);
            assert!((s0 - s2).abs() <= 1e-12 * s0); // isometry through the handle
            sobolab_field_free(smoothed);
            sobolab_field_free(field);
        }
    }

    #[test]
    fn invalid_grid_reports_error() {
        unsafe {
            let extents = [1.0f64];
            let points = [5usize]; // not a power of two
            let samples = [0.0f64; 10];
            let mut field: *mut SobolabField = ptr::null_mut();
            let code = sobolab_field_create(
                1,
                extents.as_ptr(),
                points.as_ptr(),
                1,
                samples.as_ptr(),
                &mut field,
            );
            assert_eq!(code, SobolabStatus::InvalidArgument);
            let msg = sobolab_last_error();
            assert!(!msg.is_null());
            let text = CStr::from_ptr(msg).to_str().unwrap();
            assert!(text.contains("power of two"), "{text}");
        }
    }

    #[test]
    fn trace_constant_through_abi() {
        unsafe {
            let mut v = 0.0;
            assert_eq!(sobolab_trace_constant(1.0, &mut v), SobolabStatus::Ok);
            assert!((v - std::f64::consts::PI).abs() < 1e-12);
            assert_eq!(
                sobolab_trace_constant(0.4, &mut v),
                SobolabStatus::InvalidArgument
            );
        }
    }

    #[test]
    fn run_experiment_through_abi() {
        unsafe {
            let dir = tempfile::tempdir().unwrap();
            let name = CString::new("appendix").unwrap();
            let out = CString::new(dir.path().to_str().unwrap()).unwrap();
            let code = sobolab_run_experiment(name.as_ptr(), ptr::null(), out.as_ptr());
            assert_eq!(code, SobolabStatus::Ok);
            assert!(dir.path().join("appendix.json").exists());
            let bad = CString::new("no-such-experiment").unwrap();
            let code = sobolab_run_experiment(bad.as_ptr(), ptr::null(), out.as_ptr());
            assert_eq!(code, SobolabStatus::InvalidArgument);
        }
    }
}
