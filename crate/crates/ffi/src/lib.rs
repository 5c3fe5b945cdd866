//! C interface to `crossrate`.
//!
//! Scenarios are opaque handles created from a preset name or a TOML
//! document and released with `crossrate_scenario_free`. Every fallible call
//! returns a `CrossrateStatus`; on failure `crossrate_last_error` describes
//! the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use crossrate::probability::{integrate_intensity, AdaptiveParams, ProbabilityBound};
use crossrate::scenario::{Preset, Scenario, ScenarioConfig};
use crossrate::{Error, Method};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossrateStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Numerical = 5,
    Quadrature = 6,
    Convergence = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossrateMethod {
    Quadrature = 0,
    Taylor0 = 1,
    Taylor1Inv = 2,
    Taylor1Cov = 3,
}

impl From<CrossrateMethod> for Method {
    fn from(m: CrossrateMethod) -> Self {
        match m {
            CrossrateMethod::Quadrature => Method::Quadrature,
            CrossrateMethod::Taylor0 => Method::Taylor0,
            CrossrateMethod::Taylor1Inv => Method::Taylor1Inv,
            CrossrateMethod::Taylor1Cov => Method::Taylor1Cov,
        }
    }
}

/// Entry intensity at one time; segments ordered front, right, left, rear.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrossrateRate {
    pub t: f64,
    pub mu_total: f64,
    pub mu_segment: [f64; 4],
    /// Segments whose closed-form value was clamped to zero.
    pub clamped: u32,
}

/// Collision probability upper bound over `[t1, t2]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrossrateBound {
    pub t1: f64,
    pub t2: f64,
    pub p_upper: f64,
    pub p_upper_capped: f64,
    pub p_segment: [f64; 4],
    pub evaluations: usize,
}

impl From<ProbabilityBound> for CrossrateBound {
    fn from(b: ProbabilityBound) -> Self {
        CrossrateBound {
            t1: b.t1,
            t2: b.t2,
            p_upper: b.p_upper,
            p_upper_capped: b.p_upper_capped,
            p_segment: b.per_segment,
            evaluations: b.evaluations_used,
        }
    }
}

/// Opaque scenario handle.
pub struct CrossrateScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CrossrateStatus {
    match e {
        Error::Argument(_) => CrossrateStatus::InvalidArgument,
        Error::Domain(_) => CrossrateStatus::Domain,
        Error::Numerical(_) => CrossrateStatus::Numerical,
        Error::Quadrature { .. } => CrossrateStatus::Quadrature,
        Error::Convergence { .. } => CrossrateStatus::Convergence,
        Error::Config { .. } => CrossrateStatus::Config,
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

/// Runs `f`, translating errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CrossrateStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CrossrateStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            CrossrateStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            CrossrateStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Core(Error::Argument(format!("{what} is not valid UTF-8"))))
}

unsafe fn scenario_arg<'a>(p: *const CrossrateScenario) -> Result<&'a Scenario, Failure> {
    p.as_ref().map(|s| &s.inner).ok_or(Failure::Null("scenario"))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

fn boxed(s: Scenario) -> *mut CrossrateScenario {
    Box::into_raw(Box::new(CrossrateScenario { inner: s }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn crossrate_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; empty when nothing failed yet.
#[no_mangle]
pub extern "C" fn crossrate_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a scenario from a preset name (`"front"` or `"front-right"`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn crossrate_scenario_from_preset(
    name: *const c_char,
    out: *mut *mut CrossrateScenario,
) -> CrossrateStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let preset: Preset = str_arg(name, "name")?.parse()?;
        *out = boxed(Scenario::preset(preset)?);
        Ok(())
    })
}

/// Creates a scenario from a TOML document.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn crossrate_scenario_from_toml(
    toml: *const c_char,
    out: *mut *mut CrossrateScenario,
) -> CrossrateStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let config = ScenarioConfig::from_toml_str(str_arg(toml, "toml")?)?;
        *out = boxed(Scenario::new(config)?);
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from a constructor of this library and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn crossrate_scenario_free(scenario: *mut CrossrateScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Prediction horizon of the scenario, s (NaN for a null handle).
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn crossrate_scenario_horizon(scenario: *const CrossrateScenario) -> f64 {
    scenario.as_ref().map_or(f64::NAN, |s| s.inner.config.horizon)
}

/// Entry intensity at time `t`.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crossrate_intensity(
    scenario: *const CrossrateScenario,
    t: f64,
    method: CrossrateMethod,
    out: *mut CrossrateRate,
) -> CrossrateStatus {
    guard(|| {
        let s = scenario_arg(scenario)?;
        let out = out_arg(out, "out")?;
        let r = s.intensity_at(t, method.into())?;
        *out = CrossrateRate { t: r.t, mu_total: r.mu_plus, mu_segment: r.per_segment, clamped: r.clamped };
        Ok(())
    })
}

/// Upper bound over `[t1, t2]` from a uniform grid with step `dt` over the
/// scenario horizon.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crossrate_probability_bound(
    scenario: *const CrossrateScenario,
    method: CrossrateMethod,
    dt: f64,
    t1: f64,
    t2: f64,
    out: *mut CrossrateBound,
) -> CrossrateStatus {
    guard(|| {
        let s = scenario_arg(scenario)?;
        let out = out_arg(out, "out")?;
        let curve = s.dense_curve(method.into(), dt)?;
        *out = integrate_intensity(&curve, t1, t2)?.into();
        Ok(())
    })
}

/// Upper bound over `[t1, t2]` from adaptive sampling seeded with the
/// deterministic crossing times.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crossrate_adaptive_bound(
    scenario: *const CrossrateScenario,
    method: CrossrateMethod,
    dt1: f64,
    dt2: f64,
    rate_floor: f64,
    t1: f64,
    t2: f64,
    out: *mut CrossrateBound,
) -> CrossrateStatus {
    guard(|| {
        let s = scenario_arg(scenario)?;
        let out = out_arg(out, "out")?;
        let a = s.adaptive_curve(method.into(), AdaptiveParams { dt1, dt2, rate_floor })?;
        let mut bound: CrossrateBound = if a.curve.len() < 2 {
            CrossrateBound { t1, t2, ..CrossrateBound::default() }
        } else {
            integrate_intensity(&a.curve, t1, t2)?.into()
        };
        bound.evaluations = a.evaluations;
        *out = bound;
        Ok(())
    })
}
