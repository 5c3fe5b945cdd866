use std::ffi::{CStr, CString};
use std::ptr;

use crossrate::probability::{integrate_intensity, AdaptiveParams};
use crossrate::scenario::{Preset, Scenario};
use crossrate::Method;
use crossrate_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(crossrate_last_error()) }.to_string_lossy().into_owned()
}

fn preset(name: &str) -> *mut CrossrateScenario {
    let name = CString::new(name).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { crossrate_scenario_from_preset(name.as_ptr(), &mut out) }, CrossrateStatus::Ok);
    assert!(!out.is_null());
    out
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(crossrate_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { crossrate_scenario_from_preset(ptr::null(), &mut out) }, CrossrateStatus::NullPointer);
    assert!(last_error().contains("name"));
    let name = CString::new("front").unwrap();
    assert_eq!(unsafe { crossrate_scenario_from_preset(name.as_ptr(), ptr::null_mut()) }, CrossrateStatus::NullPointer);
    let mut rate = CrossrateRate::default();
    assert_eq!(
        unsafe { crossrate_intensity(ptr::null(), 1.0, CrossrateMethod::Quadrature, &mut rate) },
        CrossrateStatus::NullPointer
    );
    let s = preset("front");
    assert_eq!(
        unsafe { crossrate_intensity(s, 1.0, CrossrateMethod::Quadrature, ptr::null_mut()) },
        CrossrateStatus::NullPointer
    );
    assert!(unsafe { crossrate_scenario_horizon(ptr::null()) }.is_nan());
    unsafe {
        crossrate_scenario_free(s);
        crossrate_scenario_free(ptr::null_mut());
    }
}

#[test]
fn bad_inputs_map_to_status_codes() {
    let name = CString::new("sideways").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { crossrate_scenario_from_preset(name.as_ptr(), &mut out) }, CrossrateStatus::Config);
    assert!(out.is_null());
    assert!(last_error().contains("sideways"), "{}", last_error());

    let toml = CString::new("preset = \"front\"\nn_traj = 0\n").unwrap();
    assert_eq!(unsafe { crossrate_scenario_from_toml(toml.as_ptr(), &mut out) }, CrossrateStatus::Config);
    assert!(last_error().contains("n_traj"), "{}", last_error());

    let s = preset("front");
    let mut b = CrossrateBound::default();
    let status = unsafe { crossrate_probability_bound(s, CrossrateMethod::Quadrature, 0.05, 5.0, 2.0, &mut b) };
    assert_eq!(status, CrossrateStatus::InvalidArgument);
    let status = unsafe { crossrate_adaptive_bound(s, CrossrateMethod::Quadrature, 0.2, 0.5, 0.01, 0.0, 8.0, &mut b) };
    assert_eq!(status, CrossrateStatus::InvalidArgument);
    unsafe { crossrate_scenario_free(s) };
}

#[test]
fn results_match_the_library() {
    let s = preset("front-right");
    let core = Scenario::preset(Preset::FrontRight).unwrap();
    assert_eq!(unsafe { crossrate_scenario_horizon(s) }, core.config.horizon);

    let mut rate = CrossrateRate::default();
    assert_eq!(unsafe { crossrate_intensity(s, 4.2, CrossrateMethod::Taylor1Cov, &mut rate) }, CrossrateStatus::Ok);
    let want = core.intensity_at(4.2, Method::Taylor1Cov).unwrap();
    assert_eq!(rate.mu_total, want.mu_plus);
    assert_eq!(rate.mu_segment, want.per_segment);

    let mut b = CrossrateBound::default();
    assert_eq!(
        unsafe { crossrate_probability_bound(s, CrossrateMethod::Quadrature, 0.05, 0.0, 8.0, &mut b) },
        CrossrateStatus::Ok
    );
    let want = integrate_intensity(&core.dense_curve(Method::Quadrature, 0.05).unwrap(), 0.0, 8.0).unwrap();
    assert_eq!(b.p_upper, want.p_upper);
    assert_eq!(b.p_segment, want.per_segment);

    let mut a = CrossrateBound::default();
    assert_eq!(
        unsafe { crossrate_adaptive_bound(s, CrossrateMethod::Quadrature, 0.5, 0.2, 0.01, 0.0, 8.0, &mut a) },
        CrossrateStatus::Ok
    );
    let outcome = core.adaptive_curve(Method::Quadrature, AdaptiveParams::default()).unwrap();
    assert_eq!(a.evaluations, outcome.evaluations);
    assert!(((a.p_upper - b.p_upper) / b.p_upper).abs() < 0.05);
    unsafe { crossrate_scenario_free(s) };
}

#[test]
fn toml_scenarios_are_accepted() {
    let toml = CString::new("preset = \"front\"\nhorizon = 6.0\n").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { crossrate_scenario_from_toml(toml.as_ptr(), &mut out) }, CrossrateStatus::Ok);
    assert_eq!(unsafe { crossrate_scenario_horizon(out) }, 6.0);
    unsafe { crossrate_scenario_free(out) };
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/crossrate.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["crossrate_scenario_from_preset", "crossrate_adaptive_bound", "CROSSRATE_STATUS_OK"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc").args(["-std=c99", "-fsyntax-only", "-x", "c", header]).status()
    else {
        eprintln!("no C compiler found; skipped the syntax check");
        return;
    };
    assert!(status.success());
}
