use std::ffi::{CStr, CString};
use std::ptr;

use pfrad::amplitudes::survival_terms;
use pfrad::Setup;
use pfrad_ffi::*;

fn natural() -> *mut PfradSetup {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pfrad_setup_new(0.3, 1.0, 1.0, 1.0, 1.0, &mut h) }, PfradStatus::Ok);
    h
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { pfrad_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn spectral_matches_library() {
    let h = natural();
    let mut sp = PfradSpectral::default();
    assert_eq!(unsafe { pfrad_setup_spectral(h, &mut sp) }, PfradStatus::Ok);
    let lib = Setup::natural(0.3).unwrap().spectral;
    assert_eq!(sp.lambda_e, lib.lambda_e);
    assert_eq!(sp.gamma_e, lib.gamma_e);
    assert_eq!(sp.projection_weight, lib.projection_weight());
    unsafe { pfrad_setup_free(h) };
}

#[test]
fn survival_matches_library_and_oracle() {
    let h = natural();
    let times = [0.05, 1.0, 30.0];
    let mut out = [PfradComplex::default(); 3];
    assert_eq!(unsafe { pfrad_survival_series(h, times.as_ptr(), 3, out.as_mut_ptr()) }, PfradStatus::Ok);
    let setup = Setup::natural(0.3).unwrap();
    for (t, s) in times.iter().zip(&out) {
        let b = survival_terms(*t, &setup).unwrap();
        assert_eq!((s.re, s.im), (b.s.re, b.s.im));
        let mut o = PfradOracle::default();
        assert_eq!(unsafe { pfrad_survival_oracle(h, *t, &mut o) }, PfradStatus::Ok);
        let gap = ((o.value.re - b.s.re).powi(2) + (o.value.im - b.s.im).powi(2)).sqrt();
        assert!(gap < 1e-5 * b.s.norm(), "t = {t}: {gap}");
    }
    unsafe { pfrad_setup_free(h) };
}

#[test]
fn transition_against_oracle_and_limit() {
    let h = natural();
    let one = PfradComplex { re: 1.0, im: 0.0 };
    let zero = PfradComplex::default();
    let mut photon = PfradPhoton { nu: 1.1, eps: 0.05, k: [0.0, 0.0, 1.0], zeta: [one, zero, zero] };
    let level = [zero, one, zero];
    let mut a = PfradTransition::default();
    assert_eq!(unsafe { pfrad_transition(h, 2.0, &photon, level.as_ptr(), &mut a) }, PfradStatus::Ok);
    let mut o = PfradOracle::default();
    assert_eq!(unsafe { pfrad_transition_oracle(h, 2.0, &photon, &mut o) }, PfradStatus::Ok);
    let gap = ((o.value.re - a.total.re).powi(2) + (o.value.im - a.total.im).powi(2)).sqrt();
    assert!(gap < 1e-5 * (a.total.re.hypot(a.total.im)));
    assert!(a.amplitude.re.hypot(a.amplitude.im) > 0.0);

    photon.eps = 0.0;
    let mut lim = PfradTransition::default();
    assert_eq!(unsafe { pfrad_transition(h, 2.0, &photon, level.as_ptr(), &mut lim) }, PfradStatus::Ok);
    assert_eq!(lim.eps, 0.0);

    photon.k = [1.0, 1.0, 0.0];
    assert_eq!(unsafe { pfrad_transition(h, 2.0, &photon, level.as_ptr(), &mut lim) }, PfradStatus::Domain);
    assert!(last_error().contains("unit vector"));
    unsafe { pfrad_setup_free(h) };
}

#[test]
fn error_paths() {
    let mut h = ptr::NonNull::<PfradSetup>::dangling().as_ptr();
    assert_eq!(unsafe { pfrad_setup_new(0.3, 0.0, 1.0, 1.0, 1.0, &mut h) }, PfradStatus::Domain);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { pfrad_setup_new(0.3, 1.0, 1.0, 1.0, 1.0, ptr::null_mut()) }, PfradStatus::NullPointer);
    let mut sp = PfradSpectral::default();
    assert_eq!(unsafe { pfrad_setup_spectral(ptr::null(), &mut sp) }, PfradStatus::NullPointer);
    let h = natural();
    let mut s = PfradSurvival::default();
    assert_eq!(unsafe { pfrad_survival(h, 0.0, &mut s) }, PfradStatus::Domain);
    assert_eq!(unsafe { pfrad_survival_series(h, ptr::null(), 2, ptr::null_mut()) }, PfradStatus::NullPointer);
    assert_eq!(unsafe { pfrad_survival_series(h, ptr::null(), 0, ptr::null_mut()) }, PfradStatus::Ok);
    unsafe { pfrad_setup_free(h) };
    unsafe { pfrad_setup_free(ptr::null_mut()) };
    let msg = unsafe { CStr::from_ptr(pfrad_status_string(PfradStatus::Accuracy)) };
    assert_eq!(msg.to_str().unwrap(), "quadrature did not converge");
}

#[test]
fn verify_report_roundtrip() {
    let mut passed = false;
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { pfrad_verify(ptr::null(), &mut passed, &mut report) }, PfradStatus::Ok);
    assert!(passed);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { pfrad_string_free(report) };
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(doc["checks"].as_array().unwrap().len() >= 10);

    let bad = CString::new("grid.points = many").unwrap();
    assert_eq!(unsafe { pfrad_verify(bad.as_ptr(), &mut passed, ptr::null_mut()) }, PfradStatus::Config);
}
