//! C ABI over `pfrad`.
//!
//! Every entry point returns a [`PfradStatus`]. On failure the message of the
//! last error on the calling thread is available through [`pfrad_last_error`].
//! Setups are opaque handles created by [`pfrad_setup_new`] and released with
//! [`pfrad_setup_free`]; strings returned by the library are released with
//! [`pfrad_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pfrad::amplitudes::{survival_terms, transition_eps, transition_limit_point};
use pfrad::cli::{cmd_verify, parse_config, RunConfig};
use pfrad::oracle::{stone_survival, stone_transition};
use pfrad::resolvent::PhotonSpec;
use pfrad::{Complex64, Error, PhysicalParams, Setup};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfradStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Pole = 3,
    Cut = 4,
    Branch = 5,
    Accuracy = 6,
    Conditioning = 7,
    Size = 8,
    Singular = 9,
    Construction = 10,
    Config = 11,
    Utf8 = 12,
    Panic = 13,
}

impl From<&Error> for PfradStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => Self::Domain,
            Error::Pole { .. } => Self::Pole,
            Error::Cut { .. } => Self::Cut,
            Error::Branch(_) => Self::Branch,
            Error::Accuracy { .. } => Self::Accuracy,
            Error::Conditioning(_) => Self::Conditioning,
            Error::Size(_) => Self::Size,
            Error::Singular(_) => Self::Singular,
            Error::Construction(_) => Self::Construction,
            Error::Config(_) => Self::Config,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PfradComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for PfradComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<PfradComplex> for Complex64 {
    fn from(z: PfradComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Runaway rate, resonance poles and normalization constants.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PfradSpectral {
    pub lambda_e: f64,
    pub z_plus: PfradComplex,
    pub z_minus: PfradComplex,
    pub omega_e: f64,
    pub gamma_e: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa: f64,
    pub projection_weight: f64,
}

/// Survival amplitude at one time.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PfradSurvival {
    pub t: f64,
    pub s: PfradComplex,
    pub s_hat: PfradComplex,
    /// The four-term sum before the normalization prefactor.
    pub total: PfradComplex,
    pub error: f64,
}

/// Emitted photon: frequency, regularization, unit direction and polarization.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PfradPhoton {
    pub nu: f64,
    pub eps: f64,
    pub k: [f64; 3],
    pub zeta: [PfradComplex; 3],
}

/// Emission amplitude at one time.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PfradTransition {
    pub t: f64,
    pub eps: f64,
    /// Scalar amplitude before the geometric factor.
    pub total: PfradComplex,
    pub geometric: PfradComplex,
    pub amplitude: PfradComplex,
    pub error: f64,
}

/// Quadrature oracle value with its error estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PfradOracle {
    pub value: PfradComplex,
    pub error: f64,
    pub converged: bool,
}

/// Opaque handle to solved parameters.
pub struct PfradSetup {
    inner: Setup,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), PfradStatus>) -> PfradStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PfradStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            PfradStatus::Panic
        }
    }
}

fn fail(e: Error) -> PfradStatus {
    set_last_error(&e.to_string());
    PfradStatus::from(&e)
}

fn null(what: &str) -> PfradStatus {
    set_last_error(&format!("{what} is null"));
    PfradStatus::NullPointer
}

unsafe fn setup_ref<'a>(p: *const PfradSetup) -> Result<&'a Setup, PfradStatus> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("setup"))
}

unsafe fn out_mut<'a, T>(p: *mut T) -> Result<&'a mut T, PfradStatus> {
    p.as_mut().ok_or_else(|| null("output pointer"))
}

fn photon_spec(p: &PfradPhoton) -> Result<PhotonSpec, PfradStatus> {
    PhotonSpec::new(p.nu, p.eps, p.k, p.zeta.map(Complex64::from)).map_err(fail)
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn pfrad_status_string(status: PfradStatus) -> *const c_char {
    let s: &'static CStr = match status {
        PfradStatus::Ok => c"ok",
        PfradStatus::NullPointer => c"null pointer argument",
        PfradStatus::Domain => c"argument outside the domain",
        PfradStatus::Pole => c"evaluation at a pole",
        PfradStatus::Cut => c"evaluation on the branch cut",
        PfradStatus::Branch => c"branch violation",
        PfradStatus::Accuracy => c"quadrature did not converge",
        PfradStatus::Conditioning => c"ill-conditioned basis",
        PfradStatus::Size => c"size limit exceeded",
        PfradStatus::Singular => c"singular configuration",
        PfradStatus::Construction => c"invalid construction input",
        PfradStatus::Config => c"invalid configuration",
        PfradStatus::Utf8 => c"string is not valid UTF-8",
        PfradStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Copies the last error message of this thread into `buf` (nul-terminated,
/// truncated to `len`). Returns the length the full message needs, including
/// the terminator. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pfrad_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = (bytes.len() - 1).min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pfrad_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Solves the spectral data for the given parameters.
///
/// # Safety
/// `out` must be valid for writing a handle pointer.
#[no_mangle]
pub unsafe extern "C" fn pfrad_setup_new(
    e: f64,
    m: f64,
    c: f64,
    omega0: f64,
    hbar: f64,
    out: *mut *mut PfradSetup,
) -> PfradStatus {
    guard(|| {
        let out = out_mut(out)?;
        *out = std::ptr::null_mut();
        let setup = PhysicalParams::new(e, m, c, omega0, hbar).and_then(Setup::new).map_err(fail)?;
        *out = Box::into_raw(Box::new(PfradSetup { inner: setup }));
        Ok(())
    })
}

/// Releases a handle from [`pfrad_setup_new`]. Null is ignored.
///
/// # Safety
/// `setup` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pfrad_setup_free(setup: *mut PfradSetup) {
    if !setup.is_null() {
        drop(Box::from_raw(setup));
    }
}

/// # Safety
/// `setup` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pfrad_setup_spectral(setup: *const PfradSetup, out: *mut PfradSpectral) -> PfradStatus {
    guard(|| {
        let s = setup_ref(setup)?.spectral;
        *out_mut(out)? = PfradSpectral {
            lambda_e: s.lambda_e,
            z_plus: s.z_plus.into(),
            z_minus: s.z_minus.into(),
            omega_e: s.omega_e,
            gamma_e: s.gamma_e,
            kappa0: s.kappa0,
            kappa1: s.kappa1,
            kappa2: s.kappa2,
            kappa: s.kappa,
            projection_weight: s.projection_weight(),
        };
        Ok(())
    })
}

/// Survival amplitude of the oscillator level at time `t` (nonzero).
///
/// # Safety
/// `setup` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pfrad_survival(setup: *const PfradSetup, t: f64, out: *mut PfradSurvival) -> PfradStatus {
    guard(|| {
        let setup = setup_ref(setup)?;
        let out = out_mut(out)?;
        let b = survival_terms(t, setup).map_err(fail)?;
        *out = PfradSurvival { t, s: b.s.into(), s_hat: b.s_hat.into(), total: b.total.into(), error: b.error };
        Ok(())
    })
}

/// Survival amplitudes S(t) at `n` times. Stops at the first failing time.
///
/// # Safety
/// `times` must be valid for `n` reads and `out` for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn pfrad_survival_series(
    setup: *const PfradSetup,
    times: *const f64,
    n: usize,
    out: *mut PfradComplex,
) -> PfradStatus {
    guard(|| {
        let setup = setup_ref(setup)?;
        if n == 0 {
            return Ok(());
        }
        if times.is_null() {
            return Err(null("times"));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let times = std::slice::from_raw_parts(times, n);
        let out = std::slice::from_raw_parts_mut(out, n);
        for (t, o) in times.iter().zip(out.iter_mut()) {
            *o = survival_terms(*t, setup).map_err(fail)?.s.into();
        }
        Ok(())
    })
}

/// Independent quadrature value of the survival amplitude S(t).
///
/// # Safety
/// `setup` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pfrad_survival_oracle(setup: *const PfradSetup, t: f64, out: *mut PfradOracle) -> PfradStatus {
    guard(|| {
        let setup = setup_ref(setup)?;
        let out = out_mut(out)?;
        let r = stone_survival(t, setup).map_err(fail)?;
        *out = PfradOracle { value: r.value.into(), error: r.error, converged: r.converged };
        Ok(())
    })
}

/// Emission amplitude at time `t` from the level with polarization `level`
/// (three complex entries). `photon->eps == 0` gives the regularization limit.
///
/// # Safety
/// All pointers must be valid; `level` must point to three entries.
#[no_mangle]
pub unsafe extern "C" fn pfrad_transition(
    setup: *const PfradSetup,
    t: f64,
    photon: *const PfradPhoton,
    level: *const PfradComplex,
    out: *mut PfradTransition,
) -> PfradStatus {
    guard(|| {
        let setup = setup_ref(setup)?;
        let photon = photon_spec(photon.as_ref().ok_or_else(|| null("photon"))?)?;
        if level.is_null() {
            return Err(null("level"));
        }
        let l = std::slice::from_raw_parts(level, 3);
        let level = [l[0].into(), l[1].into(), l[2].into()];
        let out = out_mut(out)?;
        let b = if photon.eps > 0.0 {
            transition_eps(t, &photon, &level, setup)
        } else {
            transition_limit_point(t, &photon, &level, setup)
        }
        .map_err(fail)?;
        *out = PfradTransition {
            t,
            eps: b.eps,
            total: b.total.into(),
            geometric: b.geometric.into(),
            amplitude: b.amplitude.into(),
            error: b.error,
        };
        Ok(())
    })
}

/// Independent quadrature value of the scalar emission amplitude (`total`) at `t`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pfrad_transition_oracle(
    setup: *const PfradSetup,
    t: f64,
    photon: *const PfradPhoton,
    out: *mut PfradOracle,
) -> PfradStatus {
    guard(|| {
        let setup = setup_ref(setup)?;
        let photon = photon_spec(photon.as_ref().ok_or_else(|| null("photon"))?)?;
        let out = out_mut(out)?;
        let r = stone_transition(t, &photon, setup).map_err(fail)?;
        *out = PfradOracle { value: r.value.into(), error: r.error, converged: r.converged };
        Ok(())
    })
}

/// Runs the verification suite. `config` is configuration text (null for
/// defaults). On success `*passed` tells whether every check passed and
/// `*report` receives the JSON report, to be freed with [`pfrad_string_free`].
///
/// # Safety
/// `config` must be null or a nul-terminated string; `passed` and `report`
/// must be valid for writing (`report` may be null to skip the report).
#[no_mangle]
pub unsafe extern "C" fn pfrad_verify(
    config: *const c_char,
    passed: *mut bool,
    report: *mut *mut c_char,
) -> PfradStatus {
    guard(|| {
        let passed = out_mut(passed)?;
        if !report.is_null() {
            *report = std::ptr::null_mut();
        }
        let cfg = if config.is_null() {
            RunConfig::default()
        } else {
            let text = CStr::from_ptr(config).to_str().map_err(|e| {
                set_last_error(&format!("config: {e}"));
                PfradStatus::Utf8
            })?;
            parse_config(text).map_err(fail)?
        };
        let r = cmd_verify(&cfg, None).map_err(fail)?;
        *passed = r.passed;
        if !report.is_null() {
            let json = serde_json::to_string_pretty(&r).expect("report serializes");
            *report = CString::new(json).expect("json has no nul").into_raw();
        }
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn pfrad_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
