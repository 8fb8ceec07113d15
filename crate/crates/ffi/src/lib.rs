//! C ABI over the openkrylov library.
//!
//! Chains and spectra are opaque handles owned by the caller and released
//! with the matching `_free` function. Every fallible call returns an
//! [`OkvStatus`]; the message of the last failure on the calling thread is
//! available from [`okv_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use openkrylov::config::{ModelFamily, RunConfig};
use openkrylov::ideal::{dissipative_toy_coefficients, linear_coefficients, sqrt_coefficients};
use openkrylov::lanczos::{lanczos_run, KrylovChain, LanczosOptions};
use openkrylov::models::build_seed;
use openkrylov::open_chain::{
    build_liouvillian, evolve, spectrum, BoundaryKind, ChainState, EvolveOptions, ModeClass, OpenLiouvillian,
    Spectrum, SpectrumOptions,
};
use openkrylov::quench::quench_trajectory;
use openkrylov::Error;

/// Status codes. The nonzero values below 5 match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OkvStatus {
    Ok = 0,
    Config = 2,
    Numerical = 3,
    Precondition = 4,
    /// Null pointer, index out of range or undersized output buffer.
    InvalidArgument = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OkvBoundary {
    Open = 0,
    Dirichlet = 1,
    /// Hard wall plus decay `-gamma(2n+1)` on the diagonal.
    DiagonalDissipative = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OkvModeClass {
    Perpetual = 0,
    Transient = 1,
    Growing = 2,
}

/// One eigenpair summary of a truncated chain.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct OkvMode {
    pub re: f64,
    pub im: f64,
    pub class: i32,
    pub mean_position: f64,
    pub residual: f64,
}

/// Lanczos coefficients, with the Krylov basis when built from a model.
pub struct OkvChain {
    b: Vec<f64>,
    krylov: Option<KrylovChain>,
}

pub struct OkvSpectrum {
    inner: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: OkvStatus, msg: impl Into<String>) -> OkvStatus {
    set_error(msg.into());
    status
}

fn from_error(e: &Error) -> OkvStatus {
    let status = match e.exit_code() {
        2 => OkvStatus::Config,
        3 => OkvStatus::Numerical,
        _ => OkvStatus::Precondition,
    };
    fail(status, format!("{}: {e}", e.kind()))
}

/// Runs `f` with panics turned into [`OkvStatus::Panic`].
fn guard(f: impl FnOnce() -> OkvStatus) -> OkvStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        fail(OkvStatus::Panic, msg)
    })
}

fn boundary(kind: OkvBoundary, gamma: f64) -> BoundaryKind {
    match kind {
        OkvBoundary::Open => BoundaryKind::Open,
        OkvBoundary::Dirichlet => BoundaryKind::Dirichlet,
        OkvBoundary::DiagonalDissipative => BoundaryKind::DiagonalDissipative { gamma },
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable values.
unsafe fn input<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

/// # Safety
/// `ptr` must be null or point to `len` writable values.
unsafe fn output<'a, T>(ptr: *mut T, len: usize) -> Option<&'a mut [T]> {
    if len == 0 {
        Some(&mut [])
    } else if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts_mut(ptr, len))
    }
}

fn chain_from_config(cfg: &RunConfig) -> openkrylov::Result<OkvChain> {
    let count = cfg.depth + 1;
    let b = match cfg.model {
        ModelFamily::IdealLinear => linear_coefficients(cfg.alpha_j, count),
        ModelFamily::IdealSqrt => sqrt_coefficients(count),
        ModelFamily::DissipativeToy => dissipative_toy_coefficients(cfg.gamma, count),
        ModelFamily::Xxz | ModelFamily::ChaoticIsing => {
            let geom = cfg.geometry()?;
            let h = cfg.model_spec()?.build(geom.n_sites, geom.layout())?;
            let seed = build_seed(cfg.seed_name()?, geom.n_sites, geom.layout())?;
            let chain = lanczos_run(&h, &seed, &geom, &LanczosOptions::new(cfg.depth, cfg.policy(), true), &cfg.seed)?;
            return Ok(OkvChain {
                b: chain.b.clone(),
                krylov: Some(chain),
            });
        }
    };
    Ok(OkvChain { b, krylov: None })
}

fn liouvillian(chain: &OkvChain, l: usize, kind: OkvBoundary, gamma: f64) -> openkrylov::Result<OpenLiouvillian> {
    build_liouvillian(&chain.b, l, boundary(kind, gamma))
}

/// Builds a chain from TOML run-configuration text. Operator models run
/// Lanczos and keep the Krylov basis so [`okv_quench`] can use it; ideal
/// models produce `b_1..b_{depth+1}` directly.
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated string and `out` a valid
/// pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn okv_chain_from_config(config_toml: *const c_char, out: *mut *mut OkvChain) -> OkvStatus {
    guard(|| {
        if config_toml.is_null() || out.is_null() {
            return fail(OkvStatus::InvalidArgument, "null argument");
        }
        let Ok(text) = CStr::from_ptr(config_toml).to_str() else {
            return fail(OkvStatus::InvalidArgument, "config is not UTF-8");
        };
        let chain = RunConfig::from_toml_str(text).and_then(|cfg| chain_from_config(&cfg));
        match chain {
            Ok(c) => {
                *out = Box::into_raw(Box::new(c));
                OkvStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Wraps caller-supplied coefficients `b_1..b_len`.
///
/// # Safety
/// `b` must point to `len` readable doubles and `out` to writable storage
/// for one handle.
#[no_mangle]
pub unsafe extern "C" fn okv_chain_from_coefficients(b: *const f64, len: usize, out: *mut *mut OkvChain) -> OkvStatus {
    guard(|| {
        let Some(b) = input(b, len) else {
            return fail(OkvStatus::InvalidArgument, "null coefficients");
        };
        if out.is_null() {
            return fail(OkvStatus::InvalidArgument, "null output handle");
        }
        if let Some(bad) = b.iter().position(|x| !x.is_finite() || *x <= 0.0) {
            return fail(OkvStatus::Numerical, format!("b_{} = {} is not finite and positive", bad + 1, b[bad]));
        }
        *out = Box::into_raw(Box::new(OkvChain {
            b: b.to_vec(),
            krylov: None,
        }));
        OkvStatus::Ok
    })
}

/// Number of coefficients, or 0 for a null handle.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn okv_chain_len(chain: *const OkvChain) -> usize {
    chain.as_ref().map_or(0, |c| c.b.len())
}

/// Copies `b_1..b_len` into `out`, which must hold `okv_chain_len` values.
///
/// # Safety
/// `chain` must be a live handle and `out` must point to `cap` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn okv_chain_coefficients(chain: *const OkvChain, out: *mut f64, cap: usize) -> OkvStatus {
    guard(|| {
        let Some(chain) = chain.as_ref() else {
            return fail(OkvStatus::InvalidArgument, "null chain");
        };
        if cap < chain.b.len() {
            return fail(OkvStatus::InvalidArgument, format!("buffer holds {cap}, need {}", chain.b.len()));
        }
        let Some(dst) = output(out, chain.b.len()) else {
            return fail(OkvStatus::InvalidArgument, "null output buffer");
        };
        dst.copy_from_slice(&chain.b);
        OkvStatus::Ok
    })
}

/// # Safety
/// `chain` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn okv_chain_free(chain: *mut OkvChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Eigen-decomposition of the chain truncated at site `l`. `gamma` is read
/// only for the dissipative boundary.
///
/// # Safety
/// `chain` must be a live handle and `out` a valid pointer to writable
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn okv_spectrum_new(
    chain: *const OkvChain,
    l: usize,
    kind: OkvBoundary,
    gamma: f64,
    out: *mut *mut OkvSpectrum,
) -> OkvStatus {
    guard(|| {
        let Some(chain) = chain.as_ref() else {
            return fail(OkvStatus::InvalidArgument, "null chain");
        };
        if out.is_null() {
            return fail(OkvStatus::InvalidArgument, "null output handle");
        }
        match liouvillian(chain, l, kind, gamma).and_then(|lv| spectrum(&lv, &SpectrumOptions::default())) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(OkvSpectrum { inner: s }));
                OkvStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn okv_spectrum_len(spec: *const OkvSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.inner.modes.len())
}

/// Mode `index`, in order of decreasing `Im ω`.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn okv_spectrum_mode(spec: *const OkvSpectrum, index: usize, out: *mut OkvMode) -> OkvStatus {
    guard(|| {
        let (Some(spec), Some(out)) = (spec.as_ref(), out.as_mut()) else {
            return fail(OkvStatus::InvalidArgument, "null argument");
        };
        let Some(m) = spec.inner.modes.get(index) else {
            return fail(OkvStatus::InvalidArgument, format!("mode {index} of {}", spec.inner.modes.len()));
        };
        let class = match m.class {
            ModeClass::Perpetual => OkvModeClass::Perpetual,
            ModeClass::Transient => OkvModeClass::Transient,
            ModeClass::Growing => OkvModeClass::Growing,
        };
        *out = OkvMode {
            re: m.omega.re,
            im: m.omega.im,
            class: class as i32,
            mean_position: m.mean_position,
            residual: m.residual,
        };
        OkvStatus::Ok
    })
}

/// # Safety
/// `spec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn okv_spectrum_free(spec: *mut OkvSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Amplitude `φ_site(t)` of the truncated chain started from `φ = δ_{n0}`,
/// written to `out_re[k]`, `out_im[k]` for each `times[k]`.
///
/// # Safety
/// `chain` must be a live handle; `times`, `out_re` and `out_im` must each
/// point to `n_times` doubles.
#[no_mangle]
pub unsafe extern "C" fn okv_evolve(
    chain: *const OkvChain,
    l: usize,
    kind: OkvBoundary,
    gamma: f64,
    times: *const f64,
    n_times: usize,
    site: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> OkvStatus {
    guard(|| {
        let Some(chain) = chain.as_ref() else {
            return fail(OkvStatus::InvalidArgument, "null chain");
        };
        let (Some(times), Some(re), Some(im)) = (input(times, n_times), output(out_re, n_times), output(out_im, n_times)) else {
            return fail(OkvStatus::InvalidArgument, "null time or output buffer");
        };
        if site > l {
            return fail(OkvStatus::InvalidArgument, format!("site {site} outside 0..={l}"));
        }
        let states = liouvillian(chain, l, kind, gamma)
            .and_then(|lv| evolve(&lv, &ChainState::initial(lv.size()), times, &EvolveOptions::default()));
        match states {
            Ok(states) => {
                for (k, s) in states.iter().enumerate() {
                    re[k] = s.phi[site].re;
                    im[k] = s.phi[site].im;
                }
                OkvStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Per-site `⟨O_0(t)⟩` after a quench from `|+⟩^⊗N`. Needs a chain built
/// from an operator model by [`okv_chain_from_config`].
///
/// # Safety
/// `chain` must be a live handle; `times` and `out` must each point to
/// `n_times` doubles.
#[no_mangle]
pub unsafe extern "C" fn okv_quench(
    chain: *const OkvChain,
    l: usize,
    kind: OkvBoundary,
    times: *const f64,
    n_times: usize,
    out: *mut f64,
) -> OkvStatus {
    guard(|| {
        let Some(chain) = chain.as_ref() else {
            return fail(OkvStatus::InvalidArgument, "null chain");
        };
        let Some(krylov) = &chain.krylov else {
            return fail(OkvStatus::Precondition, "chain has no Krylov basis; build it from an operator model");
        };
        let (Some(times), Some(out)) = (input(times, n_times), output(out, n_times)) else {
            return fail(OkvStatus::InvalidArgument, "null time or output buffer");
        };
        let q = liouvillian(chain, l, kind, 0.0)
            .and_then(|lv| quench_trajectory(krylov, &lv, times, &EvolveOptions::default()));
        match q {
            Ok(q) => {
                out.copy_from_slice(&q.expectation);
                OkvStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap - 1` bytes). Returns the full message length in bytes
/// so callers can retry with a larger buffer.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn okv_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn okv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
