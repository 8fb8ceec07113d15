//! The C ABI driven from Rust through the same `extern "C"` symbols.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use openkrylov_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { okv_last_error(buf.as_mut_ptr(), buf.len()) };
    let msg = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(msg.len(), n.min(255));
    msg
}

fn chain_from_config(toml: &str) -> (OkvStatus, *mut OkvChain) {
    let text = CString::new(toml).unwrap();
    let mut chain = ptr::null_mut();
    let status = unsafe { okv_chain_from_config(text.as_ptr(), &mut chain) };
    (status, chain)
}

fn modes(spec: *const OkvSpectrum) -> Vec<OkvMode> {
    (0..unsafe { okv_spectrum_len(spec) })
        .map(|i| {
            let mut m = OkvMode::default();
            assert_eq!(unsafe { okv_spectrum_mode(spec, i, &mut m) }, OkvStatus::Ok);
            m
        })
        .collect()
}

#[test]
fn coefficients_round_trip() {
    let b = [1.0, 2.0, 3.5];
    let mut chain = ptr::null_mut();
    assert_eq!(unsafe { okv_chain_from_coefficients(b.as_ptr(), b.len(), &mut chain) }, OkvStatus::Ok);
    assert_eq!(unsafe { okv_chain_len(chain) }, 3);
    let mut out = [0.0; 3];
    assert_eq!(unsafe { okv_chain_coefficients(chain, out.as_mut_ptr(), 3) }, OkvStatus::Ok);
    assert_eq!(out, b);
    assert_eq!(unsafe { okv_chain_coefficients(chain, out.as_mut_ptr(), 2) }, OkvStatus::InvalidArgument);
    unsafe { okv_chain_free(chain) };
}

#[test]
fn bad_inputs_map_to_status_codes() {
    let mut chain = ptr::null_mut();
    let b = [1.0, f64::NAN];
    assert_eq!(unsafe { okv_chain_from_coefficients(b.as_ptr(), 2, &mut chain) }, OkvStatus::Numerical);
    assert!(last_error().contains("b_2"));
    assert!(chain.is_null());
    assert_eq!(unsafe { okv_chain_from_coefficients(ptr::null(), 2, &mut chain) }, OkvStatus::InvalidArgument);
    assert_eq!(unsafe { okv_chain_from_config(ptr::null(), &mut chain) }, OkvStatus::InvalidArgument);
    assert_eq!(unsafe { okv_chain_len(ptr::null()) }, 0);
    unsafe { okv_chain_free(ptr::null_mut()) };

    let (status, _) = chain_from_config("depht = 3\n");
    assert_eq!(status, OkvStatus::Config);
    assert!(last_error().contains("depht"));

    let (status, _) = chain_from_config("model = \"xxz\"\ndelta = 1.0\nfield_j = 0.0\nseed = \"Q1\"\ndepth = 4\n");
    assert_eq!(status, OkvStatus::Precondition);
    assert!(last_error().starts_with("conserved_seed"));
}

#[test]
fn linear_chain_spectrum_through_handles() {
    let (status, chain) = chain_from_config("model = \"ideal_linear\"\ndepth = 20\n");
    assert_eq!(status, OkvStatus::Ok);
    assert_eq!(unsafe { okv_chain_len(chain) }, 21);
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { okv_spectrum_new(chain, 20, OkvBoundary::Open, 0.0, &mut spec) }, OkvStatus::Ok);
    let ms = modes(spec);
    assert_eq!(ms.len(), 21);
    for target in [-1.0, -3.0] {
        assert!(ms.iter().any(|m| m.re.abs() < 1e-8 && (m.im - target).abs() < 1e-8));
    }
    assert!(ms.iter().all(|m| m.class == OkvModeClass::Transient as i32));
    let mut m = OkvMode::default();
    assert_eq!(unsafe { okv_spectrum_mode(spec, 21, &mut m) }, OkvStatus::InvalidArgument);
    // l = 21 needs b_22 on an open chain.
    let mut other = ptr::null_mut();
    assert_eq!(unsafe { okv_spectrum_new(chain, 21, OkvBoundary::Open, 0.0, &mut other) }, OkvStatus::Precondition);
    unsafe {
        okv_spectrum_free(spec);
        okv_chain_free(chain);
    }
}

#[test]
fn evolution_starts_on_site_zero_and_keeps_norm_bounded() {
    let b: Vec<f64> = (1..=11).map(f64::from).collect();
    let mut chain = ptr::null_mut();
    assert_eq!(unsafe { okv_chain_from_coefficients(b.as_ptr(), b.len(), &mut chain) }, OkvStatus::Ok);
    let times = [0.0, 0.5, 1.0];
    let (mut re, mut im) = ([0.0; 3], [0.0; 3]);
    let status = unsafe {
        okv_evolve(chain, 10, OkvBoundary::Dirichlet, 0.0, times.as_ptr(), 3, 0, re.as_mut_ptr(), im.as_mut_ptr())
    };
    assert_eq!(status, OkvStatus::Ok);
    assert_eq!((re[0], im[0]), (1.0, 0.0));
    // Infinite-chain value sech(t) holds well before the front reaches site 10.
    assert!((re[1] - 0.5f64.cosh().recip()).abs() < 1e-8);
    let status = unsafe {
        okv_evolve(chain, 10, OkvBoundary::Open, 0.0, times.as_ptr(), 3, 11, re.as_mut_ptr(), im.as_mut_ptr())
    };
    assert_eq!(status, OkvStatus::InvalidArgument);
    unsafe { okv_chain_free(chain) };
}

#[test]
fn quench_needs_a_krylov_basis() {
    let (status, chain) =
        chain_from_config("model = \"xxz\"\nseed = \"Q3\"\ndepth = 6\ncoeff_threshold = 1e-8\n");
    assert_eq!(status, OkvStatus::Ok);
    let times = [0.0, 0.1];
    let mut out = [0.0; 2];
    assert_eq!(unsafe { okv_quench(chain, 6, OkvBoundary::Open, times.as_ptr(), 2, out.as_mut_ptr()) }, OkvStatus::Ok);
    assert_eq!(out[0], 0.5);
    assert!(out[1].is_finite());
    unsafe { okv_chain_free(chain) };

    let b = [1.0, 2.0];
    let mut bare = ptr::null_mut();
    assert_eq!(unsafe { okv_chain_from_coefficients(b.as_ptr(), 2, &mut bare) }, OkvStatus::Ok);
    assert_eq!(unsafe { okv_quench(bare, 1, OkvBoundary::Open, times.as_ptr(), 2, out.as_mut_ptr()) }, OkvStatus::Precondition);
    assert!(last_error().contains("Krylov basis"));
    unsafe { okv_chain_free(bare) };
}

#[test]
fn error_buffer_truncates_and_reports_full_length() {
    let mut chain = ptr::null_mut();
    let b = [f64::INFINITY];
    assert_eq!(unsafe { okv_chain_from_coefficients(b.as_ptr(), 1, &mut chain) }, OkvStatus::Numerical);
    let mut small = [0 as c_char; 4];
    let full = unsafe { okv_last_error(small.as_mut_ptr(), small.len()) };
    assert!(full > 3);
    assert_eq!(unsafe { CStr::from_ptr(small.as_ptr()) }.to_bytes().len(), 3);
    assert_eq!(unsafe { okv_last_error(ptr::null_mut(), 0) }, full);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/openkrylov.h")).unwrap();
    for name in [
        "okv_chain_from_config",
        "okv_chain_from_coefficients",
        "okv_chain_len",
        "okv_chain_coefficients",
        "okv_chain_free",
        "okv_spectrum_new",
        "okv_spectrum_len",
        "okv_spectrum_mode",
        "okv_spectrum_free",
        "okv_evolve",
        "okv_quench",
        "okv_last_error",
        "okv_version",
        "typedef struct OkvChain OkvChain",
        "OKV_STATUS_PRECONDITION = 4",
    ] {
        assert!(header.contains(name), "{name}");
    }
    let v = unsafe { CStr::from_ptr(okv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
