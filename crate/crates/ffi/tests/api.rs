//! The C entry points called from Rust, plus a C program linked against the
//! static library.

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wavesim_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        ws_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn basis_eval_interpolates_nodes() {
    let n = ws_basis_len();
    assert_eq!(n, 11);
    let mut out = vec![0.0; n];
    assert_eq!(unsafe { ws_basis_eval(1.0, out.as_mut_ptr(), n) }, WsStatus::Ok);
    assert!((out[n - 1] - 1.0).abs() < 1e-12);
    assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn errors_are_reported() {
    let mut out = vec![0.0; 4];
    assert_eq!(unsafe { ws_basis_eval(0.5, out.as_mut_ptr(), 4) }, WsStatus::BufferTooSmall);
    assert!(last_error().contains("11 needed"), "{}", last_error());
    assert_eq!(unsafe { ws_basis_eval(0.5, ptr::null_mut(), 11) }, WsStatus::NullPointer);
    let mut full = vec![0.0; 11];
    assert_eq!(unsafe { ws_basis_eval(-1.0, full.as_mut_ptr(), 11) }, WsStatus::InvalidArgument);

    let mut model = ptr::null_mut();
    let bad = CString::new("{ \"mesh\": { \"epw\": -1 } }").unwrap();
    assert_eq!(unsafe { ws_model_new(bad.as_ptr(), &mut model) }, WsStatus::InvalidArgument);
    assert!(model.is_null());
    assert!(!last_error().is_empty());
    // a successful call clears the message
    assert_eq!(unsafe { ws_basis_eval(0.5, out.as_mut_ptr(), 4) }, WsStatus::BufferTooSmall);
    assert_eq!(unsafe { ws_basis_eval(0.5, full.as_mut_ptr(), 11) }, WsStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn crack_flexibilities_match_library() {
    let (mut cb, mut cs) = (0.0, 0.0);
    let st = unsafe { ws_crack_flexibilities(210e9, 0.3, 7850.0, 0.02, 0.02, 0.004, &mut cb, &mut cs) };
    assert_eq!(st, WsStatus::Ok);
    let mat = wavesim::element::MaterialProps::new(210e9, 0.3, 7850.0).unwrap();
    let sec = wavesim::element::SectionProps::rectangular(0.02, 0.02).unwrap();
    let (b, s) = wavesim::element::crack_flexibilities(&mat, &sec, 0.004).unwrap();
    assert_eq!((cb, cs), (b, s));
    assert!(cb > 0.0 && cs > 0.0);
}

#[test]
fn toneburst_reports_required_length() {
    let mut written = 0;
    let st = unsafe { ws_toneburst(100e3, 5, 1e-7, ptr::null_mut(), 0, &mut written) };
    assert_eq!(st, WsStatus::NullPointer);
    let mut out = vec![0.0; 10];
    let st = unsafe { ws_toneburst(100e3, 5, 1e-7, out.as_mut_ptr(), out.len(), &mut written) };
    assert_eq!(st, WsStatus::BufferTooSmall);
    assert!(written > 10);
    out.resize(written, 0.0);
    let st = unsafe { ws_toneburst(100e3, 5, 1e-7, out.as_mut_ptr(), out.len(), &mut written) };
    assert_eq!(st, WsStatus::Ok);
    let reference = wavesim::excitation::hanning_toneburst(100e3, 5, 1e-7).unwrap();
    assert_eq!(out, reference.samples);
}

#[test]
fn model_run_matches_library() {
    let text = r#"{ "mesh": { "element": "bswi-rod", "epw": 0.45 }, "grid": { "spp": 2, "duration": 0.0004 } }"#;
    let cfg = CString::new(text).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { ws_model_new(cfg.as_ptr(), &mut model) }, WsStatus::Ok);
    let mut field = ptr::null_mut();
    assert_eq!(unsafe { ws_model_run(model, &mut field) }, WsStatus::Ok);

    let p = wavesim::scenario::prepare(&wavesim::scenario::SimConfig::from_json(text).unwrap()).unwrap();
    let r = wavesim::scenario::simulate(&p).unwrap().waveforms;
    unsafe {
        assert_eq!(ws_model_dofs(model), p.system.n_dof());
        assert_eq!(ws_field_channels(field), r.channels());
        assert_eq!(ws_field_len(field), r.len());
        assert_eq!(ws_field_dt(field), r.dt);
        let mut out = vec![0.0; r.len()];
        for c in 0..r.channels() {
            assert_eq!(ws_field_copy(field, c, out.as_mut_ptr(), out.len()), WsStatus::Ok);
            assert_eq!(out, r.values[c]);
        }
        assert_eq!(ws_field_copy(field, r.channels(), out.as_mut_ptr(), out.len()), WsStatus::InvalidArgument);
        ws_field_free(field);
        ws_model_free(model);
        ws_field_free(ptr::null_mut());
        ws_model_free(ptr::null_mut());
        assert_eq!(ws_field_len(ptr::null()), 0);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ws_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn c_program_links_against_static_library() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libwavesim_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ws_smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler runs");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("channels "));
}
