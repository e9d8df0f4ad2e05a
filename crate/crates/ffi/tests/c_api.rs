use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use heavyspec_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hs_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn tail_functions() {
    let mut out = 0.0;
    assert_eq!(unsafe { hs_tail_prob(HsNoise::Pareto, 1.6, 1.0, &mut out) }, HsStatus::Ok);
    assert!((out - 0.5 * 4f64.powf(-1.6)).abs() < 1e-15);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { hs_a_of(HsNoise::Pareto, 1.6, 2, &mut out) }, HsStatus::Ok);
    assert!((out - 0.25).abs() < 1e-15);
    assert_eq!(unsafe { hs_a_of(HsNoise::Normal, 0.0, 10, &mut out) }, HsStatus::Unsupported);
    assert_eq!(unsafe { hs_tail_prob(HsNoise::Pareto, -1.0, 1.0, &mut out) }, HsStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { hs_tail_prob(HsNoise::Pareto, 1.6, 1.0, ptr::null_mut()) }, HsStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut len = 0;
    assert_eq!(
        unsafe { hs_coeffs_singular_values(ptr::null(), 0, ptr::null_mut(), 0, &mut len) },
        HsStatus::NullPointer
    );
    assert_eq!(unsafe { hs_coeffs_new(ptr::null(), ptr::null(), ptr::null(), 3, &mut ptr::null_mut()) }, HsStatus::NullPointer);
    assert_eq!(unsafe { hs_law_eval(ptr::null(), 1.0, &mut 0.0) }, HsStatus::NullPointer);
    unsafe {
        hs_coeffs_free(ptr::null_mut());
        hs_tw_free(ptr::null_mut());
    }
}

#[test]
fn coefficient_handles() {
    let (k, l, h) = ([0i64, 0, 1, 1], [0i64, 1, 0, 1], [1.0, 1.0, -2.0, 2.0]);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { hs_coeffs_new(k.as_ptr(), l.as_ptr(), h.as_ptr(), 4, &mut c) }, HsStatus::Ok);
    let mut len = 0;
    let mut buf = [0.0; 2];
    assert_eq!(unsafe { hs_coeffs_singular_values(c, 1, ptr::null_mut(), 0, &mut len) }, HsStatus::BufferTooSmall);
    assert_eq!(len, 2);
    assert_eq!(unsafe { hs_coeffs_singular_values(c, 1, buf.as_mut_ptr(), 2, &mut len) }, HsStatus::Ok);
    assert_eq!(buf, [5.0, 0.0]);
    let mut eig = vec![0.0; 10];
    assert_eq!(
        unsafe { hs_simulate_eigenvalues(c, HsNoise::Pareto, 1.6, 10, 40, 3, eig.as_mut_ptr(), 10, &mut len) },
        HsStatus::Ok
    );
    assert!(eig.windows(2).all(|w| w[0] >= w[1]) && eig[9] >= 0.0);
    let mut again = vec![0.0; 10];
    unsafe { hs_simulate_eigenvalues(c, HsNoise::Pareto, 1.6, 10, 40, 3, again.as_mut_ptr(), 10, &mut len) };
    assert_eq!(eig, again);
    unsafe { hs_coeffs_free(c) };

    let zero = [0.0];
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { hs_coeffs_new(k.as_ptr(), l.as_ptr(), zero.as_ptr(), 1, &mut c) }, HsStatus::InvalidArgument);
    assert!(c.is_null());
}

#[test]
fn eigenvalues_and_laws() {
    let a = [2.0, 1.0, 1.0, 2.0];
    let mut out = [0.0; 2];
    assert_eq!(unsafe { hs_sym_eigenvalues(a.as_ptr(), 2, out.as_mut_ptr()) }, HsStatus::Ok);
    assert!((out[0] - 3.0).abs() < 1e-14 && (out[1] - 1.0).abs() < 1e-14);
    let skew = [0.0, 1.0, -1.0, 0.0];
    assert_eq!(unsafe { hs_sym_eigenvalues(skew.as_ptr(), 2, out.as_mut_ptr()) }, HsStatus::InvalidArgument);

    let (mut loc, mut mass) = (0.0, 0.0);
    assert_eq!(unsafe { hs_gap_atom(0.6, 8.0, 2.0, &mut loc, &mut mass) }, HsStatus::Ok);
    assert_eq!(loc, 0.75);
    assert!((mass - 2f64.powf(-0.6)).abs() < 1e-15);

    let law = CString::new(r#"{"law": "frechet", "alpha_half": 0.8}"#).unwrap();
    let mut y = 0.0;
    assert_eq!(unsafe { hs_law_eval(law.as_ptr(), 1.0, &mut y) }, HsStatus::Ok);
    assert!((y - (-1f64).exp()).abs() < 1e-15);
    assert_eq!(unsafe { hs_law_eval(law.as_ptr(), -1.0, &mut y) }, HsStatus::Ok);
    assert_eq!(y, 0.0);
    let bad = CString::new(r#"{"law": "frechet"}"#).unwrap();
    assert_eq!(unsafe { hs_law_eval(bad.as_ptr(), 1.0, &mut y) }, HsStatus::Parse);
}

#[test]
fn tracy_widom_tables() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { hs_tw_new(0.0, &mut t) }, HsStatus::Ok);
    let mut coarse = ptr::null_mut();
    assert_eq!(unsafe { hs_tw_new(1e-3, &mut coarse) }, HsStatus::Ok);
    for s in [-4.0, -1.2, 0.0, 2.0] {
        let (mut a, mut b) = (0.0, 0.0);
        unsafe {
            assert_eq!(hs_tw_cdf(t, s, &mut a), HsStatus::Ok);
            assert_eq!(hs_tw_cdf(coarse, s, &mut b), HsStatus::Ok);
        }
        assert!((a - b).abs() < 1e-5 && a > 0.0 && a < 1.0);
    }
    let mut y = 0.0;
    assert_eq!(unsafe { hs_tw_cdf(t, f64::NAN, &mut y) }, HsStatus::InvalidArgument);
    unsafe {
        hs_tw_free(t);
        hs_tw_free(coarse);
    }
}

#[test]
fn errors_are_thread_local() {
    let mut out = 0.0;
    unsafe { hs_tail_prob(HsNoise::Pareto, -1.0, 1.0, &mut out) };
    let here = last_error();
    std::thread::spawn(|| assert_eq!(last_error(), "")).join().unwrap();
    assert_eq!(last_error(), here);
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !have_cc() {
        eprintln!("no C compiler; header check skipped");
        return;
    }
    let header = crate_dir().join("include/heavyspec.h");
    assert!(header.exists(), "header not generated");
    for lang in ["c", "c++"] {
        let status = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
            .unwrap();
        assert!(status.success(), "header fails as {lang}");
    }
}

/// Directory holding the library artifacts of the current profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = artifact_dir().join("libheavyspec_ffi.a");
    if !have_cc() || !lib.exists() {
        eprintln!("no C compiler or static library; link check skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "link failed: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "smoke failed: {}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
