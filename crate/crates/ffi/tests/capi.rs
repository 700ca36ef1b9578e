use std::ffi::{CStr, CString};
use std::ptr;

use modlift_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(modlift_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn cm_trace_and_errors() {
    let mut v = 0.0;
    assert_eq!(unsafe { modlift_trace_cm(-3, &mut v) }, ModliftStatus::Ok);
    assert!((v + 248.0).abs() < 1e-6);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { modlift_trace_cm(5, &mut v) }, ModliftStatus::InvalidInput);
    assert!(last_error().contains('5'));
    assert_eq!(unsafe { modlift_trace_cm(-3, ptr::null_mut()) }, ModliftStatus::NullPointer);
}

#[test]
fn table_round_trip() {
    let t = modlift_table_new();
    let mut v = 0.0;
    assert_eq!(unsafe { modlift_trace_cycle(t, 0, 5, &mut v) }, ModliftStatus::Ok);
    assert!((v - 0.860817881928008).abs() < 1e-10);
    assert_eq!(unsafe { modlift_trace_cycle(t, 1, 5, &mut v) }, ModliftStatus::Ok);
    assert!((v + 32.4314742090405).abs() < 1e-9);
    let mut n = 0;
    assert_eq!(unsafe { modlift_table_len(t, &mut n) }, ModliftStatus::Ok);
    assert_eq!(n, 2);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { modlift_table_save(t, path.as_ptr()) }, ModliftStatus::Ok);
    unsafe { modlift_table_free(t) };

    let mut u = ptr::null_mut();
    assert_eq!(unsafe { modlift_table_open(path.as_ptr(), &mut u) }, ModliftStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { modlift_table_len(u, &mut n) }, ModliftStatus::Ok);
    assert_eq!(n, 2);
    unsafe { modlift_table_free(u) };
    unsafe { modlift_table_free(ptr::null_mut()) };
}

#[test]
fn analytic_objects() {
    let t = modlift_table_new();
    let i = ModliftComplex { re: 0.0, im: 1.0 };
    let mut f = ModliftComplex::default();
    assert_eq!(unsafe { modlift_eval_f(t, 5, i, 64, 1e-10, &mut f) }, ModliftStatus::Ok);
    assert!((f.re - 4.0 / (5.0 * std::f64::consts::PI)).abs() < 1e-5 && f.im.abs() < 1e-12);

    let mut q = ModliftComplex::default();
    assert_eq!(unsafe { modlift_period_qs(5, i, &mut q) }, ModliftStatus::Ok);
    assert!((q.re + 0.8).abs() < 1e-15);
    assert_eq!(unsafe { modlift_cocycle_rs(5, i, &mut q) }, ModliftStatus::Ok);
    assert!(q.re.abs() + q.im.abs() < 1e-15);

    let mut l = ModliftLift::default();
    let z = ModliftComplex { re: 0.3, im: 0.9 };
    assert_eq!(unsafe { modlift_eval_phi(t, 5, z, 64, 1e-10, &mut l) }, ModliftStatus::Ok);
    assert_eq!(l.n_forms, 1);
    assert!((l.total.re - l.smooth_part.re - l.singular_part.re).abs() < 1e-12);
    assert_eq!(unsafe { modlift_eval_phi_prime(t, 5, z, 64, 1e-10, &mut l) }, ModliftStatus::Ok);

    let (mut lg, mut val) = (ModliftComplex::default(), ModliftComplex::default());
    let z = ModliftComplex { re: 0.0, im: 2.0 };
    assert_eq!(unsafe { modlift_eval_product(t, 5, z, 64, 1e-10, &mut lg, &mut val) }, ModliftStatus::Ok);
    assert!((val.re.hypot(val.im) - lg.re.exp()).abs() < 1e-12 * lg.re.exp());

    // too few terms for a point this low
    let low = ModliftComplex { re: 0.0, im: 0.2 };
    assert_eq!(unsafe { modlift_eval_f(t, 5, low, 4, 1e-10, &mut f) }, ModliftStatus::Truncation);
    assert!(last_error().contains("need at least"));
    assert_eq!(unsafe { modlift_eval_f(t, 6, i, 64, 1e-10, &mut f) }, ModliftStatus::InvalidInput);
    assert_eq!(unsafe { modlift_eval_f(ptr::null(), 5, i, 64, 1e-10, &mut f) }, ModliftStatus::NullPointer);
    unsafe { modlift_table_free(t) };
}

#[test]
fn verify_and_characters() {
    let t = modlift_table_new();
    let suite = CString::new("traceid").unwrap();
    let (mut n, mut bad) = (0, 0);
    assert_eq!(unsafe { modlift_verify(t, suite.as_ptr(), 0, &mut n, &mut bad) }, ModliftStatus::Ok);
    assert_eq!((n, bad), (3, 0));
    let nope = CString::new("nope").unwrap();
    assert_eq!(unsafe { modlift_verify(t, nope.as_ptr(), 0, &mut n, &mut bad) }, ModliftStatus::InvalidInput);
    let mut chi = 0;
    assert_eq!(unsafe { modlift_genus_character(-3, -1, 0, 3, &mut chi) }, ModliftStatus::Ok);
    assert_eq!(chi, -1);
    unsafe { modlift_table_free(t) };
}

#[test]
fn versions() {
    let v = unsafe { CStr::from_ptr(modlift_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    assert_eq!(modlift_cache_schema_version(), 1);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/modlift.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let mut n = 0;
    for line in src.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(header.contains(&format!("{name}(")), "{name} missing from header");
            n += 1;
        }
    }
    assert!(n >= 15);
    assert!(header.contains("MODLIFT_STATUS_TRUNCATION = 2"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/modlift.h");
    match std::process::Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).output() {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("no C compiler available, header not compiled: {e}"),
    }
}
