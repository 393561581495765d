use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use fuzzymeta_ffi::*;

fn default_handles() -> (*mut FzmRuleBank, *mut FzmCurves) {
    let mut bank = ptr::null_mut();
    let mut curves = ptr::null_mut();
    unsafe {
        assert_eq!(fzm_rule_bank_default(&mut bank), FzmStatus::Ok);
        assert_eq!(fzm_curves_default(&mut curves), FzmStatus::Ok);
    }
    (bank, curves)
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { fzm_last_error(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_str()
        .unwrap()
        .to_string();
    assert_eq!(n, s.len());
    s
}

#[test]
fn annotate_through_the_abi() {
    let (bank, curves) = default_handles();
    unsafe {
        assert_eq!(fzm_rule_bank_len(bank), 18);
        assert_eq!(fzm_rule_bank_components(bank), 12);
        let disgust_medium = [1., 1., 0., 0., 0., 0., 0., 0., 0., -1., 0., 0.];
        let mut a = FzmAnnotation::default();
        let st = fzm_annotate(bank, curves, disgust_medium.as_ptr(), 12, 0.4, 0.4, &mut a);
        assert_eq!(st, FzmStatus::Ok);
        assert_eq!((a.emotion, a.intensity, a.confidence), (2, 1, 1.0));
        let name = CStr::from_ptr(fzm_class_name(a.class_index))
            .to_str()
            .unwrap();
        assert_eq!(name, "Disgust-Medium");
        fzm_curves_free(curves);
        fzm_rule_bank_free(bank);
    }
}

#[test]
fn memberships_and_curves() {
    let (bank, curves) = default_handles();
    unsafe {
        let mut mu = [0.0; FZM_NUM_CLASSES];
        let mut fallback = 9u8;
        let zero = [0.0; 12];
        let st = fzm_class_memberships(
            bank,
            zero.as_ptr(),
            12,
            0.4,
            0.4,
            mu.as_mut_ptr(),
            &mut fallback,
        );
        assert_eq!(st, FzmStatus::Ok);
        assert!(fallback <= 1);
        assert!(mu.iter().all(|m| (0.0..=1.0).contains(m)));

        // Angry-Medium at eccentricity 0.2
        let mut d = 0.0;
        assert_eq!(fzm_curves_eval(curves, 1, 0.2, &mut d), FzmStatus::Ok);
        assert!((d - 0.34).abs() <= 0.005, "{d}");
        assert_eq!(fzm_curves_eval(curves, 0, 0.2, &mut d), FzmStatus::Ok);
        assert_eq!(d, 0.0);
        assert_eq!(
            fzm_curves_eval(curves, 18, 0.2, &mut d),
            FzmStatus::InvalidArgument
        );

        let scores = [
            0.9, -0.2, 0.4, 0.0, 1.3, -1.0, 0.6, 0.1, -0.7, 0.2, 0.0, 0.5,
        ];
        let mut soft = [f64::NAN; 12];
        assert_eq!(
            fzm_fcis_defuzzify(scores.as_ptr(), 12, 0.4, 0.4, soft.as_mut_ptr()),
            FzmStatus::Ok
        );
        assert!(soft.iter().all(|v| (-1.0..=1.0).contains(v)));
        fzm_curves_free(curves);
        fzm_rule_bank_free(bank);
    }
}

#[test]
fn errors_are_reported() {
    let (bank, curves) = default_handles();
    unsafe {
        let mut a = FzmAnnotation::default();
        let o = [0.0; 12];
        assert_eq!(
            fzm_annotate(bank, curves, o.as_ptr(), 11, 0.4, 0.4, &mut a),
            FzmStatus::InvalidArgument
        );
        assert!(last_error().contains("12"), "{}", last_error());
        assert_eq!(
            fzm_annotate(bank, curves, o.as_ptr(), 12, 1.5, 0.4, &mut a),
            FzmStatus::InvalidArgument
        );
        assert_eq!(
            fzm_annotate(ptr::null(), curves, o.as_ptr(), 12, 0.4, 0.4, &mut a),
            FzmStatus::NullPointer
        );
        assert_eq!(last_error(), "bank is null");

        let text = CString::new("Angry High 1 1 1").unwrap();
        let mut parsed = ptr::null_mut();
        assert_eq!(
            fzm_rule_bank_parse(text.as_ptr(), &mut parsed),
            FzmStatus::Parse
        );
        assert!(parsed.is_null());

        let text = CString::new("Fear Low 0 0 0 0 0 0 0 0 0 0 0 1\n").unwrap();
        assert_eq!(
            fzm_rule_bank_parse(text.as_ptr(), &mut parsed),
            FzmStatus::Ok
        );
        assert_eq!(fzm_rule_bank_len(parsed), 1);
        fzm_rule_bank_free(parsed);

        fzm_rule_bank_free(ptr::null_mut());
        assert_eq!(fzm_rule_bank_len(ptr::null()), 0);
        assert!(fzm_class_name(99).is_null());
        fzm_curves_free(curves);
        fzm_rule_bank_free(bank);
    }
}

fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    [deps, deps.parent().unwrap()]
        .iter()
        .map(|d| d.join("libfuzzymeta_ffi.a"))
        .find(|p| p.is_file())
        .expect("static library next to the test binary")
}

#[test]
fn c_program_links_against_the_header() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(static_lib())
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
