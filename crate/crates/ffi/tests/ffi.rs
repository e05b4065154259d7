use lrlab_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let mut buf = [0 as c_char; 512];
    let mut needed = 0usize;
    unsafe {
        assert_eq!(lrlab_last_error(buf.as_mut_ptr(), buf.len(), &mut needed), LrlabStatus::Ok);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn chain_handle_lifecycle() {
    unsafe {
        let mut chain = ptr::null_mut();
        assert_eq!(lrlab_chain_new(LrlabSpinModel::Tfim as u32, 6, 1.0, 1.0, &mut chain), LrlabStatus::Ok);
        assert!(!chain.is_null());
        let (mut e0, mut gap, mut c, mut b) = (0.0, 0.0, 0.0, 0.0);
        assert_eq!(lrlab_chain_ground_energy(chain, &mut e0), LrlabStatus::Ok);
        assert_eq!(lrlab_chain_gap(chain, &mut gap), LrlabStatus::Ok);
        assert!(e0 < 0.0 && gap > 0.0);
        for t in [0.0, 0.5, 1.0, 2.0] {
            assert_eq!(lrlab_chain_commutator_norm(chain, 0, 4, t, &mut c), LrlabStatus::Ok);
            assert_eq!(lrlab_chain_lr_bound(chain, 0, 4, t, &mut b), LrlabStatus::Ok);
            assert!(c <= b + 1e-8, "t = {t}");
        }
        assert_eq!(lrlab_chain_commutator_norm(chain, 2, 2, 1.0, &mut c), LrlabStatus::InvalidArgument);
        assert!(last_error().contains("distinct"));
        lrlab_chain_free(chain);
        lrlab_chain_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_are_reported() {
    unsafe {
        let mut chain = ptr::null_mut();
        assert_eq!(lrlab_chain_new(7, 4, 1.0, 0.0, &mut chain), LrlabStatus::InvalidArgument);
        assert!(chain.is_null());
        assert_eq!(lrlab_chain_new(0, 40, 1.0, 0.0, &mut chain), LrlabStatus::InvalidArgument);
        assert_eq!(lrlab_chain_new(0, 4, f64::NAN, 0.0, &mut chain), LrlabStatus::InvalidArgument);
        assert_eq!(lrlab_chain_new(0, 4, 1.0, 0.0, ptr::null_mut()), LrlabStatus::NullPointer);
        let mut x = 0.0;
        assert_eq!(lrlab_chain_gap(ptr::null(), &mut x), LrlabStatus::NullPointer);
        assert_eq!(lrlab_aklt_correlation(3, 3, 0, &mut x), LrlabStatus::InvalidArgument);
        assert_eq!(lrlab_harmonic_commutator(0, 1.0, 1.0, 0, 1, 1.0, &mut x), LrlabStatus::InvalidArgument);
    }
}

#[test]
fn physics_values_round_trip() {
    unsafe {
        let mut x = 0.0;
        assert_eq!(lrlab_aklt_correlation(3, 3, 1, &mut x), LrlabStatus::Ok);
        assert!((x + 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(lrlab_aklt_entropy(12, &mut x), LrlabStatus::Ok);
        assert!((x - 4f64.ln()).abs() < 1e-4);
        let mut near = 0.0;
        assert_eq!(lrlab_harmonic_commutator(16, 1.0, 1.0, 0, 1, 0.5, &mut near), LrlabStatus::Ok);
        assert_eq!(lrlab_harmonic_commutator(16, 1.0, 1.0, 0, 8, 0.5, &mut x), LrlabStatus::Ok);
        assert!(near > x && x >= 0.0);
        assert_eq!(CStr::from_ptr(lrlab_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn config_and_outcome_handles() {
    unsafe {
        let text = CString::new("seed = 3\n[[scenario]]\nkind = \"dyson\"\n").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(lrlab_config_parse(text.as_ptr(), &mut cfg), LrlabStatus::Ok);
        let mut count = 0;
        assert_eq!(lrlab_config_scenario_count(cfg, &mut count), LrlabStatus::Ok);
        assert_eq!(count, 1);
        let mut hash = [0 as c_char; 65];
        assert_eq!(lrlab_config_hash(cfg, hash.as_mut_ptr(), 65, ptr::null_mut()), LrlabStatus::Ok);
        assert_eq!(CStr::from_ptr(hash.as_ptr()).to_bytes().len(), 64);
        let mut out = ptr::null_mut();
        assert_eq!(lrlab_run_scenario(cfg, 1, &mut out), LrlabStatus::InvalidArgument);
        assert_eq!(lrlab_run_scenario(cfg, 0, &mut out), LrlabStatus::Ok);
        let mut st = LrlabOutcomeStatus::Fail;
        assert_eq!(lrlab_outcome_status(out, &mut st), LrlabStatus::Ok);
        assert_eq!(st, LrlabOutcomeStatus::Pass);
        let mut needed = 0;
        assert_eq!(lrlab_outcome_summary(out, ptr::null_mut(), 0, &mut needed), LrlabStatus::BufferTooSmall);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(lrlab_outcome_summary(out, buf.as_mut_ptr(), needed, ptr::null_mut()), LrlabStatus::Ok);
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(buf.as_ptr()).to_str().unwrap()).unwrap();
        assert_eq!(json["scenario"], "dyson");
        assert_eq!(json["seed"], 3);
        lrlab_outcome_free(out);
        lrlab_config_free(cfg);

        let bad = CString::new("[[scenario]]\nkind = \"dyson\"\nnope = 1\n").unwrap();
        assert_eq!(lrlab_config_parse(bad.as_ptr(), &mut cfg), LrlabStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("nope"));
        assert_eq!(lrlab_config_parse(ptr::null(), &mut cfg), LrlabStatus::NullPointer);
    }
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/lrlab.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct LrlabChain LrlabChain;", "LRLAB_STATUS_BUFFER_TOO_SMALL", "LRLAB_SPIN_MODEL_TFIM"] {
        assert!(header.contains(ty), "{ty}");
    }
}

/// Compiles the C smoke program against the static library.
#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let test_exe = std::env::current_exe().unwrap();
    let profile_dir = test_exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("liblrlab_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
