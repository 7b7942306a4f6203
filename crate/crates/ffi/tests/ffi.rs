use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use omt_milp_ffi::*;
use serde_json::Value;

fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

/// Takes ownership of a string returned by the library.
fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { omt_string_free(s) };
    text
}

fn last_code() -> Option<String> {
    let p = omt_last_error_code();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string())
}

fn load(path: &PathBuf) -> *mut OmtModel {
    let doc = CString::new(std::fs::read_to_string(path).unwrap()).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { omt_model_from_json(doc.as_ptr(), &mut model) }, OmtStatus::Ok);
    model
}

#[test]
fn knapsack_through_the_c_interface() {
    let model = load(&core_fixture("knapsack.json"));
    let mut out = ptr::null_mut();

    assert_eq!(unsafe { omt_model_compile(model, OmtFormat::Lp, OmtIfThen::Strong, &mut out) }, OmtStatus::Ok);
    assert_eq!(take(out), std::fs::read_to_string(core_fixture("knapsack.lp")).unwrap());
    assert_eq!(unsafe { omt_model_compile(model, OmtFormat::Mps, OmtIfThen::Weak, &mut out) }, OmtStatus::Ok);
    assert_eq!(take(out), std::fs::read_to_string(core_fixture("knapsack.mps")).unwrap());

    assert_eq!(unsafe { omt_model_solve(model, 1000, &mut out) }, OmtStatus::Ok);
    let report: Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(report["value"], serde_json::json!({"num": 4, "den": 1}));
    assert_eq!(last_code(), None);

    assert_eq!(unsafe { omt_model_check(model, 1_000_000, &mut out) }, OmtStatus::Ok);
    let check: Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(check["holds"], true);

    assert_eq!(unsafe { omt_model_validate(model, &mut out) }, OmtStatus::Ok);
    assert_eq!(take(out).trim(), "[]");

    assert_eq!(unsafe { omt_model_to_json(model, &mut out) }, OmtStatus::Ok);
    assert_eq!(take(out), std::fs::read_to_string(core_fixture("knapsack.json")).unwrap());
    unsafe { omt_model_free(model) };
}

#[test]
fn errors_set_status_and_code() {
    let model = load(&core_fixture("knapsack.json"));
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { omt_model_solve(model, 2, &mut out) }, OmtStatus::DomainError);
    assert_eq!(last_code().as_deref(), Some("TooLarge"));
    assert!(out.is_null());
    assert_eq!(unsafe { omt_model_check(model, 1, &mut out) }, OmtStatus::DomainError);
    assert_eq!(last_code().as_deref(), Some("BoxTooLarge"));
    assert_eq!(unsafe { omt_model_solve(model, 1000, ptr::null_mut()) }, OmtStatus::NullArgument);
    assert_eq!(unsafe { omt_model_solve(ptr::null(), 1000, &mut out) }, OmtStatus::NullArgument);
    unsafe { omt_model_free(model) };
    unsafe { omt_model_free(ptr::null_mut()) };
    unsafe { omt_string_free(ptr::null_mut()) };

    let mut handle = ptr::null_mut();
    let bad = CString::new(r#"{"schema_version": "2"}"#).unwrap();
    assert_eq!(unsafe { omt_model_from_json(bad.as_ptr(), &mut handle) }, OmtStatus::DomainError);
    assert_eq!(last_code().as_deref(), Some("SchemaMismatch"));
    assert!(handle.is_null());
    let invalid = [0xffu8, 0];
    assert_eq!(unsafe { omt_model_from_json(invalid.as_ptr().cast(), &mut handle) }, OmtStatus::InvalidUtf8);
    assert_eq!(unsafe { omt_model_from_json(ptr::null(), &mut handle) }, OmtStatus::NullArgument);
    assert!(!omt_last_error_message().is_null());
}

#[test]
fn tree_and_corpus() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { omt_tree_json(&mut out) }, OmtStatus::Ok);
    assert_eq!(take(out), omt_milp::omt::load_tree().to_json());

    let case = CString::new("course-timetabling").unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { omt_corpus_build(case.as_ptr(), &mut model) }, OmtStatus::Ok);
    assert_eq!(unsafe { omt_model_to_json(model, &mut out) }, OmtStatus::Ok);
    let expected = std::fs::read_to_string(core_fixture("corpus/course-timetabling.json")).unwrap();
    assert_eq!(take(out), expected);
    unsafe { omt_model_free(model) };

    let unknown = CString::new("nope").unwrap();
    assert_eq!(unsafe { omt_corpus_build(unknown.as_ptr(), &mut model) }, OmtStatus::DomainError);
    assert_eq!(last_code().as_deref(), Some("UnknownCase"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/omt_milp.h")).unwrap();
    for name in [
        "omt_model_from_json",
        "omt_model_free",
        "omt_model_to_json",
        "omt_model_compile",
        "omt_model_solve",
        "omt_model_check",
        "omt_model_validate",
        "omt_tree_json",
        "omt_corpus_build",
        "omt_string_free",
        "omt_last_error_code",
        "omt_last_error_message",
        "typedef struct OmtModel OmtModel",
        "OMT_STATUS_DOMAIN_ERROR = 3",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles `tests/c/smoke.c` against the header and the shared library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target_dir = manifest.join("../../target").join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let lib = target_dir.join("libomt_milp_ffi.so");
    if !cfg!(target_os = "linux") || which("cc").is_none() || !lib.exists() {
        eprintln!("skipping: needs Linux, cc and {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&target_dir)
        .arg("-lomt_milp_ffi")
        .arg(format!("-Wl,-rpath,{}", target_dir.display()))
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).arg(core_fixture("knapsack.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(&std::fs::read_to_string(core_fixture("knapsack.lp")).unwrap()));
    assert!(stdout.ends_with("error: MalformedDocument\n"), "{stdout}");
}

fn which(program: &str) -> Option<PathBuf> {
    std::env::var_os("PATH")
        .and_then(|paths| std::env::split_paths(&paths).map(|p| p.join(program)).find(|p| p.is_file()))
}
