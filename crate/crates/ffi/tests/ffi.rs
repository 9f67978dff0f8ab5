// SPDX-License-Identifier: MIT
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use causal_spec_ffi::*;

const MOTOR: &str = include_str!("../../../fixtures/motor.cdag");

fn parse(text: &str) -> (CsStatus, *mut CsModel) {
    let c = CString::new(text).unwrap();
    let mut m = ptr::null_mut();
    let status = unsafe { cs_model_parse(c.as_ptr(), &mut m) };
    (status, m)
}

fn last_error() -> String {
    let p = cs_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn take(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { cs_string_free(p) };
    s
}

#[test]
fn parse_count_and_free() {
    let (status, m) = parse(MOTOR);
    assert_eq!(status, CsStatus::Ok);
    assert!(cs_last_error_message().is_null());
    unsafe {
        assert_eq!(cs_model_node_count(m), 16);
        assert_eq!(cs_model_edge_count(m), 19);
        cs_model_free(m);
        assert_eq!(cs_model_node_count(ptr::null()), 0);
        cs_model_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let (status, m) = parse("model \"m\" {\n  node A\n  node A\n}");
    assert_eq!(status, CsStatus::Parse);
    assert!(m.is_null());
    assert_eq!(last_error(), "3:8: duplicate node `A`");

    let (status, _) = parse(r#"model "c" { node A node B edge A -> B edge B -> A }"#);
    assert_eq!(status, CsStatus::Cycle);
    assert!(last_error().contains("A -> B -> A"));

    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { cs_model_parse(ptr::null(), &mut out) },
        CsStatus::NullArgument
    );
    let bad = [0xffu8, 0];
    assert_eq!(
        unsafe { cs_model_parse(bad.as_ptr().cast(), &mut out) },
        CsStatus::InvalidUtf8
    );
}

#[test]
fn dsep_queries() {
    let (_, m) = parse(MOTOR);
    let c = |s: &str| CString::new(s).unwrap();
    let (vs, te, hs, given) = (c("V_s"), c("T_E"), c("H_s"), c("CoolingFault"));
    let mut sep = false;
    unsafe {
        assert_eq!(
            cs_dsep(m, vs.as_ptr(), te.as_ptr(), ptr::null(), &mut sep),
            CsStatus::Ok
        );
        assert!(sep);
        assert_eq!(
            cs_dsep(m, hs.as_ptr(), te.as_ptr(), ptr::null(), &mut sep),
            CsStatus::Ok
        );
        assert!(!sep);
        assert_eq!(
            cs_dsep(m, hs.as_ptr(), te.as_ptr(), given.as_ptr(), &mut sep),
            CsStatus::Ok
        );
        assert!(sep);
        let nope = c("Nope");
        assert_eq!(
            cs_dsep(m, hs.as_ptr(), nope.as_ptr(), ptr::null(), &mut sep),
            CsStatus::UnknownNode
        );
        assert_eq!(
            cs_dsep(m, hs.as_ptr(), hs.as_ptr(), ptr::null(), &mut sep),
            CsStatus::InvalidQuery
        );
        cs_model_free(m);
    }
}

#[test]
fn json_outputs() {
    let (_, m) = parse(MOTOR);
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(
            cs_analyze_json(m, ptr::null(), ptr::null(), &mut out),
            CsStatus::Ok
        );
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["paths"]["causal"].as_array().unwrap().len(), 3);

        assert_eq!(
            cs_requirements_json(m, ptr::null(), ptr::null(), &mut out),
            CsStatus::Ok
        );
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["artifacts"][0]["id"], "RQ-D1");

        assert_eq!(cs_implications_json(m, 3, &mut out), CsStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["statements"].as_array().unwrap().len(), 6);

        assert_eq!(cs_export_dot(m, &mut out), CsStatus::Ok);
        assert!(take(out).starts_with("digraph"));

        assert_eq!(cs_model_to_dsl(m, &mut out), CsStatus::Ok);
        let (status, again) = parse(&take(out));
        assert_eq!(status, CsStatus::Ok);
        cs_model_free(again);

        assert_eq!(cs_model_to_json(m, &mut out), CsStatus::Ok);
        assert!(take(out).contains("\"motor-diagnostics\""));

        let bogus = CString::new("Nope").unwrap();
        assert_eq!(
            cs_analyze_json(m, bogus.as_ptr(), ptr::null(), &mut out),
            CsStatus::UnknownNode
        );
        cs_model_free(m);
    }
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(cs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/causal_spec.h"
    ))
    .unwrap();
    for name in [
        "typedef struct CsModel CsModel;",
        "CS_STATUS_CYCLE = 4",
        "cs_model_parse(",
        "cs_dsep(",
        "cs_string_free(",
        "cs_last_error_message(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/causal_spec.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ CsModel *m = 0; CsStatus s = cs_model_parse(\"\", &m); \
             bool sep; cs_dsep(m, \"a\", \"b\", 0, &sep); cs_model_free(m); return s == CS_STATUS_OK; }}\n"
        ),
    )
    .unwrap();
    match std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .output()
    {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(_) => eprintln!("no C compiler found; header syntax not checked"),
    }
}
