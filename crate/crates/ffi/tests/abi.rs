use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use chartloop_ffi::*;

const CHART: &str = r#"{"id":"canada","series":[{"name":"Canada","color":"red"},{"name":"Chile"}],"x_labels":["1964","1965"],"cells":[[19.7,20.82],[5.3,5.61]]}"#;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { chartloop_string_free(s) };
    out
}

fn last_error() -> String {
    let p = chartloop_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn table() -> *mut ChartloopTable {
    let json = CString::new(CHART).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { chartloop_table_from_json(json.as_ptr(), &mut t) }, ChartloopStatus::Ok);
    t
}

#[test]
fn table_handle_and_oracle_read() {
    let t = table();
    let mut len = 0usize;
    assert_eq!(unsafe { chartloop_table_length(t, &mut len) }, ChartloopStatus::Ok);
    assert_eq!(len, 4);
    let q = CString::new("Let's extract the data of Canada BY 1965.").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { chartloop_oracle_read(t, q.as_ptr(), &mut out) }, ChartloopStatus::Ok);
    assert_eq!(take(out), "The data is 20.82.");
    let q = CString::new("Let's extract the data of Narnia BY 1965.").unwrap();
    assert_eq!(unsafe { chartloop_oracle_read(t, q.as_ptr(), &mut out) }, ChartloopStatus::Ok);
    assert_eq!(take(out), "The data is not available.");
    unsafe { chartloop_table_free(t) };
    unsafe { chartloop_table_free(ptr::null_mut()) };
}

#[test]
fn error_codes_and_messages() {
    let bad = CString::new("{\"id\":1}").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { chartloop_table_from_json(bad.as_ptr(), &mut t) }, ChartloopStatus::InvalidInput);
    assert!(t.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { chartloop_table_from_json(ptr::null(), &mut t) },
        ChartloopStatus::NullPointer
    );
    assert!(last_error().contains("json"));
    let invalid_utf8 = [0xffu8, 0xfe, 0];
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { chartloop_normalize_answer(invalid_utf8.as_ptr().cast(), &mut out) },
        ChartloopStatus::InvalidUtf8
    );
    let mut n = 0usize;
    assert_eq!(unsafe { chartloop_table_length(ptr::null(), &mut n) }, ChartloopStatus::NullPointer);
    let raw = CString::new("15.00").unwrap();
    assert_eq!(unsafe { chartloop_normalize_answer(raw.as_ptr(), &mut out) }, ChartloopStatus::Ok);
    assert_eq!(take(out), "15");
    assert!(chartloop_last_error_message().is_null());
}

#[test]
fn parse_step_kinds() {
    let cases = [
        ("Let's describe the figure.", ChartloopStepKind::Query, "Let's describe the figure."),
        ("So the answer is 558.", ChartloopStepKind::Conclusion, "558"),
        ("Hmm.", ChartloopStepKind::Other, "Hmm."),
    ];
    for (line, kind, text) in cases {
        let l = CString::new(line).unwrap();
        let mut k = ChartloopStepKind::Other;
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { chartloop_parse_step(l.as_ptr(), &mut k, &mut out) }, ChartloopStatus::Ok);
        assert_eq!(k, kind);
        assert_eq!(take(out), text);
    }
}

#[test]
fn scoring_calls() {
    let m = |p: &str, g: &str| {
        let (p, g) = (CString::new(p).unwrap(), CString::new(g).unwrap());
        let mut out = -1;
        assert_eq!(unsafe { chartloop_relaxed_match(p.as_ptr(), g.as_ptr(), &mut out) }, ChartloopStatus::Ok);
        out
    };
    assert_eq!(m("210", "210.69"), 1);
    assert_eq!(m("200", "210.69"), 0);
    assert_eq!(m("Independents", "independents"), 1);

    let vote = |xs: &[&str]| {
        let owned: Vec<CString> = xs.iter().map(|x| CString::new(*x).unwrap()).collect();
        let ptrs: Vec<*const c_char> = owned.iter().map(|c| c.as_ptr()).collect();
        let mut out = ptr::null_mut();
        let status = unsafe { chartloop_majority_vote(ptrs.as_ptr(), ptrs.len(), &mut out) };
        (status, (status == ChartloopStatus::Ok).then(|| take(out)))
    };
    assert_eq!(vote(&["15", "15.00", "14"]), (ChartloopStatus::Ok, Some("15".into())));
    assert_eq!(vote(&["yes", "no"]), (ChartloopStatus::Ok, Some("no".into())));
    assert_eq!(vote(&["unknown", ""]).0, ChartloopStatus::NoAnswer);
    assert_eq!(vote(&[]).0, ChartloopStatus::NoAnswer);
}

#[test]
fn closed_loop_through_the_abi() {
    let (mut correct, mut total) = (0usize, 0usize);
    assert_eq!(
        unsafe { chartloop_run_closed_loop(20, 4, false, &mut correct, &mut total) },
        ChartloopStatus::Ok
    );
    assert!(total > 0);
    assert_eq!(correct, total);
    assert_eq!(
        unsafe { chartloop_run_closed_loop(0, 4, false, &mut correct, &mut total) },
        ChartloopStatus::InvalidInput
    );
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/chartloop.h")).unwrap();
    for f in [
        "chartloop_table_from_json",
        "chartloop_table_free",
        "chartloop_table_length",
        "chartloop_oracle_read",
        "chartloop_parse_step",
        "chartloop_normalize_answer",
        "chartloop_relaxed_match",
        "chartloop_majority_vote",
        "chartloop_run_closed_loop",
        "chartloop_last_error_message",
        "chartloop_string_free",
        "typedef struct ChartloopTable ChartloopTable;",
        "CHARTLOOP_STATUS_OK = 0",
    ] {
        assert!(header.contains(f), "header lacks {f}");
    }
}

/// Compiles and runs a small C program against the static library.
#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| dir.join("../../target"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target.join(profile).join("libchartloop_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library at {} or no C compiler", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <string.h>
#include "chartloop.h"
int main(void) {
    ChartloopTable *t = NULL;
    const char *json = "{\"id\":\"c\",\"series\":[{\"name\":\"Canada\"},{\"name\":\"Chile\"}],\"x_labels\":[\"1965\"],\"cells\":[[20.82],[5.61]]}";
    if (chartloop_table_from_json(json, &t) != CHARTLOOP_STATUS_OK) return 1;
    char *out = NULL;
    if (chartloop_oracle_read(t, "Let's extract the data of Canada BY 1965.", &out) != CHARTLOOP_STATUS_OK) return 2;
    int ok = strcmp(out, "The data is 20.82.") == 0;
    chartloop_string_free(out);
    chartloop_table_free(t);
    if (chartloop_table_from_json("not json", &t) != CHARTLOOP_STATUS_INVALID_INPUT) return 3;
    if (chartloop_last_error_message() == NULL) return 4;
    return ok ? 0 : 5;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    assert!(Command::new(&exe).status().unwrap().success());
}
