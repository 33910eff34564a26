//! C ABI over the chartloop table oracle, protocol parser and scoring.
//!
//! Every fallible call returns a `ChartloopStatus`; on failure the message
//! is available from `chartloop_last_error_message` on the same thread.
//! Strings handed out by this library must be released with
//! `chartloop_string_free`, tables with `chartloop_table_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use chartloop::controller::{EpisodeConfig, OracleReader};
use chartloop::eval::{majority_vote, normalize_answer, relaxed_match};
use chartloop::model::{ChartTable, TemplateType, Value};
use chartloop::oracle::{answer_query, TableOracle};
use chartloop::pipeline::{generate_questions, run_questions, score_records, synth_tables, SynthOptions};
use chartloop::protocol::{format_query, parse_step, StepKind};
use chartloop::symbolic::SymbolicReasoner;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartloopStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    NoAnswer = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartloopStepKind {
    Query = 0,
    Conclusion = 1,
    Other = 2,
}

/// Opaque chart table handle.
pub struct ChartloopTable {
    inner: ChartTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ChartloopStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> ChartloopStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ChartloopStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ChartloopStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ChartloopStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(ChartloopStatus::InvalidInput, msg.into())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(ChartloopStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

fn into_c(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("result contains a NUL byte"))
}

/// Parses one chart in the internal JSON schema into `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chartloop_table_from_json(json: *const c_char, out: *mut *mut ChartloopTable) -> ChartloopStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let json = read_str(json, "json")?;
        let inner: ChartTable = serde_json::from_str(json).map_err(|e| invalid(e.to_string()))?;
        *out = Box::into_raw(Box::new(ChartloopTable { inner }));
        Ok(())
    })
}

/// # Safety
/// `table` must come from `chartloop_table_from_json` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn chartloop_table_free(table: *mut ChartloopTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of cells (series × x-labels).
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chartloop_table_length(table: *const ChartloopTable, out: *mut usize) -> ChartloopStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        *out_ref(out, "out")? = t.inner.underlying_length();
        Ok(())
    })
}

/// Answers one protocol query line the way the table oracle reader does.
///
/// # Safety
/// `table` must be a live handle, `query` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chartloop_oracle_read(
    table: *const ChartloopTable,
    query: *const c_char,
    out: *mut *mut c_char,
) -> ChartloopStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let q = read_str(query, "query")?;
        *out = into_c(answer_query(&t.inner, q))?;
        Ok(())
    })
}

/// Classifies a reasoner line. `out_text` receives the canonical query
/// line, the conclusion's answer, or the line itself.
///
/// # Safety
/// `line` NUL-terminated; `out_kind` and `out_text` writable.
#[no_mangle]
pub unsafe extern "C" fn chartloop_parse_step(
    line: *const c_char,
    out_kind: *mut ChartloopStepKind,
    out_text: *mut *mut c_char,
) -> ChartloopStatus {
    guard(|| {
        let out_text = out_ref(out_text, "out_text")?;
        *out_text = ptr::null_mut();
        let out_kind = out_ref(out_kind, "out_kind")?;
        let line = read_str(line, "line")?;
        let (kind, text) = match parse_step(line) {
            StepKind::Query(q) => (ChartloopStepKind::Query, format_query(&q)),
            StepKind::Conclusion { answer, .. } => (ChartloopStepKind::Conclusion, answer.render()),
            StepKind::Other(t) => (ChartloopStepKind::Other, t),
        };
        *out_text = into_c(text)?;
        *out_kind = kind;
        Ok(())
    })
}

/// Canonical rendering of a raw answer string.
///
/// # Safety
/// `raw` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chartloop_normalize_answer(raw: *const c_char, out: *mut *mut c_char) -> ChartloopStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        *out = into_c(normalize_answer(read_str(raw, "raw")?).render())?;
        Ok(())
    })
}

/// Relaxed-accuracy verdict for two raw answers; `*out` is 1 or 0.
///
/// # Safety
/// Both strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chartloop_relaxed_match(
    prediction: *const c_char,
    gold: *const c_char,
    out: *mut i32,
) -> ChartloopStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let p = normalize_answer(read_str(prediction, "prediction")?);
        let g = normalize_answer(read_str(gold, "gold")?);
        *out = i32::from(relaxed_match(&p, &g));
        Ok(())
    })
}

/// Majority vote over `n` raw answers. Empty and "unknown" answers are
/// ignored; if nothing remains the status is `NoAnswer`.
///
/// # Safety
/// `answers` must point to `n` NUL-terminated strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chartloop_majority_vote(
    answers: *const *const c_char,
    n: usize,
    out: *mut *mut c_char,
) -> ChartloopStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if answers.is_null() && n > 0 {
            return Err(null("answers"));
        }
        let mut finals: Vec<Value> = Vec::with_capacity(n);
        for i in 0..n {
            let v = normalize_answer(read_str(*answers.add(i), "answer")?);
            if !chartloop::eval::is_no_answer(&v) {
                finals.push(v);
            }
        }
        let winner = majority_vote(&finals).map_err(|e| Failure(ChartloopStatus::NoAnswer, e.to_string()))?;
        *out = into_c(winner.render())?;
        Ok(())
    })
}

/// Generates `n_charts` random charts under `seed`, asks every template
/// question with the symbolic reasoner against the table oracle, and
/// reports how many were answered correctly.
///
/// # Safety
/// `out_correct` and `out_total` writable.
#[no_mangle]
pub unsafe extern "C" fn chartloop_run_closed_loop(
    n_charts: usize,
    seed: u64,
    no_describe: bool,
    out_correct: *mut usize,
    out_total: *mut usize,
) -> ChartloopStatus {
    guard(|| {
        let out_correct = out_ref(out_correct, "out_correct")?;
        let out_total = out_ref(out_total, "out_total")?;
        if n_charts == 0 {
            return Err(invalid("n_charts must be positive"));
        }
        let charts = synth_tables(n_charts, seed, &SynthOptions::default());
        let oracle = Arc::new(TableOracle::new(charts.clone()));
        let qa = generate_questions(&charts, &TemplateType::ALL, seed).qa;
        let config = EpisodeConfig {
            describe_first: !no_describe,
            seed: Some(seed),
            ..EpisodeConfig::default()
        };
        let records = run_questions(
            &qa,
            &SymbolicReasoner::new(!no_describe),
            &OracleReader::new(oracle.clone()),
            &config,
            None,
        )
        .map_err(|e| invalid(e.to_string()))?;
        let scored = score_records(&records, Some(&oracle));
        *out_total = scored.len();
        *out_correct = scored.iter().filter(|r| r.correct).count();
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn chartloop_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn chartloop_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
