// SPDX-License-Identifier: MIT
//! C ABI over the causal-spec toolkit.
//!
//! Models are opaque `CsModel` handles created by [`cs_model_parse`] and
//! released with [`cs_model_free`]. Every fallible call returns a
//! [`CsStatus`]; on failure [`cs_last_error_message`] describes the error for
//! the calling thread. Strings returned through `out` parameters are owned by
//! the caller and must be released with [`cs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use causal_spec::api::{self, to_json};
use causal_spec::graph::{to_dot, GraphError};
use causal_spec::{serialize, CausalDag, Error, Format, ModelDocument};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The model text did not parse or failed document validation.
    Parse = 3,
    /// The model's graph has a directed cycle.
    Cycle = 4,
    /// A node name does not exist in the model.
    UnknownNode = 5,
    /// The query was malformed or could not be answered.
    InvalidQuery = 6,
    /// A panic was caught at the boundary.
    Internal = 99,
}

/// A parsed, acyclic model.
pub struct CsModel {
    doc: ModelDocument,
    dag: CausalDag,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn graph_status(e: &GraphError) -> CsStatus {
    match e {
        GraphError::Cycle { .. } => CsStatus::Cycle,
        GraphError::UnknownNode(_) => CsStatus::UnknownNode,
        _ => CsStatus::Parse,
    }
}

fn status_of(e: &Error) -> CsStatus {
    match (e, e.graph()) {
        (Error::Dsl(_), _) => CsStatus::Parse,
        (_, Some(g)) => graph_status(g),
        _ => CsStatus::InvalidQuery,
    }
}

/// Runs `f`, recording the error message and mapping panics to `Internal`.
fn guard(f: impl FnOnce() -> Result<(), (CsStatus, String)>) -> CsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal error".into());
            CsStatus::Internal
        }
    }
}

fn fail(e: Error) -> (CsStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CsStatus, String)> {
    if p.is_null() {
        return Err((CsStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(
    p: *const c_char,
    what: &str,
) -> Result<Option<&'a str>, (CsStatus, String)> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn model_arg<'a>(p: *const CsModel) -> Result<&'a CsModel, (CsStatus, String)> {
    p.as_ref()
        .ok_or_else(|| (CsStatus::NullArgument, "model is null".to_string()))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), (CsStatus, String)> {
    if out.is_null() {
        return Err((CsStatus::NullArgument, "out is null".into()));
    }
    let c = CString::new(s)
        .map_err(|_| (CsStatus::Internal, "output contains a nul byte".to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Parses DSL or JSON model text. On success `*out` receives a handle to free
/// with `cs_model_free`; on failure `*out` is set to null.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_model_parse(text: *const c_char, out: *mut *mut CsModel) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err((CsStatus::NullArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let doc = ModelDocument::parse_any(text).map_err(|e| fail(e.into()))?;
        let dag = CausalDag::build(&doc).map_err(|e| fail(e.into()))?;
        *out = Box::into_raw(Box::new(CsModel { doc, dag }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from `cs_model_parse` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_model_free(model: *mut CsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of nodes, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_model_node_count(model: *const CsModel) -> usize {
    model.as_ref().map_or(0, |m| m.dag.len())
}

/// Number of edges, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_model_edge_count(model: *const CsModel) -> usize {
    model.as_ref().map_or(0, |m| m.dag.edges().len())
}

/// Writes whether `x` and `y` are d-separated given the comma-separated
/// `given` list (null or empty for the empty set).
///
/// # Safety
/// String arguments must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_dsep(
    model: *const CsModel,
    x: *const c_char,
    y: *const c_char,
    given: *const c_char,
    out: *mut bool,
) -> CsStatus {
    guard(|| {
        let m = model_arg(model)?;
        let req = api::DsepRequest {
            x: str_arg(x, "x")?.to_string(),
            y: str_arg(y, "y")?.to_string(),
            given: causal_spec::NodeSet::parse_list(opt_str_arg(given, "given")?.unwrap_or(""))
                .to_vec(),
        };
        if out.is_null() {
            return Err((CsStatus::NullArgument, "out is null".into()));
        }
        *out = api::dsep(&m.dag, &req).map_err(fail)?.separated;
        Ok(())
    })
}

fn roles(exposure: Option<&str>, outcome: Option<&str>) -> api::RolesRequest {
    api::RolesRequest {
        exposure: exposure.map(str::to_string),
        outcome: outcome.map(str::to_string),
    }
}

/// Full analysis report as JSON. Null roles fall back to the model's
/// declared exposure and outcome.
///
/// # Safety
/// String arguments must be null or nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_analyze_json(
    model: *const CsModel,
    exposure: *const c_char,
    outcome: *const c_char,
    out: *mut *mut c_char,
) -> CsStatus {
    guard(|| {
        let m = model_arg(model)?;
        let req = roles(
            opt_str_arg(exposure, "exposure")?,
            opt_str_arg(outcome, "outcome")?,
        );
        put_string(out, to_json(&api::analyze(&m.dag, &req).map_err(fail)?))
    })
}

/// Derived requirements, test cases and monitors as JSON.
///
/// # Safety
/// As for `cs_analyze_json`.
#[no_mangle]
pub unsafe extern "C" fn cs_requirements_json(
    model: *const CsModel,
    exposure: *const c_char,
    outcome: *const c_char,
    out: *mut *mut c_char,
) -> CsStatus {
    guard(|| {
        let m = model_arg(model)?;
        let req = roles(
            opt_str_arg(exposure, "exposure")?,
            opt_str_arg(outcome, "outcome")?,
        );
        put_string(
            out,
            to_json(&api::requirements(&m.dag, &req).map_err(fail)?),
        )
    })
}

/// Implied independencies over the default scope as JSON.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_implications_json(
    model: *const CsModel,
    max_given: usize,
    out: *mut *mut c_char,
) -> CsStatus {
    guard(|| {
        let m = model_arg(model)?;
        let req = api::ImplicationsRequest {
            scope: None,
            max_given: Some(max_given),
        };
        put_string(
            out,
            to_json(&api::implications(&m.dag, &req).map_err(fail)?),
        )
    })
}

/// The model document in its JSON interchange form.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_model_to_json(
    model: *const CsModel,
    out: *mut *mut c_char,
) -> CsStatus {
    guard(|| put_string(out, serialize(&model_arg(model)?.doc, Format::Json)))
}

/// The model document as canonical DSL text.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_model_to_dsl(model: *const CsModel, out: *mut *mut c_char) -> CsStatus {
    guard(|| put_string(out, serialize(&model_arg(model)?.doc, Format::Dsl)))
}

/// Graphviz DOT rendering with latent nodes shaded.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_export_dot(model: *const CsModel, out: *mut *mut c_char) -> CsStatus {
    guard(|| put_string(out, to_dot(&model_arg(model)?.dag)))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
