//! C interface to `omt-milp`. Models live behind the opaque `OmtModel`
//! handle; results come back as NUL-terminated UTF-8 strings owned by the
//! caller and released with `omt_string_free`.
//!
//! Every fallible call returns an `OmtStatus`. On anything but `Ok`, the
//! thread's last error (`omt_last_error_code`, `omt_last_error_message`)
//! says what went wrong; the domain error codes match the CLI and service.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use omt_milp::api::{self, CheckSettings, Format};
use omt_milp::corpus::{self, CaseId};
use omt_milp::emit::write_model;
use omt_milp::lowering::{IfThenStrength, LowerOptions};
use omt_milp::model::Model;
use omt_milp::omt::load_tree;
use omt_milp::oracle::EnumerationLimits;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmtStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The library rejected the request; see `omt_last_error_code`.
    DomainError = 3,
    /// An internal panic was caught at the boundary.
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmtFormat {
    Lp = 0,
    Mps = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmtIfThen {
    Strong = 0,
    Weak = 1,
}

/// Opaque model handle.
pub struct OmtModel {
    model: Model,
}

struct LastError {
    code: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn c_string(s: &str) -> CString {
    CString::new(s.replace('\0', "\u{FFFD}")).expect("NUL bytes replaced")
}

fn set_error(code: &str, message: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { code: c_string(code), message: c_string(message) }));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(OmtStatus);

impl From<api::Error> for Failure {
    fn from(e: api::Error) -> Self {
        set_error(e.code(), &e.to_string());
        Failure(OmtStatus::DomainError)
    }
}

fn null_argument(name: &str) -> Failure {
    set_error("NullArgument", &format!("{name} is NULL"));
    Failure(OmtStatus::NullArgument)
}

/// Runs `f` with panics caught and the last error kept in step with the status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OmtStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OmtStatus::Ok,
        Ok(Err(Failure(status))) => status,
        Err(_) => {
            set_error("Panic", "internal error");
            OmtStatus::Panic
        }
    }
}

/// # Safety
/// `s` is NULL or points to a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null_argument(name));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("InvalidUtf8", &format!("{name} is not UTF-8"));
        Failure(OmtStatus::InvalidUtf8)
    })
}

/// # Safety
/// `model` is NULL or a live handle from this library.
unsafe fn read_model<'a>(model: *const OmtModel) -> Result<&'a Model, Failure> {
    model.as_ref().map(|m| &m.model).ok_or_else(|| null_argument("model"))
}

/// # Safety
/// `out` is NULL or valid for one pointer write.
unsafe fn write_string(out: *mut *mut c_char, text: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null_argument("out"));
    }
    *out = c_string(text).into_raw();
    Ok(())
}

/// # Safety
/// `out` is NULL or valid for one pointer write.
unsafe fn write_model_handle(out: *mut *mut OmtModel, model: Model) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null_argument("out"));
    }
    *out = Box::into_raw(Box::new(OmtModel { model }));
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON value") + "\n"
}

/// Parses a model document. On success `*out` holds a new handle to be
/// released with `omt_model_free`.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn omt_model_from_json(json: *const c_char, out: *mut *mut OmtModel) -> OmtStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        write_model_handle(out, api::parse_model(text)?)
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn omt_model_free(model: *mut OmtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the model as a model document.
///
/// # Safety
/// `model` is a live handle; `out` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn omt_model_to_json(model: *const OmtModel, out: *mut *mut c_char) -> OmtStatus {
    guard(|| write_string(out, &write_model(read_model(model)?)))
}

/// Lowers the model and writes it as LP or MPS text.
///
/// # Safety
/// `model` is a live handle; `out` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn omt_model_compile(
    model: *const OmtModel,
    format: OmtFormat,
    if_then: OmtIfThen,
    out: *mut *mut c_char,
) -> OmtStatus {
    guard(|| {
        let format = match format {
            OmtFormat::Lp => Format::Lp,
            OmtFormat::Mps => Format::Mps,
        };
        let strength = match if_then {
            OmtIfThen::Strong => IfThenStrength::Strong,
            OmtIfThen::Weak => IfThenStrength::Weak,
        };
        write_string(out, &api::compile(read_model(model)?, format, &LowerOptions::with_strength(strength))?)
    })
}

/// Solves by enumeration and writes the optimum report as JSON
/// (`status`, `value`, `witness`, `points_enumerated`).
///
/// # Safety
/// `model` is a live handle; `out` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn omt_model_solve(model: *const OmtModel, max_points: u64, out: *mut *mut c_char) -> OmtStatus {
    guard(|| {
        let report = api::solve(read_model(model)?, &EnumerationLimits { max_points: max_points.into() })?;
        write_string(out, &pretty(&report))
    })
}

/// Checks every lowered constraint against its meaning and writes the
/// report as JSON. A report with `"holds": false` is still `Ok`.
///
/// # Safety
/// `model` is a live handle; `out` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn omt_model_check(model: *const OmtModel, box_cap: u64, out: *mut *mut c_char) -> OmtStatus {
    guard(|| {
        let settings = CheckSettings { cap: box_cap.into(), ..CheckSettings::default() };
        write_string(out, &pretty(&api::check(read_model(model)?, &settings)?))
    })
}

/// Writes the validation diagnostics as a JSON array, empty when the model
/// is well formed.
///
/// # Safety
/// `model` is a live handle; `out` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn omt_model_validate(model: *const OmtModel, out: *mut *mut c_char) -> OmtStatus {
    guard(|| {
        let diagnostics = serde_json::to_value(read_model(model)?.validate()).expect("diagnostics");
        write_string(out, &pretty(&diagnostics))
    })
}

/// Writes the optimization modelling tree document.
///
/// # Safety
/// `out` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn omt_tree_json(out: *mut *mut c_char) -> OmtStatus {
    guard(|| write_string(out, &load_tree().to_json()))
}

/// Builds a case study at its default scale, e.g. `"chemical-scheduling"`.
///
/// # Safety
/// `case_id` is a NUL-terminated string; `out` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn omt_corpus_build(case_id: *const c_char, out: *mut *mut OmtModel) -> OmtStatus {
    guard(|| {
        let case: CaseId = read_str(case_id, "case_id")?.parse().map_err(api::Error::from)?;
        write_model_handle(out, corpus::build(case, &case.default_scale()).map_err(api::Error::from)?)
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` is NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn omt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn last_error_field(pick: fn(&LastError) -> *const c_char) -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), pick))
}

/// Error code of the last failed call on this thread, or NULL after a
/// success. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn omt_last_error_code() -> *const c_char {
    last_error_field(|e| e.code.as_ptr())
}

/// Message of the last failed call on this thread, or NULL after a success.
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn omt_last_error_message() -> *const c_char {
    last_error_field(|e| e.message.as_ptr())
}
