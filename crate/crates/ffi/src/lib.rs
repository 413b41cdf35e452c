//! C ABI for `toral-rigidity`.
//!
//! Presentations live behind an opaque [`ToralPresentation`] handle. Every
//! entry point returns a [`ToralStatus`]; reports come back as JSON strings
//! owned by the library and released with [`toral_string_free`]. After a
//! failed call, [`toral_last_error`] describes what went wrong on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use toral_rigidity::dual_dynamics::ergodicity_check;
use toral_rigidity::group_model::{build_theorem1_family, GroupPresentation, PresentationDoc};
use toral_rigidity::relt_certificate::{build_certificate, check_certificate};
use toral_rigidity::replay::{parse_matrix, run_theorem1_replay, ReplayOptions};
use toral_rigidity::report::{emit_report, Format, Report};
use toral_rigidity::{Error, IntMatrix};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToralStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Precondition = 4,
    Domain = 5,
    Dimension = 6,
    Unsupported = 7,
    Internal = 8,
    Panic = 9,
}

impl From<&Error> for ToralStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) | Error::Json(_) => ToralStatus::Parse,
            Error::Precondition(_) | Error::NotPrimitive { .. } | Error::Hypothesis(_) | Error::Membership { .. } => {
                ToralStatus::Precondition
            }
            Error::Domain(_) => ToralStatus::Domain,
            Error::Dimension(_) => ToralStatus::Dimension,
            Error::OutOfScope(_) | Error::Unsupported(_) => ToralStatus::Unsupported,
            Error::Section { source, .. } => ToralStatus::from(source.as_ref()),
            Error::Inconsistent(_) | Error::Io(_) => ToralStatus::Internal,
        }
    }
}

/// Opaque handle to a block-family presentation.
pub struct ToralPresentation {
    inner: GroupPresentation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(ToralStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(ToralStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ToralStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ToralStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside toral-rigidity".into());
            ToralStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(ToralStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure(ToralStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn check_out<T>(out: *mut T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(ToralStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure(ToralStatus::Internal, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn presentation<'a>(p: *const ToralPresentation) -> Result<&'a GroupPresentation, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| Failure(ToralStatus::NullPointer, "presentation is null".into()))
}

fn single_section(name: &str, citation: &str, body: Result<serde_json::Value, serde_json::Error>) -> Result<String, Failure> {
    let mut r = Report::new();
    r.push(name, citation, &body.map_err(Error::from)?)?;
    Ok(emit_report(&r, Format::Json))
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn toral_status_name(status: ToralStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        ToralStatus::Ok => b"ok\0",
        ToralStatus::NullPointer => b"null_pointer\0",
        ToralStatus::InvalidUtf8 => b"invalid_utf8\0",
        ToralStatus::Parse => b"parse\0",
        ToralStatus::Precondition => b"precondition\0",
        ToralStatus::Domain => b"domain\0",
        ToralStatus::Dimension => b"dimension\0",
        ToralStatus::Unsupported => b"unsupported\0",
        ToralStatus::Internal => b"internal\0",
        ToralStatus::Panic => b"panic\0",
    };
    s.as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn toral_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn toral_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a presentation document `{"k", "n", "lambda", "family"}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn toral_presentation_from_json(
    json: *const c_char,
    out: *mut *mut ToralPresentation,
) -> ToralStatus {
    guard(|| {
        check_out(out, "out")?;
        let text = read_str(json, "json")?;
        let doc: PresentationDoc = serde_json::from_str(text).map_err(|e| Failure(ToralStatus::Parse, e.to_string()))?;
        let inner = doc.build_block()?;
        *out = Box::into_raw(Box::new(ToralPresentation { inner }));
        Ok(())
    })
}

/// Builds the block family from `k`, `n` and a JSON list of `Λ` generators.
///
/// # Safety
/// `lambda_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn toral_presentation_new(
    k: usize,
    n: usize,
    lambda_json: *const c_char,
    out: *mut *mut ToralPresentation,
) -> ToralStatus {
    guard(|| {
        check_out(out, "out")?;
        let text = read_str(lambda_json, "lambda_json")?;
        let gens: Vec<IntMatrix> =
            serde_json::from_str(text).map_err(|e| Failure(ToralStatus::Parse, e.to_string()))?;
        let inner = build_theorem1_family(k, n, &gens)?;
        *out = Box::into_raw(Box::new(ToralPresentation { inner }));
        Ok(())
    })
}

/// Releases a presentation handle. Null is ignored.
///
/// # Safety
/// `p` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn toral_presentation_free(p: *mut ToralPresentation) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Serializes the presentation document.
///
/// # Safety
/// `p` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn toral_presentation_to_json(
    p: *const ToralPresentation,
    out_json: *mut *mut c_char,
) -> ToralStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let doc = presentation(p)?.to_doc();
        let text = serde_json::to_string(&doc).map_err(|e| Failure(ToralStatus::Internal, e.to_string()))?;
        write_string(out_json, text)
    })
}

/// Ergodicity verdict as a JSON report.
///
/// # Safety
/// `p` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn toral_ergodicity(
    p: *const ToralPresentation,
    bound: usize,
    radius: u32,
    out_json: *mut *mut c_char,
) -> ToralStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let v = ergodicity_check(presentation(p)?, bound, radius)?;
        write_string(out_json, single_section("ergodicity", "orbit criterion on the dual lattice", serde_json::to_value(&v))?)
    })
}

/// Builds and checks the relative property (T) certificate. `passed` receives
/// 1 when every mechanical step passes and the conclusion is reached, else 0.
///
/// # Safety
/// `p` must be a live handle; `out_json` and `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn toral_certify(
    p: *const ToralPresentation,
    samples: usize,
    seed: u64,
    out_json: *mut *mut c_char,
    passed: *mut i32,
) -> ToralStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        check_out(passed, "passed")?;
        let p = presentation(p)?;
        let cert = build_certificate(p)?;
        let report = check_certificate(&cert, p, samples, seed)?;
        *passed = (report.all_passed && report.conclusion_reached) as i32;
        write_string(out_json, single_section("rigidity", "relative property (T) certificate", serde_json::to_value(&report))?)
    })
}

/// Full profile replay for `(k, n, A)` with default knobs and the given seed.
/// `exit_code` receives 0 (consistent), 2 (inconclusive) or 1 (contradiction).
///
/// # Safety
/// `a_json` must be a NUL-terminated matrix literal (`"[]"` when `k = 0`);
/// `out_json` and `exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn toral_replay(
    k: usize,
    n: usize,
    a_json: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
    exit_code: *mut i32,
) -> ToralStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        check_out(exit_code, "exit_code")?;
        let a = parse_matrix(read_str(a_json, "a_json")?)?;
        let opts = ReplayOptions { seed, ..Default::default() };
        let r = run_theorem1_replay(k, n, &a, &opts)?;
        *exit_code = r.exit_code();
        write_string(out_json, emit_report(&r.to_report()?, Format::Json))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn take(s: *mut c_char) -> String {
        let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
        unsafe { toral_string_free(s) };
        out
    }

    fn last_error() -> String {
        let p = toral_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn presentation_round_trip_and_ergodicity() {
        let json = CString::new(r#"{"k":2,"n":2,"lambda":[[[2,1],[1,1]]],"family":"theorem1"}"#).unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { toral_presentation_from_json(json.as_ptr(), &mut p) }, ToralStatus::Ok);
        assert!(toral_last_error().is_null());

        let mut s = ptr::null_mut();
        assert_eq!(unsafe { toral_presentation_to_json(p, &mut s) }, ToralStatus::Ok);
        let doc: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(doc["lambda"][0][0][0], "2");

        let mut s = ptr::null_mut();
        assert_eq!(unsafe { toral_ergodicity(p, 1000, 3, &mut s) }, ToralStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(v["ergodicity"]["body"]["outcome"], "ergodic");
        unsafe { toral_presentation_free(p) };
    }

    #[test]
    fn certify_reports_pass() {
        let lambda = CString::new("[[[1]]]").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { toral_presentation_new(1, 2, lambda.as_ptr(), &mut p) }, ToralStatus::Ok);
        let (mut s, mut passed) = (ptr::null_mut(), -1);
        assert_eq!(unsafe { toral_certify(p, 10, 0, &mut s, &mut passed) }, ToralStatus::Ok);
        assert_eq!(passed, 1);
        assert!(take(s).contains("\"all_passed\": true"));
        unsafe { toral_presentation_free(p) };
    }

    #[test]
    fn replay_exit_code() {
        let a = CString::new("[[1]]").unwrap();
        let (mut s, mut code) = (ptr::null_mut(), -1);
        assert_eq!(unsafe { toral_replay(1, 2, a.as_ptr(), 0, &mut s, &mut code) }, ToralStatus::Ok);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(v["ergodicity"]["body"]["outcome"], "not_ergodic");
    }

    #[test]
    fn errors_map_to_codes() {
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { toral_presentation_from_json(ptr::null(), &mut p) }, ToralStatus::NullPointer);
        assert!(last_error().contains("json"));

        let bad = CString::new("{not json").unwrap();
        assert_eq!(unsafe { toral_presentation_from_json(bad.as_ptr(), &mut p) }, ToralStatus::Parse);

        let det2 = CString::new("[[[2,0],[0,1]]]").unwrap();
        assert_eq!(unsafe { toral_presentation_new(2, 2, det2.as_ptr(), &mut p) }, ToralStatus::Precondition);
        assert!(last_error().contains("determinant"));

        let one_by_one = CString::new("[[[1]]]").unwrap();
        assert_eq!(unsafe { toral_presentation_new(2, 2, one_by_one.as_ptr(), &mut p) }, ToralStatus::Dimension);
        assert!(p.is_null());

        let mut s = ptr::null_mut();
        assert_eq!(unsafe { toral_ergodicity(ptr::null(), 10, 1, &mut s) }, ToralStatus::NullPointer);
        unsafe { toral_string_free(ptr::null_mut()) };
        unsafe { toral_presentation_free(ptr::null_mut()) };
    }

    #[test]
    fn status_names_are_static() {
        let name = unsafe { CStr::from_ptr(toral_status_name(ToralStatus::Precondition)) };
        assert_eq!(name.to_str().unwrap(), "precondition");
    }
}
