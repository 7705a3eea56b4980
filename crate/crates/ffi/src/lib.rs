//! C ABI for the densops library.
//!
//! Operators are held behind opaque [`DensopsOperator`] handles created by
//! [`densops_operator_parse`] and released by [`densops_operator_free`].
//! Every function returns a [`DensopsStatus`]; on any status other than
//! `DENSOPS_STATUS_OK` the thread-local message from
//! [`densops_last_error_message`] describes what went wrong. Strings returned
//! by value (operator printing) are owned by the caller and must be released
//! with [`densops_string_free`].
//!
//! All entry points catch panics at the boundary; a panic is reported as
//! `DENSOPS_STATUS_INTERNAL` rather than unwinding into the caller.

use densops::dsl;
use densops::operators::{extract_symbol, DiffOperator};
use densops::pencils::{canonical_pencil, LambdaOperator};
use densops::{Chart, EqualityPolicy, Rational};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

/// Outcome of a C API call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DensopsStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The operator or scalar text did not parse.
    ParseError = 3,
    /// The inputs were well-formed but rejected (dimension mismatch,
    /// singular weight, operator outside the expected shape, …).
    InvalidArgument = 4,
    /// A panic was caught at the boundary; this is a bug in the library.
    Internal = 5,
}

/// An operator on densities over a fixed chart. Opaque.
pub struct DensopsOperator {
    op: DiffOperator,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).expect("NUL bytes were replaced");
    });
}

fn fail(status: DensopsStatus, message: impl std::fmt::Display) -> DensopsStatus {
    set_error(message);
    status
}

/// Runs `body` with panics converted to `Internal`.
fn guarded(body: impl FnOnce() -> DensopsStatus) -> DensopsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(DensopsStatus::Internal, "internal panic"),
    }
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, DensopsStatus> {
    if ptr.is_null() {
        return Err(fail(DensopsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        fail(
            DensopsStatus::InvalidUtf8,
            format!("{name} is not valid UTF-8"),
        )
    })
}

/// # Safety
/// `ptr` must be null or a live handle from this library.
unsafe fn operator_arg<'a>(
    ptr: *const DensopsOperator,
    name: &str,
) -> Result<&'a DiffOperator, DensopsStatus> {
    if ptr.is_null() {
        return Err(fail(DensopsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(&(*ptr).op)
}

/// # Safety
/// `out` must be null or valid for a single write.
unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> DensopsStatus {
    if out.is_null() {
        return fail(DensopsStatus::NullPointer, format!("{name} is null"));
    }
    out.write(value);
    DensopsStatus::Ok
}

fn boxed(op: DiffOperator) -> *mut DensopsOperator {
    Box::into_raw(Box::new(DensopsOperator { op }))
}

/// Message for the most recent failure on this thread.
///
/// The pointer is borrowed: it stays valid until the next failing call on
/// the same thread, and must not be freed.
#[no_mangle]
pub extern "C" fn densops_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses an operator written in the expression DSL over an `n`-dimensional
/// chart with coordinates `x1…xn` (for example `"sin(x1)*d1^2 + 2*w"`).
///
/// On success writes a new handle to `out`; release it with
/// [`densops_operator_free`].
///
/// # Safety
/// `source` must be a valid NUL-terminated string and `out` valid for a
/// single write.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_parse(
    source: *const c_char,
    dim: usize,
    out: *mut *mut DensopsOperator,
) -> DensopsStatus {
    guarded(|| {
        let text = match utf8_arg(source, "source") {
            Ok(t) => t,
            Err(status) => return status,
        };
        if dim == 0 {
            return fail(
                DensopsStatus::InvalidArgument,
                "the chart dimension must be at least 1",
            );
        }
        match dsl::parse_operator(text, &Chart::new(dim)) {
            Ok(op) => write_out(out, boxed(op), "out"),
            Err(e) => fail(DensopsStatus::ParseError, e),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `op` must be null or a live handle from this library; the handle must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_free(op: *mut DensopsOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Prints an operator in the same grammar the parser accepts.
///
/// Returns an owned string (release with [`densops_string_free`]), or null
/// if `op` is null.
///
/// # Safety
/// `op` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_print(op: *const DensopsOperator) -> *mut c_char {
    let Ok(op) = operator_arg(op, "op") else {
        return std::ptr::null_mut();
    };
    let rendered = op.to_string().replace('\0', " ");
    match catch_unwind(|| CString::new(rendered).expect("NUL bytes were replaced")) {
        Ok(s) => s.into_raw(),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library, and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn densops_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Chart dimension of the operator.
///
/// # Safety
/// `op` must be a live handle and `out` valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_dim(
    op: *const DensopsOperator,
    out: *mut usize,
) -> DensopsStatus {
    guarded(|| match operator_arg(op, "op") {
        Ok(op) => write_out(out, op.dim(), "out"),
        Err(status) => status,
    })
}

/// Adjoint with respect to the canonical scalar product on densities.
///
/// # Safety
/// `op` must be a live handle and `out` valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_adjoint(
    op: *const DensopsOperator,
    out: *mut *mut DensopsOperator,
) -> DensopsStatus {
    guarded(|| match operator_arg(op, "op") {
        Ok(op) => write_out(out, boxed(op.adjoint()), "out"),
        Err(status) => status,
    })
}

/// Composition `a ∘ b`. The operands must share a chart dimension.
///
/// # Safety
/// `a` and `b` must be live handles and `out` valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_compose(
    a: *const DensopsOperator,
    b: *const DensopsOperator,
    out: *mut *mut DensopsOperator,
) -> DensopsStatus {
    guarded(|| {
        let a = match operator_arg(a, "a") {
            Ok(op) => op,
            Err(status) => return status,
        };
        let b = match operator_arg(b, "b") {
            Ok(op) => op,
            Err(status) => return status,
        };
        if a.dim() != b.dim() {
            return fail(
                DensopsStatus::InvalidArgument,
                format!(
                    "cannot compose operators over charts of dimension {} and {}",
                    a.dim(),
                    b.dim()
                ),
            );
        }
        write_out(out, boxed(a.compose(b)), "out")
    })
}

/// Restriction to densities of one weight: ŵ becomes the scalar `weight`,
/// written as a rational like `"3/2"` or `"-1"`.
///
/// # Safety
/// `op` must be a live handle, `weight` a valid NUL-terminated string, and
/// `out` valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_restrict(
    op: *const DensopsOperator,
    weight: *const c_char,
    out: *mut *mut DensopsOperator,
) -> DensopsStatus {
    guarded(|| {
        let op = match operator_arg(op, "op") {
            Ok(op) => op,
            Err(status) => return status,
        };
        let text = match utf8_arg(weight, "weight") {
            Ok(t) => t,
            Err(status) => return status,
        };
        match Rational::from_str(text) {
            Ok(w) => write_out(out, boxed(op.restrict(&w)), "out"),
            Err(_) => fail(
                DensopsStatus::ParseError,
                format!("invalid rational weight {text:?}"),
            ),
        }
    })
}

/// Whether the operator equals its own adjoint.
///
/// # Safety
/// `op` must be a live handle and `out` valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_is_self_adjoint(
    op: *const DensopsOperator,
    out: *mut bool,
) -> DensopsStatus {
    guarded(|| {
        let op = match operator_arg(op, "op") {
            Ok(op) => op,
            Err(status) => return status,
        };
        match op.is_self_adjoint(EqualityPolicy::Symbolic) {
            Ok(answer) => write_out(out, answer, "out"),
            Err(e) => fail(DensopsStatus::InvalidArgument, e),
        }
    })
}

/// Whether two operators are equal as operators on the density algebra.
///
/// # Safety
/// `a` and `b` must be live handles and `out` valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_equal(
    a: *const DensopsOperator,
    b: *const DensopsOperator,
    out: *mut bool,
) -> DensopsStatus {
    guarded(|| {
        let a = match operator_arg(a, "a") {
            Ok(op) => op,
            Err(status) => return status,
        };
        let b = match operator_arg(b, "b") {
            Ok(op) => op,
            Err(status) => return status,
        };
        if a.dim() != b.dim() {
            return write_out(out, false, "out");
        }
        match a.equal(b, EqualityPolicy::Symbolic) {
            Ok(answer) => write_out(out, answer, "out"),
            Err(e) => fail(DensopsStatus::InvalidArgument, e),
        }
    })
}

/// The unique self-adjoint operator pencil passing through `op` at weight
/// `lambda0` (a rational outside `{0, 1/2, 1}`, written like `"2"` or
/// `"-1/3"`). The handle must hold a weight-restricted operator: order at
/// most two, no ŵ.
///
/// # Safety
/// `op` must be a live handle, `lambda0` a valid NUL-terminated string, and
/// `out` valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn densops_pencil(
    op: *const DensopsOperator,
    lambda0: *const c_char,
    out: *mut *mut DensopsOperator,
) -> DensopsStatus {
    guarded(|| {
        let op = match operator_arg(op, "op") {
            Ok(op) => op,
            Err(status) => return status,
        };
        let text = match utf8_arg(lambda0, "lambda0") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let weight = match Rational::from_str(text) {
            Ok(w) => w,
            Err(_) => {
                return fail(
                    DensopsStatus::ParseError,
                    format!("invalid rational weight {text:?}"),
                )
            }
        };
        match LambdaOperator::new(op.clone(), weight) {
            Ok(l) => write_out(out, boxed(canonical_pencil(&l)), "out"),
            Err(e) => fail(DensopsStatus::InvalidArgument, e),
        }
    })
}

/// Sanity check that the operator is canonically self-adjoint: extracts the
/// symbol triple `(S, B, C)` and reports whether extraction succeeded.
///
/// # Safety
/// `op` must be a live handle and `out` valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn densops_operator_is_canonical(
    op: *const DensopsOperator,
    out: *mut bool,
) -> DensopsStatus {
    guarded(|| match operator_arg(op, "op") {
        Ok(op) => write_out(out, extract_symbol(op).is_ok(), "out"),
        Err(status) => status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    unsafe fn parse(src: &str, dim: usize) -> *mut DensopsOperator {
        let c = CString::new(src).unwrap();
        let mut handle = ptr::null_mut();
        let status = densops_operator_parse(c.as_ptr(), dim, &mut handle);
        assert_eq!(status, DensopsStatus::Ok, "parse {src:?}");
        handle
    }

    unsafe fn render(op: *const DensopsOperator) -> String {
        let s = densops_operator_print(op);
        assert!(!s.is_null());
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        densops_string_free(s);
        text
    }

    unsafe fn last_error() -> String {
        CStr::from_ptr(densops_last_error_message())
            .to_str()
            .unwrap()
            .to_owned()
    }

    #[test]
    fn parse_print_adjoint_round_trip() {
        unsafe {
            let op = parse("w", 1);
            let mut adj = ptr::null_mut();
            assert_eq!(densops_operator_adjoint(op, &mut adj), DensopsStatus::Ok);
            assert_eq!(render(adj), "1 - w");
            densops_operator_free(op);
            densops_operator_free(adj);
        }
    }

    #[test]
    fn double_adjoint_is_identity() {
        unsafe {
            let op = parse("sin(x1)*d1^2 + x2*d2*w + 3*w^2", 2);
            let mut once = ptr::null_mut();
            let mut twice = ptr::null_mut();
            densops_operator_adjoint(op, &mut once);
            densops_operator_adjoint(once, &mut twice);
            let mut same = false;
            assert_eq!(
                densops_operator_equal(op, twice, &mut same),
                DensopsStatus::Ok
            );
            assert!(same);
            densops_operator_free(op);
            densops_operator_free(once);
            densops_operator_free(twice);
        }
    }

    #[test]
    fn pencil_through_first_order_operator() {
        unsafe {
            let op = parse("sin(x1)*d1", 1);
            let lambda = CString::new("2").unwrap();
            let mut pencil = ptr::null_mut();
            assert_eq!(
                densops_pencil(op, lambda.as_ptr(), &mut pencil),
                DensopsStatus::Ok
            );
            let mut self_adjoint = false;
            densops_operator_is_self_adjoint(pencil, &mut self_adjoint);
            assert!(self_adjoint);
            let mut canonical = false;
            densops_operator_is_canonical(pencil, &mut canonical);
            assert!(canonical);
            densops_operator_free(op);
            densops_operator_free(pencil);
        }
    }

    #[test]
    fn singular_weight_is_rejected_with_message() {
        unsafe {
            let op = parse("d1", 1);
            let lambda = CString::new("1/2").unwrap();
            let mut pencil = ptr::null_mut();
            assert_eq!(
                densops_pencil(op, lambda.as_ptr(), &mut pencil),
                DensopsStatus::InvalidArgument
            );
            assert!(last_error().contains("singular"), "{}", last_error());
            densops_operator_free(op);
        }
    }

    #[test]
    fn null_and_bad_inputs_do_not_crash() {
        unsafe {
            let mut handle = ptr::null_mut();
            assert_eq!(
                densops_operator_parse(ptr::null(), 1, &mut handle),
                DensopsStatus::NullPointer
            );
            let bad = CString::new("d7").unwrap();
            assert_eq!(
                densops_operator_parse(bad.as_ptr(), 1, &mut handle),
                DensopsStatus::ParseError
            );
            assert!(last_error().contains("d7"), "{}", last_error());
            let zero_dim = CString::new("w").unwrap();
            assert_eq!(
                densops_operator_parse(zero_dim.as_ptr(), 0, &mut handle),
                DensopsStatus::InvalidArgument
            );
            assert!(densops_operator_print(ptr::null()).is_null());
            densops_operator_free(ptr::null_mut());
            densops_string_free(ptr::null_mut());
        }
    }

    #[test]
    fn compose_checks_dimensions() {
        unsafe {
            let a = parse("d1", 1);
            let b = parse("d2", 2);
            let mut c = ptr::null_mut();
            assert_eq!(
                densops_operator_compose(a, b, &mut c),
                DensopsStatus::InvalidArgument
            );
            let mut equal = true;
            assert_eq!(densops_operator_equal(a, b, &mut equal), DensopsStatus::Ok);
            assert!(!equal);
            densops_operator_free(a);
            densops_operator_free(b);
        }
    }

    #[test]
    fn restrict_substitutes_the_weight() {
        unsafe {
            let op = parse("d1*w + w^2", 1);
            let half = CString::new("3/2").unwrap();
            let mut restricted = ptr::null_mut();
            assert_eq!(
                densops_operator_restrict(op, half.as_ptr(), &mut restricted),
                DensopsStatus::Ok
            );
            assert_eq!(render(restricted), "9/4 + 3/2*d1");
            densops_operator_free(op);
            densops_operator_free(restricted);
        }
    }
}
