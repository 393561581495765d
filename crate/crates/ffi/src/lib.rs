//! C interface to the fuzzy rule engine: rule banks, intensity curves,
//! component de-fuzzification, class memberships and annotation.
//!
//! Objects are opaque handles created by `*_default` / `*_parse` and
//! released with the matching `*_free`. Every fallible call returns a
//! [`FzmStatus`]; on failure [`fzm_last_error`] copies a message for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use fuzzymeta::fuzzy::{
    annotate, default_attribute_specs, fcis_defuzzify, fkis_class_memberships, FuzzyConfig,
    IntensityCurves, RuleBank,
};
use fuzzymeta::labels::{EmotionClass, NUM_CLASSES};
use fuzzymeta::Error;

/// Number of (emotion, intensity) classes.
pub const FZM_NUM_CLASSES: usize = 18;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FzmStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// An argument was out of range or had the wrong length.
    InvalidArgument = 2,
    /// Rule or curve text did not parse.
    Parse = 3,
    /// Any other library error.
    Internal = 4,
    /// The library panicked; the call had no effect.
    Panic = 5,
}

/// A parsed rule bank.
pub struct FzmRuleBank {
    inner: RuleBank,
}

/// Intensity curves over eccentricity.
pub struct FzmCurves {
    inner: IntensityCurves,
}

/// Label assigned to one coding.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FzmAnnotation {
    /// Class index, `emotion * 3 + intensity`.
    pub class_index: u32,
    /// 0 Angry, 1 Happy, 2 Disgust, 3 Fear, 4 Sad, 5 Surprise.
    pub emotion: u32,
    /// 0 Low, 1 Medium, 2 High.
    pub intensity: u32,
    pub confidence: f64,
    pub eccentricity: f64,
    pub curve_degree: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FzmStatus {
    match e {
        Error::Param(_) | Error::Config(_) | Error::Shape { .. } | Error::Lookup(_) => {
            FzmStatus::InvalidArgument
        }
        Error::Parse { .. } => FzmStatus::Parse,
        _ => FzmStatus::Internal,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (FzmStatus, String)>) -> FzmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FzmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FzmStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (FzmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FzmStatus, String) {
    (FzmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FzmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FzmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(
    p: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (FzmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn fuzzy(lambda1: f64, lambda2: f64) -> Result<FuzzyConfig, (FzmStatus, String)> {
    FuzzyConfig::new(lambda1, lambda2).map_err(lib_err)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fzm_version() -> *const c_char {
    static V: OnceLock<CString> = OnceLock::new();
    V.get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).unwrap())
        .as_ptr()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `cap > 0`). Returns the full message length
/// without the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fzm_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && cap > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// `"Emotion-Intensity"` name of a class index, or null when out of range.
#[no_mangle]
pub extern "C" fn fzm_class_name(class_index: u32) -> *const c_char {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    let names = NAMES.get_or_init(|| {
        EmotionClass::all()
            .map(|c| CString::new(c.to_string()).unwrap())
            .collect()
    });
    names
        .get(class_index as usize)
        .map_or(std::ptr::null(), |c| c.as_ptr())
}

/// The shipped 18-rule bank.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fzm_rule_bank_default(out: *mut *mut FzmRuleBank) -> FzmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(FzmRuleBank {
            inner: RuleBank::default_bank(),
        }));
        Ok(())
    })
}

/// Parses a rule bank with 12 components: one rule per line,
/// `<Emotion> <Intensity> v1 .. v12 [w=<weight>]`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` as for
/// [`fzm_rule_bank_default`].
#[no_mangle]
pub unsafe extern "C" fn fzm_rule_bank_parse(
    text: *const c_char,
    out: *mut *mut FzmRuleBank,
) -> FzmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bank = RuleBank::parse(self::text(text, "text")?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FzmRuleBank { inner: bank }));
        Ok(())
    })
}

/// Number of rules, or 0 for a null handle.
///
/// # Safety
/// `bank` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fzm_rule_bank_len(bank: *const FzmRuleBank) -> usize {
    bank.as_ref().map_or(0, |b| b.inner.len())
}

/// Components per rule, or 0 for a null handle.
///
/// # Safety
/// `bank` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fzm_rule_bank_components(bank: *const FzmRuleBank) -> usize {
    bank.as_ref().map_or(0, |b| b.inner.n_components())
}

/// Releases a bank; null is ignored.
///
/// # Safety
/// `bank` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fzm_rule_bank_free(bank: *mut FzmRuleBank) {
    if !bank.is_null() {
        drop(Box::from_raw(bank));
    }
}

/// The shipped intensity curves.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fzm_curves_default(out: *mut *mut FzmCurves) -> FzmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(FzmCurves {
            inner: IntensityCurves::default_curves(),
        }));
        Ok(())
    })
}

/// Parses curves: `<Emotion> <Intensity> <center> <half_width>` per line.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` as for
/// [`fzm_curves_default`].
#[no_mangle]
pub unsafe extern "C" fn fzm_curves_parse(
    text: *const c_char,
    out: *mut *mut FzmCurves,
) -> FzmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let curves = IntensityCurves::parse(self::text(text, "text")?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FzmCurves { inner: curves }));
        Ok(())
    })
}

/// Releases curves; null is ignored.
///
/// # Safety
/// `curves` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fzm_curves_free(curves: *mut FzmCurves) {
    if !curves.is_null() {
        drop(Box::from_raw(curves));
    }
}

/// Degree of the class's intensity curve at eccentricity `e` in [0, 1].
///
/// # Safety
/// `curves` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fzm_curves_eval(
    curves: *const FzmCurves,
    class_index: u32,
    e: f64,
    out: *mut f64,
) -> FzmStatus {
    guard(|| {
        let curves = curves.as_ref().ok_or_else(|| null("curves"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let class = EmotionClass::from_index(class_index as usize).ok_or_else(|| {
            (
                FzmStatus::InvalidArgument,
                format!("class index {class_index} out of range"),
            )
        })?;
        *out = curves.inner.eval(class, e).map_err(lib_err)?;
        Ok(())
    })
}

/// De-fuzzifies 12 raw component scores into a soft coding written to
/// `out` (12 values).
///
/// # Safety
/// `scores` must point to `len` readable values and `out` to `len`
/// writable values.
#[no_mangle]
pub unsafe extern "C" fn fzm_fcis_defuzzify(
    scores: *const f64,
    len: usize,
    lambda1: f64,
    lambda2: f64,
    out: *mut f64,
) -> FzmStatus {
    guard(|| {
        let u = slice(scores, len, "scores")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let coding = fcis_defuzzify(u, &default_attribute_specs(), &fuzzy(lambda1, lambda2)?)
            .map_err(lib_err)?;
        std::ptr::copy_nonoverlapping(coding.values.as_ptr(), out, coding.values.len());
        Ok(())
    })
}

/// Class memberships of a coding, written to `out` (18 values, class
/// index order). `fallback`, when non-null, receives 1 if no rule fired
/// and the uniform vector was returned.
///
/// # Safety
/// `bank` must be a live handle, `coding` must point to `len` values and
/// `out` to 18 writable values.
#[no_mangle]
pub unsafe extern "C" fn fzm_class_memberships(
    bank: *const FzmRuleBank,
    coding: *const f64,
    len: usize,
    lambda1: f64,
    lambda2: f64,
    out: *mut f64,
    fallback: *mut u8,
) -> FzmStatus {
    guard(|| {
        let bank = bank.as_ref().ok_or_else(|| null("bank"))?;
        let o = slice(coding, len, "coding")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cm =
            fkis_class_memberships(o, &bank.inner, &fuzzy(lambda1, lambda2)?).map_err(lib_err)?;
        std::ptr::copy_nonoverlapping(cm.mu.as_ptr(), out, NUM_CLASSES);
        if !fallback.is_null() {
            *fallback = cm.fallback as u8;
        }
        Ok(())
    })
}

/// Labels a coding with its (emotion, intensity) class and confidence.
///
/// # Safety
/// `bank` and `curves` must be live handles, `coding` must point to `len`
/// values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzm_annotate(
    bank: *const FzmRuleBank,
    curves: *const FzmCurves,
    coding: *const f64,
    len: usize,
    lambda1: f64,
    lambda2: f64,
    out: *mut FzmAnnotation,
) -> FzmStatus {
    guard(|| {
        let bank = bank.as_ref().ok_or_else(|| null("bank"))?;
        let curves = curves.as_ref().ok_or_else(|| null("curves"))?;
        let o = slice(coding, len, "coding")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let a =
            annotate(o, &bank.inner, &curves.inner, &fuzzy(lambda1, lambda2)?).map_err(lib_err)?;
        *out = FzmAnnotation {
            class_index: a.class.index() as u32,
            emotion: a.class.emotion.index() as u32,
            intensity: a.class.intensity.index() as u32,
            confidence: a.confidence,
            eccentricity: a.eccentricity,
            curve_degree: a.curve_degree,
        };
        Ok(())
    })
}

const _: () = assert!(FZM_NUM_CLASSES == NUM_CLASSES);
