//! C ABI for mla-kit.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or by an
//! operation and released by the matching `*_free`. Every fallible call
//! returns an [`MlaStatus`]; on failure [`mla_last_error`] describes the
//! problem for the calling thread. Strings returned by the library must be
//! released with [`mla_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mla_kit::hmm::Hmm;
use mla_kit::kernel::{self, TreeKernelParams};
use mla_kit::mla::{self, IntervalRepresentation};
use mla_kit::signal::{self, CorrelationMethod, Signal};
use mla_kit::wilcoxon::{self, Alternative};
use mla_kit::Error;

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    Parse = 4,
    NotPsd = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlaCorrelation {
    Pearson = 0,
    Spearman = 1,
    Kendall = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlaAlternative {
    Greater = 0,
    Less = 1,
    TwoSided = 2,
}

/// Sampled signal.
pub struct MlaSignal(Signal);

/// Interval representation.
pub struct MlaRepresentation(IntervalRepresentation);

/// Hidden Markov model with Gaussian emissions.
pub struct MlaHmm(Hmm);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MlaStatus {
    match e {
        Error::LengthMismatch { .. } => MlaStatus::LengthMismatch,
        Error::Parse { .. } | Error::Json(_) => MlaStatus::Parse,
        Error::NegativeRadicand { .. } => MlaStatus::NotPsd,
        Error::Io { .. } => MlaStatus::Internal,
        _ => MlaStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), MlaStatus>) -> MlaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlaStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            MlaStatus::Internal
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, MlaStatus>;
}

impl<T> OrStatus<T> for mla_kit::Result<T> {
    fn or_status(self) -> Result<T, MlaStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, MlaStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer argument");
        MlaStatus::NullPointer
    })
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], MlaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error("null pointer argument");
        return Err(MlaStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), MlaStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(MlaStatus::NullPointer);
    }
    out.write(v);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, v: T) -> Result<(), MlaStatus> {
    put(out, Box::into_raw(Box::new(v)))
}

unsafe fn cstr<'a>(s: *const c_char) -> Result<&'a str, MlaStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(MlaStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        MlaStatus::InvalidArgument
    })
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mla_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mla_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn mla_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Copy `len` samples into a new signal whose first sample sits at `start`.
#[no_mangle]
pub unsafe extern "C" fn mla_signal_new(
    samples: *const f64,
    len: usize,
    start: i64,
    out: *mut *mut MlaSignal,
) -> MlaStatus {
    guard(|| {
        let x = slice(samples, len)?;
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            set_error(format!("non-finite sample at index {i}"));
            return Err(MlaStatus::InvalidArgument);
        }
        put_box(out, MlaSignal(Signal::with_start(x.to_vec(), start)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn mla_signal_free(s: *mut MlaSignal) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of samples, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn mla_signal_len(s: *const MlaSignal) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Coordinate of the first sample, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn mla_signal_start(s: *const MlaSignal) -> i64 {
    s.as_ref().map_or(0, |s| s.0.start)
}

/// Copy the samples into `out`, which must hold `cap >= len` values.
#[no_mangle]
pub unsafe extern "C" fn mla_signal_samples(s: *const MlaSignal, out: *mut f64, cap: usize) -> MlaStatus {
    guard(|| {
        let s = get(s)?;
        if cap < s.0.len() {
            set_error(format!("buffer holds {cap} values, need {}", s.0.len()));
            return Err(MlaStatus::LengthMismatch);
        }
        if s.0.len() > 0 {
            if out.is_null() {
                set_error("null output pointer");
                return Err(MlaStatus::NullPointer);
            }
            ptr::copy_nonoverlapping(s.0.samples.as_ptr(), out, s.0.len());
        }
        Ok(())
    })
}

/// Normalize to `[0, 1]` and sample at `k` thresholds.
#[no_mangle]
pub unsafe extern "C" fn mla_transform(s: *const MlaSignal, k: usize, out: *mut *mut MlaRepresentation) -> MlaStatus {
    guard(|| put_box(out, MlaRepresentation(mla::transform(&get(s)?.0, k).or_status()?)))
}

/// Sample a signal already in `[0, 1]` at `k` thresholds.
#[no_mangle]
pub unsafe extern "C" fn mla_horizontal_sampling(
    s: *const MlaSignal,
    k: usize,
    out: *mut *mut MlaRepresentation,
) -> MlaStatus {
    guard(|| put_box(out, MlaRepresentation(mla::horizontal_sampling(&get(s)?.0, k).or_status()?)))
}

#[no_mangle]
pub unsafe extern "C" fn mla_reconstruct(rep: *const MlaRepresentation, out: *mut *mut MlaSignal) -> MlaStatus {
    guard(|| put_box(out, MlaSignal(mla::reconstruct(&get(rep)?.0).or_status()?)))
}

#[no_mangle]
pub unsafe extern "C" fn mla_representation_free(rep: *mut MlaRepresentation) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// Number of thresholds K, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn mla_representation_levels(rep: *const MlaRepresentation) -> usize {
    rep.as_ref().map_or(0, |r| r.0.levels.len())
}

/// Interval count at 1-based `level`.
#[no_mangle]
pub unsafe extern "C" fn mla_representation_level_len(
    rep: *const MlaRepresentation,
    level: usize,
    out: *mut usize,
) -> MlaStatus {
    guard(|| {
        let r = get(rep)?;
        match level.checked_sub(1).and_then(|l| r.0.levels.get(l)) {
            Some(l) => put(out, l.len()),
            None => {
                set_error(format!("level {level} out of range"));
                Err(MlaStatus::InvalidArgument)
            }
        }
    })
}

/// Threshold of 1-based `level`.
#[no_mangle]
pub unsafe extern "C" fn mla_representation_threshold(
    rep: *const MlaRepresentation,
    level: usize,
    out: *mut f64,
) -> MlaStatus {
    guard(|| {
        let r = get(rep)?;
        match level.checked_sub(1).and_then(|l| r.0.thresholds.get(l)) {
            Some(&t) => put(out, t),
            None => {
                set_error(format!("level {level} out of range"));
                Err(MlaStatus::InvalidArgument)
            }
        }
    })
}

/// Endpoints of interval `index` (0-based) at 1-based `level`.
#[no_mangle]
pub unsafe extern "C" fn mla_representation_interval(
    rep: *const MlaRepresentation,
    level: usize,
    index: usize,
    start: *mut f64,
    end: *mut f64,
) -> MlaStatus {
    guard(|| {
        let r = get(rep)?;
        match level.checked_sub(1).and_then(|l| r.0.levels.get(l)).and_then(|l| l.get(index)) {
            Some(iv) => {
                put(start, iv.start)?;
                put(end, iv.end)
            }
            None => {
                set_error(format!("no interval {index} at level {level}"));
                Err(MlaStatus::InvalidArgument)
            }
        }
    })
}

/// Serialize to JSON; release the result with `mla_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mla_representation_to_json(rep: *const MlaRepresentation, out: *mut *mut c_char) -> MlaStatus {
    guard(|| {
        let json = serde_json::to_string(&get(rep)?.0).map_err(|e| {
            set_error(e.to_string());
            MlaStatus::Internal
        })?;
        put(out, to_c_string(json))
    })
}

#[no_mangle]
pub unsafe extern "C" fn mla_representation_from_json(
    json: *const c_char,
    out: *mut *mut MlaRepresentation,
) -> MlaStatus {
    guard(|| {
        let rep: IntervalRepresentation = serde_json::from_str(cstr(json)?).map_err(|e| {
            set_error(e.to_string());
            MlaStatus::Parse
        })?;
        put_box(out, MlaRepresentation(rep))
    })
}

/// Tree kernel between the interval trees of two representations.
#[no_mangle]
pub unsafe extern "C" fn mla_tree_kernel(
    a: *const MlaRepresentation,
    b: *const MlaRepresentation,
    delta: f64,
    lambda: f64,
    normalize: bool,
    out: *mut f64,
) -> MlaStatus {
    guard(|| {
        let ta = kernel::signal_to_tree(&get(a)?.0).or_status()?;
        let tb = kernel::signal_to_tree(&get(b)?.0).or_status()?;
        let p = TreeKernelParams { delta, lambda, normalize };
        put(out, kernel::tree_kernel(&ta, &tb, &p).or_status()?)
    })
}

/// Convolution kernel between two equal-length signals.
#[no_mangle]
pub unsafe extern "C" fn mla_conv_kernel(
    x: *const MlaSignal,
    y: *const MlaSignal,
    k: usize,
    gamma: f64,
    out: *mut f64,
) -> MlaStatus {
    guard(|| put(out, kernel::conv_kernel(&get(x)?.0, &get(y)?.0, k, gamma).or_status()?))
}

#[no_mangle]
pub unsafe extern "C" fn mla_correlation(
    x: *const f64,
    y: *const f64,
    len: usize,
    method: MlaCorrelation,
    out: *mut f64,
) -> MlaStatus {
    guard(|| {
        let m = match method {
            MlaCorrelation::Pearson => CorrelationMethod::Pearson,
            MlaCorrelation::Spearman => CorrelationMethod::Spearman,
            MlaCorrelation::Kendall => CorrelationMethod::Kendall,
        };
        put(out, signal::correlation(slice(x, len)?, slice(y, len)?, m).or_status()?)
    })
}

/// Wilcoxon rank-sum test. `w` receives the rank sum of `y`; `Greater`
/// means `y` tends to exceed `x`.
#[no_mangle]
pub unsafe extern "C" fn mla_wilcoxon(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    alternative: MlaAlternative,
    w: *mut f64,
    p: *mut f64,
) -> MlaStatus {
    guard(|| {
        let alt = match alternative {
            MlaAlternative::Greater => Alternative::Greater,
            MlaAlternative::Less => Alternative::Less,
            MlaAlternative::TwoSided => Alternative::TwoSided,
        };
        let r = wilcoxon::rank_sum(slice(x, nx)?, slice(y, ny)?, alt).or_status()?;
        put(w, r.w)?;
        put(p, r.p)
    })
}

/// Parse a model from JSON (`labels`, `A`, `pi`, `emissions`).
#[no_mangle]
pub unsafe extern "C" fn mla_hmm_from_json(json: *const c_char, out: *mut *mut MlaHmm) -> MlaStatus {
    guard(|| {
        let h: Hmm = serde_json::from_str(cstr(json)?).map_err(|e| {
            set_error(e.to_string());
            MlaStatus::Parse
        })?;
        h.validate().or_status()?;
        put_box(out, MlaHmm(h))
    })
}

#[no_mangle]
pub unsafe extern "C" fn mla_hmm_to_json(h: *const MlaHmm, out: *mut *mut c_char) -> MlaStatus {
    guard(|| {
        let json = serde_json::to_string(&get(h)?.0).map_err(|e| {
            set_error(e.to_string());
            MlaStatus::Internal
        })?;
        put(out, to_c_string(json))
    })
}

#[no_mangle]
pub unsafe extern "C" fn mla_hmm_free(h: *mut MlaHmm) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of states, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn mla_hmm_states(h: *const MlaHmm) -> usize {
    h.as_ref().map_or(0, |h| h.0.n_states())
}

/// Forward log-likelihood of `len` observations.
#[no_mangle]
pub unsafe extern "C" fn mla_hmm_log_likelihood(h: *const MlaHmm, obs: *const f64, len: usize, out: *mut f64) -> MlaStatus {
    guard(|| put(out, get(h)?.0.log_likelihood(slice(obs, len)?).or_status()?))
}

/// Most likely state path, written to `path` (room for `len` entries),
/// and its joint log-probability.
#[no_mangle]
pub unsafe extern "C" fn mla_hmm_viterbi(
    h: *const MlaHmm,
    obs: *const f64,
    len: usize,
    path: *mut usize,
    log_prob: *mut f64,
) -> MlaStatus {
    guard(|| {
        let (states, lp) = get(h)?.0.viterbi(slice(obs, len)?).or_status()?;
        if !states.is_empty() {
            if path.is_null() {
                set_error("null output pointer");
                return Err(MlaStatus::NullPointer);
            }
            ptr::copy_nonoverlapping(states.as_ptr(), path, states.len());
        }
        put(log_prob, lp)
    })
}
