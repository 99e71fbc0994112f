//! C ABI over `slowmix`.
//!
//! Networks are opaque heap handles. Every fallible function returns a
//! [`SlowmixStatus`]; on failure `slowmix_last_error` gives a message for the
//! calling thread. Strings returned through `char **` belong to the caller and
//! are released with `slowmix_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_traits::ToPrimitive;
use slowmix::simulate::{mean_first_passage, FptQuery, SimConfig};
use slowmix::structure::{path_probability, recognize_cyclic, theta_bounds, TransitionSequence};
use slowmix::{parse_network, render_network, Error, ReactionNetwork, State};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlowmixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    Unsupported = 5,
    Infeasible = 6,
    Panic = 7,
}

/// Opaque network handle.
pub struct SlowmixNetwork {
    inner: ReactionNetwork,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SlowmixTheta {
    pub theta1: u64,
    pub theta2: u64,
    pub theta: u64,
    pub assumptions_ok: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SlowmixFpt {
    pub mean: f64,
    pub std_error: f64,
    pub reached: usize,
    pub capped: usize,
    pub absorbed: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SlowmixStatus {
    match e {
        Error::Syntax { .. }
        | Error::DuplicateSpecies { .. }
        | Error::NonPositiveRate { .. }
        | Error::ReactantEqualsProduct { .. }
        | Error::EmptyNetwork => SlowmixStatus::ParseError,
        Error::NotTwoSpecies(_)
        | Error::NotCyclic(_)
        | Error::DuplicatedComplex(_)
        | Error::AlphaNotIncreasing(_) => SlowmixStatus::Unsupported,
        Error::InfeasiblePath { .. } => SlowmixStatus::Infeasible,
        _ => SlowmixStatus::InvalidArgument,
    }
}

type FfiResult = Result<(), (SlowmixStatus, String)>;

fn fail(status: SlowmixStatus, msg: impl Into<String>) -> FfiResult {
    Err((status, msg.into()))
}

fn lib(e: Error) -> (SlowmixStatus, String) {
    (status_of(&e), e.to_string())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult) -> SlowmixStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SlowmixStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SlowmixStatus::Panic
        }
    }
}

unsafe fn network<'a>(net: *const SlowmixNetwork) -> Result<&'a ReactionNetwork, (SlowmixStatus, String)> {
    net.as_ref()
        .map(|n| &n.inner)
        .ok_or((SlowmixStatus::NullPointer, "null network handle".into()))
}

unsafe fn state(x: *const u64, len: usize) -> Result<State, (SlowmixStatus, String)> {
    if x.is_null() {
        return Err((SlowmixStatus::NullPointer, "null state pointer".into()));
    }
    Ok(State::new(std::slice::from_raw_parts(x, len).to_vec()))
}

fn into_c_string(s: String, out: *mut *mut c_char) -> FfiResult {
    let c = CString::new(s).map_err(|_| (SlowmixStatus::InvalidArgument, "interior NUL".to_string()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn slowmix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn slowmix_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses network text. On success `*out` holds a handle to release with
/// `slowmix_network_free`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slowmix_network_parse(text: *const c_char, out: *mut *mut SlowmixNetwork) -> SlowmixStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(SlowmixStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (SlowmixStatus::InvalidUtf8, "network text is not UTF-8".to_string()))?;
        let inner = parse_network(s).map_err(lib)?;
        *out = Box::into_raw(Box::new(SlowmixNetwork { inner }));
        Ok(())
    })
}

/// # Safety
/// `net` must come from `slowmix_network_parse` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn slowmix_network_free(net: *mut SlowmixNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn slowmix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Canonical text of the network.
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slowmix_network_render(net: *const SlowmixNetwork, out: *mut *mut c_char) -> SlowmixStatus {
    guard(|| {
        let net = network(net)?;
        if out.is_null() {
            return fail(SlowmixStatus::NullPointer, "null output");
        }
        into_c_string(render_network(net), out)
    })
}

/// # Safety
/// `net` must be a live handle; `species` and `reactions` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn slowmix_network_counts(
    net: *const SlowmixNetwork,
    species: *mut usize,
    reactions: *mut usize,
) -> SlowmixStatus {
    guard(|| {
        let net = network(net)?;
        if species.is_null() || reactions.is_null() {
            return fail(SlowmixStatus::NullPointer, "null output");
        }
        *species = net.dim();
        *reactions = net.reactions().len();
        Ok(())
    })
}

/// Mass-action propensity of reaction `r` at state `x[0..len]`.
///
/// # Safety
/// `x` must point to `len` values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn slowmix_propensity(
    net: *const SlowmixNetwork,
    r: usize,
    x: *const u64,
    len: usize,
    out: *mut f64,
) -> SlowmixStatus {
    guard(|| {
        let net = network(net)?;
        let x = state(x, len)?;
        if out.is_null() {
            return fail(SlowmixStatus::NullPointer, "null output");
        }
        *out = net.propensity(r, &x).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// As `slowmix_propensity`.
#[no_mangle]
pub unsafe extern "C" fn slowmix_total_rate(
    net: *const SlowmixNetwork,
    x: *const u64,
    len: usize,
    out: *mut f64,
) -> SlowmixStatus {
    guard(|| {
        let net = network(net)?;
        let x = state(x, len)?;
        if out.is_null() {
            return fail(SlowmixStatus::NullPointer, "null output");
        }
        *out = net.total_rate(&x).map_err(lib)?;
        Ok(())
    })
}

/// Escape exponents of a cyclic two-species network; `SLOWMIX_STATUS_UNSUPPORTED`
/// for other networks.
///
/// # Safety
/// `net` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn slowmix_theta_bounds(net: *const SlowmixNetwork, out: *mut SlowmixTheta) -> SlowmixStatus {
    guard(|| {
        let net = network(net)?;
        if out.is_null() {
            return fail(SlowmixStatus::NullPointer, "null output");
        }
        let spec = recognize_cyclic(net).map_err(lib)?;
        let t = theta_bounds(&spec).map_err(lib)?;
        *out = SlowmixTheta {
            theta1: t.theta1,
            theta2: t.theta2,
            theta: t.theta,
            assumptions_ok: t.assumptions_ok,
        };
        Ok(())
    })
}

/// Exact probability that the embedded chain from `start` first follows the
/// reactions `labels`. Writes `"p/q"` to `*exact` (may be null to skip) and
/// its value to `*decimal`.
///
/// # Safety
/// Arrays must hold `dim` and `n_labels` values; `labels` may be null when
/// `n_labels` is 0.
#[no_mangle]
pub unsafe extern "C" fn slowmix_path_probability(
    net: *const SlowmixNetwork,
    start: *const u64,
    dim: usize,
    labels: *const usize,
    n_labels: usize,
    exact: *mut *mut c_char,
    decimal: *mut f64,
) -> SlowmixStatus {
    guard(|| {
        let net = network(net)?;
        let start = state(start, dim)?;
        let labels = if n_labels == 0 {
            &[][..]
        } else if labels.is_null() {
            return fail(SlowmixStatus::NullPointer, "null labels");
        } else {
            std::slice::from_raw_parts(labels, n_labels)
        };
        if decimal.is_null() {
            return fail(SlowmixStatus::NullPointer, "null output");
        }
        let seq = TransitionSequence::from_labels(net, labels).map_err(lib)?;
        let p = path_probability(net, &start, &seq).map_err(lib)?;
        *decimal = p.to_f64().unwrap_or(f64::NAN);
        if !exact.is_null() {
            into_c_string(p.to_string(), exact)?;
        }
        Ok(())
    })
}

/// Mean first passage time over `m` trajectories to `{max_i x_i <= threshold}`
/// when `sup_norm` is true, else to `{x_coordinate <= threshold}`.
///
/// # Safety
/// `init` must hold `dim` values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn slowmix_mean_first_passage(
    net: *const SlowmixNetwork,
    init: *const u64,
    dim: usize,
    sup_norm: bool,
    coordinate: usize,
    threshold: u64,
    m: usize,
    seed: u64,
    out: *mut SlowmixFpt,
) -> SlowmixStatus {
    guard(|| {
        let net = network(net)?;
        let init = state(init, dim)?;
        if out.is_null() {
            return fail(SlowmixStatus::NullPointer, "null output");
        }
        let q = if sup_norm {
            FptQuery::sup_norm(threshold)
        } else {
            FptQuery::coordinate(coordinate, threshold)
        };
        let s = mean_first_passage(net, &init, &q, m, &SimConfig::new(seed)).map_err(lib)?;
        *out = SlowmixFpt {
            mean: s.mean,
            std_error: s.stderr,
            reached: s.reached,
            capped: s.capped,
            absorbed: s.absorbed,
        };
        Ok(())
    })
}
