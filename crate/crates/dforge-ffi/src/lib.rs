//! C ABI over the dforge library.
//!
//! Handles are opaque pointers created by `*_new` functions and released by
//! the matching `*_free`. Every fallible call returns a [`DforgeStatus`]; the
//! message of the most recent failure on the calling thread is available
//! through [`dforge_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dforge::derivation::replay_derivation;
use dforge::hnn::Hnn;
use dforge::presentation::{build_presentation, derive_hnn_data, Presentation};
use dforge::sc::analytic_rips_margins;
use dforge::witness::{assemble_witness, Mode, WitnessContext};
use dforge::Error;

/// Result codes shared by every function in this interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DforgeStatus {
    Ok = 0,
    /// Bad parameters, such as `q >= p`.
    Param = 1,
    /// A required pointer argument was null.
    NullPointer = 2,
    /// An explicit construction would exceed the letter budget.
    Budget = 3,
    /// A check ran and failed, or an internal assertion tripped.
    Failed = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// Opaque presentation handle.
pub struct DforgePresentation {
    inner: Presentation,
}

/// Summary of one witness pair in counting mode.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DforgeWitnessSummary {
    pub n: u64,
    pub w_len: u64,
    pub ub0_len: u64,
    pub a2_count: u64,
    pub chi_lower_bound_log: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DforgeStatus {
    match e {
        Error::Param(_) | Error::Alphabet(_) | Error::Parse { .. } => DforgeStatus::Param,
        Error::Budget { .. } => DforgeStatus::Budget,
        _ => DforgeStatus::Failed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Error>) -> DforgeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DforgeStatus::Ok,
        Ok(Err(e)) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(_) => {
            set_error("panic inside dforge".into());
            DforgeStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(format!("null pointer: {}", stringify!($p)));
            return DforgeStatus::NullPointer;
        })+
    };
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dforge_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds the presentation for `(p, q, scale)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dforge_presentation_new(
    p: u32,
    q: u32,
    scale: u32,
    out: *mut *mut DforgePresentation,
) -> DforgeStatus {
    non_null!(out);
    *out = ptr::null_mut();
    guard(|| {
        let inner = build_presentation(p, q, scale)?;
        *out = Box::into_raw(Box::new(DforgePresentation { inner }));
        Ok(())
    })
}

/// Releases a handle from [`dforge_presentation_new`]. Null is ignored.
///
/// # Safety
/// `pres` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dforge_presentation_free(pres: *mut DforgePresentation) {
    if !pres.is_null() {
        drop(Box::from_raw(pres));
    }
}

/// Number of defining relators.
///
/// # Safety
/// `pres` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dforge_presentation_relator_count(
    pres: *const DforgePresentation,
    out: *mut u64,
) -> DforgeStatus {
    non_null!(pres, out);
    *out = (*pres).inner.relators.len() as u64;
    DforgeStatus::Ok
}

/// Shortest relator length.
///
/// # Safety
/// `pres` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dforge_presentation_min_relator_len(
    pres: *const DforgePresentation,
    out: *mut u64,
) -> DforgeStatus {
    non_null!(pres, out);
    guard(|| {
        *out = (*pres).inner.min_relator_len();
        Ok(())
    })
}

/// Runs the structural census; fails if any Rips word is misallocated.
///
/// # Safety
/// `pres` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dforge_presentation_census(pres: *const DforgePresentation) -> DforgeStatus {
    non_null!(pres);
    guard(|| (*pres).inner.census().map(|_| ()))
}

/// Presentation file text. Release it with [`dforge_string_free`].
///
/// # Safety
/// `pres` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dforge_presentation_serialize(
    pres: *const DforgePresentation,
    out: *mut *mut c_char,
) -> DforgeStatus {
    non_null!(pres, out);
    *out = ptr::null_mut();
    guard(|| {
        let s = CString::new((*pres).inner.serialize())
            .map_err(|e| Error::Assertion(e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dforge_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Analytic small-cancellation check; `*holds` is set to whether all four
/// conditions are certified.
///
/// # Safety
/// `pres` must be a live handle and `holds` writable.
#[no_mangle]
pub unsafe extern "C" fn dforge_check_sc_analytic(
    pres: *const DforgePresentation,
    holds: *mut bool,
) -> DforgeStatus {
    non_null!(pres, holds);
    guard(|| {
        *holds = analytic_rips_margins(&(*pres).inner)?.all_hold();
        Ok(())
    })
}

/// Counting-mode witness for `n`.
///
/// # Safety
/// `pres` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dforge_witness_counting(
    pres: *const DforgePresentation,
    n: u64,
    out: *mut DforgeWitnessSummary,
) -> DforgeStatus {
    non_null!(pres, out);
    guard(|| {
        let ctx = WitnessContext::new(&(*pres).inner)?;
        let b = assemble_witness(&ctx, n, Mode::Counting)?;
        *out = DforgeWitnessSummary {
            n,
            w_len: b.w_len(),
            ub0_len: b.ub0_len(),
            a2_count: b.v_a2,
            chi_lower_bound_log: b.chi_lb_log,
        };
        Ok(())
    })
}

/// Builds the explicit witness for `n`, replays its derivation and checks
/// `w_n chi_n^-1` by Britton reduction. `*verified` is true iff both pass.
///
/// # Safety
/// `pres` must be a live handle and `verified` writable.
#[no_mangle]
pub unsafe extern "C" fn dforge_verify_witness(
    pres: *const DforgePresentation,
    n: u64,
    verified: *mut bool,
) -> DforgeStatus {
    non_null!(pres, verified);
    *verified = false;
    guard(|| {
        let pres = &(*pres).inner;
        let ctx = WitnessContext::new(pres)?;
        let b = assemble_witness(&ctx, n, Mode::Explicit)?;
        let e = b.explicit.as_ref().expect("explicit parts");
        replay_derivation(ctx.table(), &e.derivation)?;
        let hnn = Hnn::new(pres, &derive_hnn_data(pres)?)?;
        *verified = hnn.britton_reduce(&b.w.concat(&e.chi.inverse())).trivial;
        Ok(())
    })
}
