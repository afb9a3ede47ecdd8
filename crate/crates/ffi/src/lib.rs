//! C interface to `seqnorm`.
//!
//! Every fallible function returns a [`SeqnormStatus`]; on failure the
//! message is available from [`seqnorm_last_error`] on the same thread.
//! Plans and sessions are opaque heap handles released with their `_free`
//! functions. Strings returned by the library are released with
//! [`seqnorm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use seqnorm::calibrate::{calibrate_known, calibrate_unknown, CalibrationOptions};
use seqnorm::geometry::{cone_prob, ConeRegion};
use seqnorm::plan::{build_known_plan, build_unknown_plan, Design, PartitionOptions, Plan};
use seqnorm::runner::{plan_from_json, plan_to_json, Status, TestSession};
use seqnorm::simulate::simulate_plan;
use seqnorm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqnormStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    UnsupportedRegion = 3,
    InsufficientData = 4,
    DegenerateSample = 5,
    EpsilonTooSmall = 6,
    CalibrationFailed = 7,
    State = 8,
    Integrity = 9,
    Schema = 10,
    Plan = 11,
    Io = 12,
    Internal = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqnormState {
    NeedMore = 0,
    Accepted = 1,
    Rejected = 2,
}

/// Session progress. `value` is the number of further samples required for
/// `NeedMore`, otherwise the 1-based stage of the decision.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SeqnormSessionStatus {
    pub state: SeqnormState,
    pub value: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SeqnormSimResult {
    pub accept_rate: f64,
    pub reject_rate: f64,
    pub mc_se: f64,
    pub asn: f64,
}

pub struct SeqnormPlan(Plan);

pub struct SeqnormSession(TestSession);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SeqnormStatus {
    match e {
        Error::Domain(_) | Error::ContractViolation(_) | Error::DegenerateParameter(_) => {
            SeqnormStatus::Domain
        }
        Error::UnsupportedRegion { .. } => SeqnormStatus::UnsupportedRegion,
        Error::InsufficientData { .. } => SeqnormStatus::InsufficientData,
        Error::DegenerateSample => SeqnormStatus::DegenerateSample,
        Error::EpsilonTooSmall { .. } => SeqnormStatus::EpsilonTooSmall,
        Error::CalibrationFailed { .. } => SeqnormStatus::CalibrationFailed,
        Error::State(_) => SeqnormStatus::State,
        Error::Integrity(_) => SeqnormStatus::Integrity,
        Error::Schema(_) => SeqnormStatus::Schema,
        Error::Plan(_) => SeqnormStatus::Plan,
        Error::Io(_) => SeqnormStatus::Io,
        Error::InconsistentBoundary { .. } | Error::Invariant(_) => SeqnormStatus::Internal,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F>(f: F) -> SeqnormStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SeqnormStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            SeqnormStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic inside seqnorm: {msg}"));
            SeqnormStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

/// Boxes `value` into `out`, checking the pointer first so nothing leaks.
unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Fail::Lib(Error::Schema(format!("{what} is not UTF-8: {e}"))))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    let c = CString::new(s).map_err(|e| Error::Schema(format!("output contains NUL: {e}")))?;
    out.write(c.into_raw());
    Ok(())
}

fn session_status(s: Status) -> SeqnormSessionStatus {
    match s {
        Status::NeedMore { next_n } => SeqnormSessionStatus {
            state: SeqnormState::NeedMore,
            value: next_n,
        },
        Status::Accepted { stage } => SeqnormSessionStatus {
            state: SeqnormState::Accepted,
            value: stage as u64,
        },
        Status::Rejected { stage } => SeqnormSessionStatus {
            state: SeqnormState::Rejected,
            value: stage as u64,
        },
    }
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn seqnorm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn design(alpha: f64, beta: f64, epsilon: f64, gamma: f64, zeta: f64, rho: f64, tau: u32) -> Design {
    Design {
        alpha,
        beta,
        epsilon,
        gamma,
        zeta,
        rho,
        tau,
    }
}

/// Builds a known-variance plan with the given `zeta`. The plan is
/// verified and marked certified if it meets both error targets.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn seqnorm_plan_known(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    gamma: f64,
    sigma: f64,
    zeta: f64,
    rho: f64,
    tau: u32,
    out: *mut *mut SeqnormPlan,
) -> SeqnormStatus {
    guard(|| {
        let mut p = build_known_plan(&design(alpha, beta, epsilon, gamma, zeta, rho, tau), sigma)?;
        p.certify()?;
        put_handle(out, SeqnormPlan(Plan::Known(p)))
    })
}

/// Unknown-variance counterpart of [`seqnorm_plan_known`].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn seqnorm_plan_unknown(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    gamma: f64,
    zeta: f64,
    rho: f64,
    tau: u32,
    tail_mass: f64,
    cell_budget: usize,
    out: *mut *mut SeqnormPlan,
) -> SeqnormStatus {
    guard(|| {
        let opts = PartitionOptions {
            tail_mass,
            cell_budget,
        };
        let mut p = build_unknown_plan(&design(alpha, beta, epsilon, gamma, zeta, rho, tau))?;
        p.certify(&opts)?;
        put_handle(out, SeqnormPlan(Plan::Unknown(p)))
    })
}

/// Calibrates `zeta` and builds the plan. `sigma <= 0` selects the
/// unknown-variance kind. `zeta_out` may be NULL.
///
/// # Safety
/// `out` must be valid for one handle; `zeta_out` NULL or valid for one
/// double.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn seqnorm_plan_calibrate(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    gamma: f64,
    sigma: f64,
    rho: f64,
    tau: u32,
    zeta_tol: f64,
    tail_mass: f64,
    cell_budget: usize,
    out: *mut *mut SeqnormPlan,
    zeta_out: *mut f64,
) -> SeqnormStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let d = design(alpha, beta, epsilon, gamma, 1.0, rho, tau);
        let copts = CalibrationOptions {
            zeta_tol,
            zeta_hi: None,
        };
        let (plan, r) = if sigma > 0.0 {
            let (p, r) = calibrate_known(&d, sigma, &copts)?;
            (Plan::Known(p), r)
        } else {
            let popts = PartitionOptions {
                tail_mass,
                cell_budget,
            };
            let (p, r) = calibrate_unknown(&d, &copts, &popts)?;
            (Plan::Unknown(p), r)
        };
        if !zeta_out.is_null() {
            zeta_out.write(r.zeta);
        }
        put_handle(out, SeqnormPlan(plan))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_plan_from_json(json: *const c_char, out: *mut *mut SeqnormPlan) -> SeqnormStatus {
    guard(|| {
        let plan = plan_from_json(read_str(json, "json")?)?;
        put_handle(out, SeqnormPlan(plan))
    })
}

/// Writes a newly allocated JSON string to `out`.
///
/// # Safety
/// `plan` must be a live handle; `out` valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_plan_to_json(plan: *const SeqnormPlan, out: *mut *mut c_char) -> SeqnormStatus {
    guard(|| {
        let p = get(plan, "plan")?;
        put_string(out, plan_to_json(&p.0)?)
    })
}

/// # Safety
/// `plan` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_plan_free(plan: *mut SeqnormPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Number of stages, or 0 for NULL.
///
/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_plan_stage_count(plan: *const SeqnormPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.stages().len())
}

/// 1 if certified, 0 if not or NULL.
///
/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_plan_certified(plan: *const SeqnormPlan) -> i32 {
    plan.as_ref().map_or(0, |p| p.0.certified() as i32)
}

/// Stage `index` (0-based): cumulative size and the two thresholds.
///
/// # Safety
/// `plan` must be a live handle and the outputs valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_plan_stage(
    plan: *const SeqnormPlan,
    index: usize,
    n: *mut u64,
    a: *mut f64,
    b: *mut f64,
) -> SeqnormStatus {
    guard(|| {
        let p = get(plan, "plan")?;
        let st = p.0.stages().get(index).copied().ok_or_else(|| {
            Error::Domain(format!("stage index {index} out of range"))
        })?;
        put(n, st.n, "n")?;
        put(a, st.a, "a")?;
        put(b, st.b, "b")
    })
}

/// Bounds on the acceptance probability at standardized offset `theta`.
/// The partition settings only affect unknown-variance plans.
///
/// # Safety
/// `plan` must be a live handle and the outputs valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_plan_oc_bounds(
    plan: *const SeqnormPlan,
    theta: f64,
    tail_mass: f64,
    cell_budget: usize,
    lower: *mut f64,
    upper: *mut f64,
) -> SeqnormStatus {
    guard(|| {
        let p = get(plan, "plan")?;
        let opts = PartitionOptions {
            tail_mass,
            cell_budget,
        };
        let (lo, hi) = p.0.oc_bounds(theta, &opts)?;
        put(lower, lo.get(), "lower")?;
        put(upper, hi.get(), "upper")
    })
}

/// Bound on the probability of sampling past 1-based non-final `stage`.
///
/// # Safety
/// `plan` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_plan_sample_tail(
    plan: *const SeqnormPlan,
    stage: usize,
    theta: f64,
    out: *mut f64,
) -> SeqnormStatus {
    guard(|| {
        let p = get(plan, "plan")?;
        put(out, p.0.sample_tail(stage, theta)?.get(), "out")
    })
}

/// Monte Carlo run of the plan on `N(mu, sigma^2)` data.
///
/// # Safety
/// `plan` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_simulate(
    plan: *const SeqnormPlan,
    mu: f64,
    sigma: f64,
    reps: u64,
    seed: u64,
    out: *mut SeqnormSimResult,
) -> SeqnormStatus {
    guard(|| {
        let p = get(plan, "plan")?;
        let r = simulate_plan(&p.0, mu, sigma, reps, seed)?;
        let res = SeqnormSimResult {
            accept_rate: r.accept_rate.get(),
            reject_rate: r.reject_rate.get(),
            mc_se: r.mc_se,
            asn: r.asn,
        };
        put(out, res, "out")
    })
}

/// Gaussian measure of the cone region `{h <= u <= k v + g}`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_cone_prob(h: f64, g: f64, k: f64, out: *mut f64) -> SeqnormStatus {
    guard(|| {
        let v = cone_prob(&ConeRegion::new(h, g, k)?)?;
        put(out, v.get(), "out")
    })
}

/// Starts a session on a copy of `plan`. Uncertified plans need
/// `allow_uncertified != 0`.
///
/// # Safety
/// `plan` must be a live handle and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_session_new(
    plan: *const SeqnormPlan,
    allow_uncertified: i32,
    out: *mut *mut SeqnormSession,
) -> SeqnormStatus {
    guard(|| {
        let p = get(plan, "plan")?;
        let s = TestSession::new(p.0.clone(), allow_uncertified != 0)?;
        put_handle(out, SeqnormSession(s))
    })
}

/// Appends `len` observations. On failure the session is unchanged.
///
/// # Safety
/// `session` must be a live handle, `data` valid for `len` doubles (or
/// NULL with `len == 0`), and `status` NULL or valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_session_feed(
    session: *mut SeqnormSession,
    data: *const f64,
    len: usize,
    status: *mut SeqnormSessionStatus,
) -> SeqnormStatus {
    guard(|| {
        let s = get_mut(session, "session")?;
        let batch = if len == 0 {
            &[][..]
        } else if data.is_null() {
            return Err(Fail::Null("data"));
        } else {
            std::slice::from_raw_parts(data, len)
        };
        let st = s.0.feed(batch)?;
        if !status.is_null() {
            status.write(session_status(st));
        }
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle and `status` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_session_status(
    session: *const SeqnormSession,
    status: *mut SeqnormSessionStatus,
) -> SeqnormStatus {
    guard(|| {
        let s = get(session, "session")?;
        put(status, session_status(s.0.status), "status")
    })
}

/// Statistic of the most recently decided stage.
///
/// # Safety
/// `session` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_session_last_statistic(
    session: *const SeqnormSession,
    out: *mut f64,
) -> SeqnormStatus {
    guard(|| {
        let s = get(session, "session")?;
        let h = s.0.history.last().ok_or_else(|| Error::State("no stage decided yet".into()))?;
        put(out, h.statistic, "out")
    })
}

/// # Safety
/// `session` must be a live handle; `out` valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_session_to_json(
    session: *const SeqnormSession,
    out: *mut *mut c_char,
) -> SeqnormStatus {
    guard(|| {
        let s = get(session, "session")?;
        put_string(out, s.0.to_json()?)
    })
}

/// Parses a saved session and replays its history.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_session_from_json(
    json: *const c_char,
    out: *mut *mut SeqnormSession,
) -> SeqnormStatus {
    guard(|| {
        let s = TestSession::from_json(read_str(json, "json")?)?;
        put_handle(out, SeqnormSession(s))
    })
}

/// # Safety
/// `session` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn seqnorm_session_free(session: *mut SeqnormSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
