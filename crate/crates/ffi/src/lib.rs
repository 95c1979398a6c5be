//! C ABI over `nldd-core`.
//!
//! Every function returns an `NlddStatus`; on failure the message is kept
//! per thread and read with `nldd_last_error`. Handles are opaque and
//! owned by the caller, who releases them with the matching `_free`.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nldd_core::dn::{dn_solve, optimal_theta, ConvergenceHistory, Decomposition, DnConfig};
use nldd_core::harness::{run_experiment, write_run, Overrides};
use nldd_core::npc::{dnpen_solve, NewtonOuterConfig, SubstructuredResidualSpec};
use nldd_core::problem::{Forcing, Mesh1D, NewtonConfig, ProblemSpec};
use nldd_core::transmission::{dtn_eval, ntd_eval, FluxValue, InterfaceValue};
use nldd_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlddStatus {
    Ok = 0,
    InvalidInput = 1,
    DimensionMismatch = 2,
    SolverFailure = 3,
    SingularJacobian = 4,
    UnsupportedOracle = 5,
    HypothesisViolated = 6,
    UnknownExperiment = 7,
    RejectedOverride = 8,
    Io = 9,
    Parse = 10,
    NullPointer = 11,
    Panic = 12,
}

impl From<&Error> for NlddStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => NlddStatus::InvalidInput,
            Error::DimensionMismatch { .. } => NlddStatus::DimensionMismatch,
            Error::SolverFailure { .. } => NlddStatus::SolverFailure,
            Error::SingularJacobian(_) => NlddStatus::SingularJacobian,
            Error::UnsupportedOracle(_) => NlddStatus::UnsupportedOracle,
            Error::HypothesisViolated { .. } => NlddStatus::HypothesisViolated,
            Error::UnknownExperiment(_) => NlddStatus::UnknownExperiment,
            Error::RejectedOverride(_) => NlddStatus::RejectedOverride,
            Error::Io(_) => NlddStatus::Io,
            Error::Parse(_) => NlddStatus::Parse,
        }
    }
}

/// Right-hand side selector for `nldd_problem_new`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlddForcing {
    /// `f = 0`
    Zero = 0,
    /// `f = c x`
    LinearRamp = 1,
    /// `f = c sin(k pi x)`
    Sine = 2,
}

/// A two-subdomain split of the unit interval.
pub struct NlddProblem {
    split: Decomposition,
}

/// Result of an interface iteration.
pub struct NlddHistory {
    lambda: f64,
    history: ConvergenceHistory,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NlddOptimalTheta {
    pub theta: f64,
    pub delta: f64,
    pub d1: f64,
    pub d2: f64,
    pub lambda_exact: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NlddRecord {
    pub iteration: usize,
    pub error_inf: f64,
    pub residual_inf: f64,
    pub inner_newton_total: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> NlddStatus
where
    F: FnOnce() -> Result<(), NlddStatus>,
{
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlddStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NlddStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, NlddStatus>;
}

impl<T> OrStatus<T> for nldd_core::Result<T> {
    fn or_status(self) -> Result<T, NlddStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            NlddStatus::from(&e)
        })
    }
}

fn null(what: &str) -> NlddStatus {
    set_error(format!("null pointer: {what}"));
    NlddStatus::NullPointer
}

fn invalid(msg: String) -> NlddStatus {
    set_error(msg);
    NlddStatus::InvalidInput
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, NlddStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, NlddStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, NlddStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nldd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nldd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build `-((1 + alpha u^2) u')' = f` on (0, 1) with `u(0) = u_left`,
/// `u(1) = u_right`, `cells` uniform cells and one interface at `gamma`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn nldd_problem_new(
    alpha: f64,
    forcing: NlddForcing,
    k: f64,
    c: f64,
    u_left: f64,
    u_right: f64,
    cells: usize,
    gamma: f64,
    out_problem: *mut *mut NlddProblem,
) -> NlddStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        *slot = ptr::null_mut();
        let f = match forcing {
            NlddForcing::Zero => Forcing::Zero,
            NlddForcing::LinearRamp => Forcing::LinearRamp { c },
            NlddForcing::Sine => Forcing::Sine { k, c },
        };
        let spec = ProblemSpec::unit(alpha, f, u_left, u_right);
        let mesh = Mesh1D::new(0.0, 1.0, cells).or_status()?;
        let split = Decomposition::line(&spec, &mesh, &[gamma]).or_status()?;
        *slot = Box::into_raw(Box::new(NlddProblem { split }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from `nldd_problem_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nldd_problem_free(problem: *mut NlddProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Interface value of the monodomain solution.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nldd_exact_trace(problem: *const NlddProblem, out_lambda: *mut f64) -> NlddStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let o = out(out_lambda, "out_lambda")?;
        let r = p.split.reference_traces(&NewtonConfig::default()).or_status()?;
        *o = r[0].0[0];
        Ok(())
    })
}

/// Relaxation parameter that makes the Dirichlet-Neumann iteration
/// converge quadratically.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nldd_optimal_theta(
    problem: *const NlddProblem,
    out_theta: *mut NlddOptimalTheta,
) -> NlddStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let o = out(out_theta, "out_theta")?;
        let q = optimal_theta(&p.split, &NewtonConfig::default()).or_status()?;
        *o = NlddOptimalTheta {
            theta: q.theta,
            delta: q.delta,
            d1: q.d1,
            d2: q.d2,
            lambda_exact: q.lambda_exact,
        };
        Ok(())
    })
}

fn subdomain(p: &NlddProblem, index: usize) -> Result<&nldd_core::transmission::SubdomainData, NlddStatus> {
    p.split
        .subdomains
        .get(index)
        .ok_or_else(|| invalid(format!("subdomain index {index} out of range (0 or 1)")))
}

/// Outward interface flux of subdomain `index` (0 left, 1 right) for the
/// Dirichlet value `lambda`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nldd_dtn(
    problem: *const NlddProblem,
    index: usize,
    lambda: f64,
    out_flux: *mut f64,
) -> NlddStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let o = out(out_flux, "out_flux")?;
        let e = dtn_eval(&InterfaceValue::scalar(lambda), subdomain(p, index)?, &NewtonConfig::default())
            .or_status()?;
        *o = e.value.0[0];
        Ok(())
    })
}

/// Interface value of subdomain `index` for the outward flux `flux`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nldd_ntd(
    problem: *const NlddProblem,
    index: usize,
    flux: f64,
    out_lambda: *mut f64,
) -> NlddStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let o = out(out_lambda, "out_lambda")?;
        let e = ntd_eval(&FluxValue(vec![flux]), subdomain(p, index)?, &NewtonConfig::default())
            .or_status()?;
        *o = e.value.0[0];
        Ok(())
    })
}

/// Relaxed Dirichlet-Neumann iteration from `lambda0`. Errors are measured
/// against the monodomain trace.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nldd_dn_solve(
    problem: *const NlddProblem,
    lambda0: f64,
    theta: f64,
    tol: f64,
    max_outer: usize,
    out_history: *mut *mut NlddHistory,
) -> NlddStatus {
    guard(|| {
        let slot = out(out_history, "out_history")?;
        *slot = ptr::null_mut();
        let p = deref(problem, "problem")?;
        let cfg = DnConfig {
            theta,
            tol,
            max_outer,
            ..DnConfig::default()
        };
        let reference = p.split.reference_traces(&cfg.inner).or_status()?;
        let (p1, p2) = p.split.pair().or_status()?;
        let r = dn_solve(&InterfaceValue::scalar(lambda0), p1, p2, &cfg, Some(&reference[0])).or_status()?;
        *slot = Box::into_raw(Box::new(NlddHistory {
            lambda: r.lambda.0[0],
            history: r.history,
        }));
        Ok(())
    })
}

/// Newton's method on the substructured interface residual, preconditioned
/// by the Dirichlet-Neumann map with relaxation `theta`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nldd_dnpen_solve(
    problem: *const NlddProblem,
    lambda0: f64,
    theta: f64,
    tol: f64,
    max_iter: usize,
    out_history: *mut *mut NlddHistory,
) -> NlddStatus {
    guard(|| {
        let slot = out(out_history, "out_history")?;
        *slot = ptr::null_mut();
        let p = deref(problem, "problem")?;
        let cfg = NewtonOuterConfig {
            tol,
            max_iter,
            ..NewtonOuterConfig::default()
        };
        let reference = p.split.reference_traces(&cfg.inner).or_status()?;
        let spec = SubstructuredResidualSpec::new(&p.split, theta).or_status()?;
        let r = dnpen_solve(lambda0, &spec, &cfg, Some(reference[0].0[0])).or_status()?;
        *slot = Box::into_raw(Box::new(NlddHistory {
            lambda: r.lambda,
            history: r.history,
        }));
        Ok(())
    })
}

/// # Safety
/// `history` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn nldd_history_len(history: *const NlddHistory) -> usize {
    history.as_ref().map_or(0, |h| h.history.records.len())
}

/// # Safety
/// `history` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn nldd_history_converged(history: *const NlddHistory) -> bool {
    history.as_ref().is_some_and(|h| h.history.converged)
}

/// Final interface value.
///
/// # Safety
/// `history` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn nldd_history_lambda(history: *const NlddHistory) -> f64 {
    history.as_ref().map_or(f64::NAN, |h| h.lambda)
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nldd_history_record(
    history: *const NlddHistory,
    index: usize,
    out_record: *mut NlddRecord,
) -> NlddStatus {
    guard(|| {
        let h = deref(history, "history")?;
        let o = out(out_record, "out_record")?;
        let r = h.history.records.get(index).ok_or_else(|| {
            invalid(format!("record {index} out of range ({} records)", h.history.records.len()))
        })?;
        *o = NlddRecord {
            iteration: r.iteration,
            error_inf: r.error_inf,
            residual_inf: r.residual_inf,
            inner_newton_total: r.inner_newton_total,
        };
        Ok(())
    })
}

/// # Safety
/// `history` must come from a solve and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nldd_history_free(history: *mut NlddHistory) {
    if !history.is_null() {
        drop(Box::from_raw(history));
    }
}

/// Run a named experiment with its default parameters and write the CSVs
/// and manifest into `out_dir`.
///
/// # Safety
/// Both strings must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn nldd_run_experiment(name: *const c_char, out_dir: *const c_char) -> NlddStatus {
    guard(|| {
        let name = text(name, "name")?;
        let dir = text(out_dir, "out_dir")?;
        let run = run_experiment(name, &Overrides::default()).or_status()?;
        write_run(&run, Path::new(dir)).or_status()?;
        Ok(())
    })
}
