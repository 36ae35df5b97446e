//! C ABI over the simulation and optimization library.
//!
//! Objects are exposed as opaque handles that the caller frees with the
//! matching `*_free` function. Every fallible call returns an
//! [`ImpactStatus`]; on failure the message is available from
//! [`impactopt_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use impactopt::config::RunConfig;
use impactopt::forward::{run_forward, ForwardOptions};
use impactopt::optimizer::run_optimization;
use impactopt::problem::Problem;
use impactopt::sensitivity::{evaluate, DensityFilter};
use impactopt::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImpactStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Solver = 4,
    Io = 5,
    Budget = 6,
    Internal = 7,
    Panic = 8,
}

/// Objective value of one trajectory.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ImpactObjective {
    pub total: f64,
    pub disp: f64,
    pub plastic: f64,
    pub damage: f64,
}

/// Parsed and validated run configuration.
pub struct ImpactConfig {
    cfg: RunConfig,
}

/// Discretized problem with its density filter.
pub struct ImpactProblem {
    problem: Problem,
    filter: DensityFilter,
    eta_init: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ImpactStatus {
    match e {
        Error::InvalidArgument(_) => ImpactStatus::InvalidArgument,
        Error::Config(_) => ImpactStatus::Config,
        Error::Solver { .. } => ImpactStatus::Solver,
        Error::Io { .. } => ImpactStatus::Io,
        Error::Budget(_) => ImpactStatus::Budget,
        Error::Internal(_) => ImpactStatus::Internal,
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

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ImpactStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ImpactStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            ImpactStatus::NullPointer
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
            set_error(format!("panic: {msg}"));
            ImpactStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail::Lib(Error::invalid(format!("{what} is not valid UTF-8"))))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut_arg<'a>(p: *mut f64, n: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Fail> {
    if got != want {
        return Err(Fail::Lib(Error::invalid(format!("{what} has length {got}, expected {want}"))));
    }
    Ok(())
}

fn objective(o: &impactopt::objective::ObjectiveValue) -> ImpactObjective {
    ImpactObjective { total: o.total, disp: o.disp, plastic: o.dp, damage: o.da }
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn impactopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn impactopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn impactopt_config_load(path: *const c_char, out: *mut *mut ImpactConfig) -> ImpactStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let cfg = RunConfig::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(ImpactConfig { cfg }));
        Ok(())
    })
}

/// Parses and validates a configuration from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn impactopt_config_parse(text: *const c_char, out: *mut *mut ImpactConfig) -> ImpactStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let cfg = RunConfig::from_toml_str(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(ImpactConfig { cfg }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from a config constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn impactopt_config_free(cfg: *mut ImpactConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Builds the discretized problem of a configuration.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn impactopt_problem_new(cfg: *const ImpactConfig, out: *mut *mut ImpactProblem) -> ImpactStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let c = &cfg.as_ref().ok_or(Fail::Null("cfg"))?.cfg;
        let problem = c.build_problem(None)?;
        let filter = DensityFilter::new(&problem.mesh, c.optimizer.filter_radius_scale * c.geometry.length);
        *out = Box::into_raw(Box::new(ImpactProblem { problem, filter, eta_init: c.eta_init() }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`impactopt_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn impactopt_problem_free(p: *mut ImpactProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of design elements, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn impactopt_problem_design_size(p: *const ImpactProblem) -> usize {
    p.as_ref().map_or(0, |p| p.problem.mesh.n_design_elems)
}

/// Uniform initial design value of the configuration.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn impactopt_problem_eta_init(p: *const ImpactProblem) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.eta_init)
}

/// Runs the forward simulation for an element design (no filtering) and
/// reports the objective.
///
/// # Safety
/// `eta` must point to `n` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn impactopt_forward(
    p: *const ImpactProblem,
    eta: *const f64,
    n: usize,
    out: *mut ImpactObjective,
) -> ImpactStatus {
    guard(|| {
        let p = p.as_ref().ok_or(Fail::Null("problem"))?;
        let out = out.as_mut().ok_or(Fail::Null("out"))?;
        let eta = slice_arg(eta, n, "eta")?;
        check_len(n, p.problem.mesh.n_design_elems, "eta")?;
        let fwd = run_forward(&p.problem, eta, ForwardOptions::default())?;
        *out = objective(&fwd.objective(&p.problem)?);
        Ok(())
    })
}

/// Objective and adjoint gradient with respect to the raw (unfiltered)
/// design.
///
/// # Safety
/// `eta_raw` and `gradient` must point to `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn impactopt_evaluate(
    p: *const ImpactProblem,
    eta_raw: *const f64,
    n: usize,
    out: *mut ImpactObjective,
    gradient: *mut f64,
) -> ImpactStatus {
    guard(|| {
        let p = p.as_ref().ok_or(Fail::Null("problem"))?;
        let out = out.as_mut().ok_or(Fail::Null("out"))?;
        let eta = slice_arg(eta_raw, n, "eta_raw")?;
        let g = slice_mut_arg(gradient, n, "gradient")?;
        check_len(n, p.problem.mesh.n_design_elems, "eta_raw")?;
        let (ev, _) = evaluate(&p.problem, &p.filter, eta, None, None)?;
        *out = objective(&ev.objective);
        g.copy_from_slice(&ev.gradient);
        Ok(())
    })
}

/// Runs the optimization and writes the final filtered design. A
/// `max_iters` of 0 uses the configured cap. `iterations` may be null.
///
/// # Safety
/// `eta_out` must point to `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn impactopt_optimize(
    cfg: *const ImpactConfig,
    max_iters: usize,
    eta_out: *mut f64,
    n: usize,
    iterations: *mut usize,
) -> ImpactStatus {
    guard(|| {
        let c = &cfg.as_ref().ok_or(Fail::Null("cfg"))?.cfg;
        let dst = slice_mut_arg(eta_out, n, "eta_out")?;
        let cap = (max_iters > 0).then_some(max_iters);
        let res = run_optimization(c, cap, &mut |_, _, _| Ok(()))?;
        check_len(n, res.eta_phys.len(), "eta_out")?;
        dst.copy_from_slice(&res.eta_phys);
        if let Some(it) = iterations.as_mut() {
            *it = res.history.len();
        }
        Ok(())
    })
}
