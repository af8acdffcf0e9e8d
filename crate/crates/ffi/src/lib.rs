//! C ABI over `hetnet_energy`.
//!
//! Objects are opaque handles created by `hn_*` constructors and released
//! with the matching `hn_*_free`. Fallible calls return an [`HnStatus`]; on
//! failure the message is available from [`hn_last_error_message`] on the
//! same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use hetnet_energy::harness::{generate_instance, solve_instance, ExperimentConfig, Method, MethodOutcome, OutcomeStatus, Preset};
use hetnet_energy::netmodel::{GainMatrix, NetworkScenario};
use hetnet_energy::pwl::{build_bound, PwlBound};
use hetnet_energy::solver::export_mps;
use hetnet_energy::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Solver = 4,
    Io = 5,
    /// A handle holds no solution or an index is out of range.
    NoValue = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HnPreset {
    Desk = 0,
    Paper = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HnMethod {
    Milp = 0,
    MaxPowerSwitching = 1,
    PowerScaling = 2,
    FullPower = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HnOutcome {
    Feasible = 0,
    Infeasible = 1,
    /// Solver limit hit without a solution, or the model was only exported.
    Unsolved = 2,
}

/// Experiment configuration.
pub struct HnConfig(ExperimentConfig);

/// One generated network instance.
pub struct HnInstance {
    scenario: NetworkScenario,
    gains: GainMatrix,
}

/// Outcome of one method on one instance.
pub struct HnSolution(MethodOutcome);

/// Piecewise-linear upper bound of the inverse rate.
pub struct HnPwl(PwlBound);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: HnStatus, msg: impl Into<String>) -> HnStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> HnStatus {
    let status = match e {
        Error::Domain(_) | Error::NoActiveCell => HnStatus::InvalidArgument,
        Error::Config(_) | Error::Parse { .. } => HnStatus::Config,
        Error::Io { .. } => HnStatus::Io,
        Error::Build(_) | Error::InnerApproximation(_) | Error::Solver(_) => HnStatus::Solver,
    };
    fail(status, e.to_string())
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), HnStatus>) -> HnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HnStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(HnStatus::Panic, "internal panic"),
    }
}

unsafe fn arg<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, HnStatus> {
    ptr.as_ref().ok_or_else(|| fail(HnStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, HnStatus> {
    ptr.as_mut().ok_or_else(|| fail(HnStatus::NullPointer, format!("{name} is null")))
}

unsafe fn string<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, HnStatus> {
    if ptr.is_null() {
        return Err(fail(HnStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(HnStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(ptr: *mut T) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread; empty if none. Valid
/// until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn hn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_config_preset(preset: HnPreset, out_config: *mut *mut HnConfig) -> HnStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let p = match preset {
            HnPreset::Desk => Preset::Desk,
            HnPreset::Paper => Preset::Paper,
        };
        *slot = boxed(HnConfig(ExperimentConfig::preset(p)));
        Ok(())
    })
}

/// Parse a TOML experiment configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out_config` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_config_from_toml(toml: *const c_char, out_config: *mut *mut HnConfig) -> HnStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let config = ExperimentConfig::from_toml(string(toml, "toml")?).map_err(from_error)?;
        *slot = boxed(HnConfig(config));
        Ok(())
    })
}

/// # Safety
/// `config` must come from a `hn_config_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn hn_config_free(config: *mut HnConfig) {
    free(config)
}

/// Instance `run` of the configured layout with equal demand per DP (bit/s).
///
/// # Safety
/// `config` must be a live handle and `out_instance` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_scenario_generate(
    config: *const HnConfig,
    seed: u64,
    run: u64,
    demand: f64,
    out_instance: *mut *mut HnInstance,
) -> HnStatus {
    guard(|| {
        let config = &arg(config, "config")?.0;
        let slot = out(out_instance, "out_instance")?;
        if !(demand.is_finite() && demand >= 0.0) {
            return Err(fail(HnStatus::InvalidArgument, format!("demand must be finite and >= 0, got {demand}")));
        }
        let (scenario, gains) = generate_instance(config, seed, run, demand).map_err(from_error)?;
        *slot = boxed(HnInstance { scenario, gains });
        Ok(())
    })
}

/// # Safety
/// `instance` must come from [`hn_scenario_generate`] or be null.
#[no_mangle]
pub unsafe extern "C" fn hn_instance_free(instance: *mut HnInstance) {
    free(instance)
}

/// Number of cells; 0 for a null handle.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hn_instance_num_cells(instance: *const HnInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.scenario.num_cells())
}

/// Number of demand points; 0 for a null handle.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hn_instance_num_dps(instance: *const HnInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.scenario.num_dps())
}

unsafe fn solve(
    config: *const HnConfig,
    instance: *const HnInstance,
    method: Method,
    out_solution: *mut *mut HnSolution,
) -> HnStatus {
    guard(|| {
        let config = &arg(config, "config")?.0;
        let inst = arg(instance, "instance")?;
        let slot = out(out_solution, "out_solution")?;
        let pwl = config.pwl_bound().map_err(from_error)?;
        let outcome =
            solve_instance(config, &inst.scenario, &inst.gains, &pwl, method, "ffi").map_err(from_error)?;
        *slot = boxed(HnSolution(outcome));
        Ok(())
    })
}

/// Solve the inner-approximation MILP with the bundled branch and bound.
/// Models above the configured export threshold yield `HN_OUTCOME_UNSOLVED`.
///
/// # Safety
/// `config` and `instance` must be live handles and `out_solution` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_solve_milp(
    config: *const HnConfig,
    instance: *const HnInstance,
    out_solution: *mut *mut HnSolution,
) -> HnStatus {
    solve(config, instance, Method::Milp, out_solution)
}

/// Run a reference method; `HN_METHOD_MILP` is accepted too.
///
/// # Safety
/// As for [`hn_solve_milp`].
#[no_mangle]
pub unsafe extern "C" fn hn_solve_baseline(
    config: *const HnConfig,
    instance: *const HnInstance,
    method: HnMethod,
    out_solution: *mut *mut HnSolution,
) -> HnStatus {
    let method = match method {
        HnMethod::Milp => Method::Milp,
        HnMethod::MaxPowerSwitching => Method::MaxPowerSwitching,
        HnMethod::PowerScaling => Method::PowerScaling,
        HnMethod::FullPower => Method::FullPower,
    };
    solve(config, instance, method, out_solution)
}

/// # Safety
/// `solution` must come from a solve call or be null.
#[no_mangle]
pub unsafe extern "C" fn hn_solution_free(solution: *mut HnSolution) {
    free(solution)
}

/// # Safety
/// `solution` must be a live handle and `out_outcome` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_solution_outcome(solution: *const HnSolution, out_outcome: *mut HnOutcome) -> HnStatus {
    guard(|| {
        let s = &arg(solution, "solution")?.0;
        *out(out_outcome, "out_outcome")? = match s.status {
            OutcomeStatus::Feasible => HnOutcome::Feasible,
            OutcomeStatus::Infeasible => HnOutcome::Infeasible,
            OutcomeStatus::Unsolved => HnOutcome::Unsolved,
        };
        Ok(())
    })
}

fn no_value(what: &str) -> HnStatus {
    fail(HnStatus::NoValue, format!("no {what} available"))
}

/// Exact energy of the returned configuration, W·T0.
///
/// # Safety
/// `solution` must be a live handle and `out_energy` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_solution_energy(solution: *const HnSolution, out_energy: *mut f64) -> HnStatus {
    guard(|| {
        let s = &arg(solution, "solution")?.0;
        *out(out_energy, "out_energy")? = s.energy.ok_or_else(|| no_value("energy"))?;
        Ok(())
    })
}

/// MILP objective value; only MILP solutions carry one.
///
/// # Safety
/// `solution` must be a live handle and `out_objective` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_solution_objective(solution: *const HnSolution, out_objective: *mut f64) -> HnStatus {
    guard(|| {
        let s = &arg(solution, "solution")?.0;
        *out(out_objective, "out_objective")? = s.objective.ok_or_else(|| no_value("objective"))?;
        Ok(())
    })
}

/// Activity and transmit power (W) of cell `cell`.
///
/// # Safety
/// `solution` must be a live handle; `out_active` and `out_power` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hn_solution_cell(
    solution: *const HnSolution,
    cell: usize,
    out_active: *mut bool,
    out_power: *mut f64,
) -> HnStatus {
    guard(|| {
        let s = &arg(solution, "solution")?.0;
        let active = out(out_active, "out_active")?;
        let power = out(out_power, "out_power")?;
        let sol = s.solution.as_ref().ok_or_else(|| no_value("solution"))?;
        if cell >= sol.active.len() {
            return Err(fail(HnStatus::NoValue, format!("cell {cell} out of range")));
        }
        *active = sol.active[cell];
        *power = sol.power[cell];
        Ok(())
    })
}

/// Serving cell (0-based) of demand point `dp`.
///
/// # Safety
/// `solution` must be a live handle and `out_cell` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_solution_serving(solution: *const HnSolution, dp: usize, out_cell: *mut usize) -> HnStatus {
    guard(|| {
        let s = &arg(solution, "solution")?.0;
        let slot = out(out_cell, "out_cell")?;
        let sol = s.solution.as_ref().ok_or_else(|| no_value("solution"))?;
        *slot = *sol
            .serving
            .get(dp)
            .ok_or_else(|| fail(HnStatus::NoValue, format!("demand point {dp} out of range")))?;
        Ok(())
    })
}

/// Bound of the inverse rate on `[gamma_min, gamma_max]` (linear SINR) with
/// maximum error `epsilon`.
///
/// # Safety
/// `out_pwl` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hn_pwl_build(gamma_min: f64, gamma_max: f64, epsilon: f64, out_pwl: *mut *mut HnPwl) -> HnStatus {
    guard(|| {
        let slot = out(out_pwl, "out_pwl")?;
        *slot = boxed(HnPwl(build_bound(gamma_min, gamma_max, epsilon).map_err(from_error)?));
        Ok(())
    })
}

/// Bound value at `gamma`; NaN for a null handle.
///
/// # Safety
/// `pwl` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hn_pwl_eval(pwl: *const HnPwl, gamma: f64) -> f64 {
    pwl.as_ref().map_or(f64::NAN, |p| p.0.eval(gamma))
}

/// Number of linear pieces; 0 for a null handle.
///
/// # Safety
/// `pwl` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hn_pwl_pieces(pwl: *const HnPwl) -> usize {
    pwl.as_ref().map_or(0, |p| p.0.len())
}

/// # Safety
/// `pwl` must come from [`hn_pwl_build`] or be null.
#[no_mangle]
pub unsafe extern "C" fn hn_pwl_free(pwl: *mut HnPwl) {
    free(pwl)
}

/// Write the instance's MILP in fixed MPS format to `path`. Shortened names
/// are listed in `path` with the extension replaced by `.names`.
///
/// # Safety
/// `config` and `instance` must be live handles and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hn_export_mps(config: *const HnConfig, instance: *const HnInstance, path: *const c_char) -> HnStatus {
    guard(|| {
        let config = &arg(config, "config")?.0;
        let inst = arg(instance, "instance")?;
        let path = Path::new(string(path, "path")?);
        let pwl = config.pwl_bound().map_err(from_error)?;
        let (model, _) = config.milp_model(&inst.scenario, &inst.gains, &pwl).map_err(from_error)?;
        let export = export_mps(&model).map_err(from_error)?;
        let write = |p: &Path, text: &str| {
            std::fs::write(p, text).map_err(|e| fail(HnStatus::Io, format!("{}: {e}", p.display())))
        };
        write(path, &export.text)?;
        if !export.name_map.is_empty() {
            write(&path.with_extension("names"), &export.name_map_text())?;
        }
        Ok(())
    })
}
