//! C interface to the solver, the estimators and the noise formulas.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `_free` function. Every fallible call returns an
//! [`SnStatus`]; the message of the last failure on the calling thread is
//! available from [`sn_last_error`]. Rust panics never unwind into C; they
//! surface as `SN_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stressnav::estimators::{full_estimate, EstimatorSettings, ModelSet};
use stressnav::noise::{snr_array, snr_single, SensorDesign};
use stressnav::scenario::Scenario;
use stressnav::solver::{solve_flow, surface_traction, Discretization, FlowSolution, SensorArray, StressReading};
use stressnav::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ConfigError = 4,
    InvalidGeometry = 5,
    GeometryViolation = 6,
    NumericalFailure = 7,
    ModelIncompatible = 8,
    Panic = 9,
}

impl From<&Error> for SnStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Json(_) => SnStatus::ParseError,
            Error::Config(_) | Error::Io(_) => SnStatus::ConfigError,
            Error::InvalidGeometry(_) => SnStatus::InvalidGeometry,
            Error::GeometryViolation(_) => SnStatus::GeometryViolation,
            Error::ModelIncompatible(_) => SnStatus::ModelIncompatible,
            _ => SnStatus::NumericalFailure,
        }
    }
}

/// Opaque scenario handle.
pub struct SnScenario(Scenario);

/// Opaque handle to a solved flow.
pub struct SnSolution {
    solution: FlowSolution,
    scenario: Scenario,
}

/// Opaque handle to a set of estimator models.
pub struct SnModels(ModelSet);

/// Rigid motion of the robot: µm/s and rad/s (counterclockwise positive).
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SnMotion {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

/// Estimates from a reading pair. Quantities that could not be estimated
/// are NaN; `flags` counts the diagnostics raised.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnEstimate {
    pub wall_direction: f64,
    pub motion_direction: f64,
    pub relpos: f64,
    pub diameter: f64,
    pub wall_distance: f64,
    pub angular_velocity: f64,
    pub speed_ratio: f64,
    pub speed: f64,
    pub correlation: f64,
    pub in_range: bool,
    pub flags: u32,
}

/// Sensor design for the noise formulas, SI units.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnSensorDesign {
    pub size: f64,
    pub time: f64,
    pub damping: f64,
    pub coverage: f64,
    pub count: u32,
    pub stress: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn guard(f: impl FnOnce() -> Result<(), (SnStatus, String)>) -> SnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SnStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SnStatus::Panic
        }
    }
}

fn fail(e: Error) -> (SnStatus, String) {
    (SnStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (SnStatus, String) {
    (SnStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, (SnStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| (SnStatus::InvalidArgument, format!("{what} is not UTF-8: {e}")))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], (SnStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn boxed<T>(out: *mut *mut T, value: T) {
    // callers check `out` before building the value
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Copies the last error message on this thread into `buf` (NUL
/// terminated, truncated to fit) and returns the full message length.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null with `len` 0.
#[no_mangle]
pub unsafe extern "C" fn sn_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a scenario from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_scenario_from_json(json: *const c_char, out: *mut *mut SnScenario) -> SnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = Scenario::from_json(text(json, "json")?).map_err(fail)?;
        s.validate().map_err(fail)?;
        boxed(out, SnScenario(s));
        Ok(())
    })
}

/// The bundled example scenario.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_scenario_table2(out: *mut *mut SnScenario) -> SnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        boxed(out, SnScenario(Scenario::table2()));
        Ok(())
    })
}

/// Moves the robot center and orientation (µm, rad).
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_scenario_set_pose(scenario: *mut SnScenario, x: f64, y: f64, psi: f64) -> SnStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        let mut next = s.0.clone();
        next.pose.x = x;
        next.pose.y = y;
        next.pose.psi = psi;
        next.validate().map_err(fail)?;
        s.0 = next;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_scenario_free(scenario: *mut SnScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Solves the flow at the default discretization.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_solve(scenario: *const SnScenario, out: *mut *mut SnSolution) -> SnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let solution = solve_flow(&s.0, &Discretization::default()).map_err(fail)?;
        boxed(out, SnSolution { solution, scenario: s.0.clone() });
        Ok(())
    })
}

/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_motion(solution: *const SnSolution, out: *mut SnMotion) -> SnStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = s.solution.motion;
        *out = SnMotion { vx: m.vx, vy: m.vy, omega: m.omega };
        Ok(())
    })
}

/// Samples `n` evenly spaced sensors (Pa). Normal components are
/// gauge-normalized to sum to zero.
///
/// # Safety
/// `normal` and `tangential` must each point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_reading(
    solution: *const SnSolution,
    n: usize,
    normal: *mut f64,
    tangential: *mut f64,
) -> SnStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if normal.is_null() || tangential.is_null() {
            return Err(null("output buffer"));
        }
        let sensors = SensorArray::new(n).map_err(fail)?;
        let r = surface_traction(&s.solution, &sensors, &s.scenario.pose);
        ptr::copy_nonoverlapping(r.normal.as_ptr(), normal, n);
        ptr::copy_nonoverlapping(r.tangential.as_ptr(), tangential, n);
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_free(solution: *mut SnSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// The bundled reference models.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_models_reference(out: *mut *mut SnModels) -> SnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        boxed(out, SnModels(ModelSet::reference()));
        Ok(())
    })
}

/// Loads models written by the training pipeline.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_models_from_json(json: *const c_char, out: *mut *mut SnModels) -> SnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = ModelSet::from_json(text(json, "json")?).map_err(fail)?;
        boxed(out, SnModels(m));
        Ok(())
    })
}

/// # Safety
/// `models` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_models_free(models: *mut SnModels) {
    if !models.is_null() {
        drop(Box::from_raw(models));
    }
}

/// Runs every estimator on two readings of `n` sensors taken `dt` seconds
/// apart by a circular robot of radius `radius` (µm). Geometry refers to
/// the first reading.
///
/// # Safety
/// The four arrays must each hold `n` doubles; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sn_estimate(
    models: *const SnModels,
    n: usize,
    normal_a: *const f64,
    tangential_a: *const f64,
    normal_b: *const f64,
    tangential_b: *const f64,
    dt: f64,
    radius: f64,
    out: *mut SnEstimate,
) -> SnStatus {
    guard(|| {
        let m = models.as_ref().ok_or_else(|| null("models"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if radius.is_nan() || radius <= 0.0 {
            return Err((SnStatus::InvalidArgument, format!("radius must be positive, got {radius}")));
        }
        let reading = |nn, tt| -> Result<StressReading, (SnStatus, String)> {
            StressReading::from_raw(0.0, slice(nn, n, "normal")?.to_vec(), slice(tt, n, "tangential")?.to_vec()).map_err(fail)
        };
        let a = reading(normal_a, tangential_a)?;
        let b = reading(normal_b, tangential_b)?;
        let shape = stressnav::scenario::RobotShape::Circle { r: radius };
        let rep = full_estimate(&a, &b, dt, &m.0, &shape, &EstimatorSettings::default());
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *out = SnEstimate {
            wall_direction: v(rep.wall_direction),
            motion_direction: v(rep.motion_direction),
            relpos: v(rep.relpos),
            diameter: v(rep.diameter),
            wall_distance: v(rep.wall_distance),
            angular_velocity: v(rep.angular_velocity),
            speed_ratio: v(rep.speed_ratio),
            speed: v(rep.speed),
            correlation: v(rep.correlation),
            in_range: rep.in_range,
            flags: rep.flags.len() as u32,
        };
        Ok(())
    })
}

fn design(d: &SnSensorDesign) -> Result<SensorDesign, (SnStatus, String)> {
    let design = SensorDesign {
        size: d.size,
        time: d.time,
        damping: d.damping,
        coverage: d.coverage,
        count: d.count as usize,
        stress: d.stress,
    };
    design.validate().map_err(fail)?;
    Ok(design)
}

/// Single-sensor SNR at temperature `temperature` (K) and viscosity
/// `viscosity` (Pa·s).
///
/// # Safety
/// `d` must point to a design; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_snr_single(d: *const SnSensorDesign, temperature: f64, viscosity: f64, out: *mut f64) -> SnStatus {
    guard(|| {
        let d = design(d.as_ref().ok_or_else(|| null("design"))?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = snr_single(&d, temperature, viscosity);
        Ok(())
    })
}

/// SNR of the sensor-array Fourier combinations for a robot of radius
/// `radius` (m).
///
/// # Safety
/// `d` must point to a design; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_snr_array(
    d: *const SnSensorDesign,
    radius: f64,
    temperature: f64,
    viscosity: f64,
    out: *mut f64,
) -> SnStatus {
    guard(|| {
        let d = design(d.as_ref().ok_or_else(|| null("design"))?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = snr_array(&d, radius, temperature, viscosity);
        Ok(())
    })
}
