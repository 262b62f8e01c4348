//! C interface to locreg.
//!
//! Every function returns a [`LocregStatus`]. On failure the message is kept
//! per thread and can be copied out with [`locreg_last_error`]. Handles are
//! opaque; each `*_new`/`*_parse` has a matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use locreg::config::{parse_config, validate_config, ExperimentConfig};
use locreg::experiment::run_experiment;
use locreg::ibm::{DiscreteStepper, PointPopulation};
use locreg::model::DemographyModel;
use locreg::rng::{stream, SimRng};
use locreg::stability::HomogeneousEquilibrium;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocregStatus {
    Ok = 0,
    NullPointer = 1,
    /// The configuration is malformed or fails validation.
    Config = 2,
    /// A simulation or numerical routine failed.
    Runtime = 3,
    InvalidUtf8 = 4,
    /// The output buffer is too small; nothing was written.
    BufferTooSmall = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: LocregStatus, msg: impl Into<String>) -> LocregStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> LocregStatus) -> LocregStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(LocregStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, LocregStatus> {
    if p.is_null() {
        return Err(fail(LocregStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(LocregStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Copies `s` plus a terminating NUL into `buf`. `needed` receives the full
/// size including the NUL, also when the buffer is too small.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> LocregStatus {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || len < n {
        return LocregStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    LocregStatus::Ok
}

/// Copies the calling thread's last error message into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null; `needed` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn locreg_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> LocregStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    copy_out(&msg, buf, len, needed)
}

/// Parsed experiment configuration.
pub struct LocregConfig {
    inner: ExperimentConfig,
}

/// Parses a JSON configuration (or run manifest).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locreg_config_parse(json: *const c_char, out: *mut *mut LocregConfig) -> LocregStatus {
    guard(|| {
        if out.is_null() {
            return fail(LocregStatus::NullPointer, "null output handle");
        }
        let text = match str_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(LocregConfig { inner }));
                LocregStatus::Ok
            }
            Err(e) => fail(LocregStatus::Config, e.to_string()),
        }
    })
}

/// # Safety
/// `cfg` must come from [`locreg_config_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn locreg_config_free(cfg: *mut LocregConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Writes the validation report as JSON. Returns [`LocregStatus::Config`]
/// (with the report still written) when there are hard errors.
///
/// # Safety
/// Pointers as for [`locreg_last_error`]; `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locreg_config_validate(cfg: *const LocregConfig, buf: *mut c_char, len: usize, needed: *mut usize) -> LocregStatus {
    guard(|| {
        let Some(cfg) = cfg.as_ref() else {
            return fail(LocregStatus::NullPointer, "null config");
        };
        let report = validate_config(&cfg.inner);
        let text = serde_json::to_string(&report).expect("serializable");
        match copy_out(&text, buf, len, needed) {
            LocregStatus::Ok if !report.ok() => fail(LocregStatus::Config, report.errors.join("; ")),
            s => s,
        }
    })
}

/// Runs the experiment, optionally redirecting output to `out_dir` and
/// overriding the seed when `seed_override` is non-null.
///
/// # Safety
/// `cfg` must be a live handle; `out_dir` null or NUL-terminated;
/// `seed_override` null or valid.
#[no_mangle]
pub unsafe extern "C" fn locreg_run(cfg: *const LocregConfig, out_dir: *const c_char, seed_override: *const u64) -> LocregStatus {
    guard(|| {
        let Some(cfg) = cfg.as_ref() else {
            return fail(LocregStatus::NullPointer, "null config");
        };
        let mut c = cfg.inner.clone();
        if !out_dir.is_null() {
            match str_arg(out_dir) {
                Ok(d) => c.out = Some(PathBuf::from(d)),
                Err(s) => return s,
            }
        }
        if let Some(s) = seed_override.as_ref() {
            c.seed = Some(*s);
        }
        match run_experiment(&c) {
            Ok(_) => LocregStatus::Ok,
            Err(e) if e.exit_code() == 2 => fail(LocregStatus::Config, e.to_string()),
            Err(e) => fail(LocregStatus::Runtime, e.to_string()),
        }
    })
}

/// Growth rate of the mode with frequency `u` about the homogeneous
/// equilibrium of the configured one-dimensional model.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locreg_growth_rate(cfg: *const LocregConfig, u: f64, out: *mut f64) -> LocregStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(LocregStatus::NullPointer, "null argument");
        };
        let model = match cfg.inner.resolve().and_then(|c| c.model()) {
            Ok(m) => m,
            Err(e) => return fail(LocregStatus::Config, e.to_string()),
        };
        let bracket = cfg.inner.stability.as_ref().map_or((1e-9, 1e3), |s| s.bracket);
        match HomogeneousEquilibrium::from_model(&model, bracket) {
            Ok(eq) => {
                *out = eq.growth_rate(u);
                LocregStatus::Ok
            }
            Err(e) => fail(LocregStatus::Runtime, e.to_string()),
        }
    })
}

/// A steppable individual-based simulation.
pub struct LocregSimulation {
    model: DemographyModel,
    pop: PointPopulation,
    stepper: DiscreteStepper,
    rng: SimRng,
}

/// Creates a simulation of the configured model from `count` atoms placed
/// uniformly over the domain.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locreg_simulation_new(cfg: *const LocregConfig, count: usize, seed: u64, out: *mut *mut LocregSimulation) -> LocregStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(LocregStatus::NullPointer, "null argument");
        };
        let resolved = match cfg.inner.resolve() {
            Ok(c) => c,
            Err(e) => return fail(LocregStatus::Config, e.to_string()),
        };
        let model = match resolved.model() {
            Ok(m) => m,
            Err(e) => return fail(LocregStatus::Config, e.to_string()),
        };
        let mut rng = stream(seed, 0);
        let d = &model.domain;
        let dim = d.dim();
        let positions: Vec<f64> = (0..count * dim)
            .map(|i| {
                let k = i % dim;
                d.lo[k] + rand::Rng::random::<f64>(&mut rng) * (d.hi[k] - d.lo[k])
            })
            .collect();
        let pop = match PointPopulation::new(dim, positions, resolved.n.unwrap_or(100.0)) {
            Ok(p) => p,
            Err(e) => return fail(LocregStatus::Runtime, e.to_string()),
        };
        let stepper = DiscreteStepper::new(&model);
        *out = Box::into_raw(Box::new(LocregSimulation { model, pop, stepper, rng }));
        LocregStatus::Ok
    })
}

/// # Safety
/// `sim` must come from [`locreg_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn locreg_simulation_free(sim: *mut LocregSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances by `steps` discrete steps of length `dt`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locreg_simulation_step(sim: *mut LocregSimulation, dt: f64, steps: usize) -> LocregStatus {
    guard(|| {
        let Some(s) = sim.as_mut() else {
            return fail(LocregStatus::NullPointer, "null simulation");
        };
        for _ in 0..steps {
            if s.pop.is_empty() {
                break;
            }
            if let Err(e) = s.stepper.step(&s.model, &mut s.pop, dt, &mut s.rng) {
                return fail(LocregStatus::Runtime, e.to_string());
            }
        }
        LocregStatus::Ok
    })
}

/// Current time, atom count and total mass (any output may be null).
///
/// # Safety
/// `sim` must be a live handle; outputs null or valid.
#[no_mangle]
pub unsafe extern "C" fn locreg_simulation_state(sim: *const LocregSimulation, time: *mut f64, count: *mut usize, mass: *mut f64) -> LocregStatus {
    let Some(s) = sim.as_ref() else {
        return fail(LocregStatus::NullPointer, "null simulation");
    };
    if !time.is_null() {
        *time = s.pop.time;
    }
    if !count.is_null() {
        *count = s.pop.len();
    }
    if !mass.is_null() {
        *mass = s.pop.total_mass();
    }
    LocregStatus::Ok
}

/// Copies atom coordinates (row-major, `count × dim`) into `buf`.
/// `needed` receives the number of doubles required.
///
/// # Safety
/// `sim` must be a live handle; `buf` valid for `len` doubles or null.
#[no_mangle]
pub unsafe extern "C" fn locreg_simulation_positions(sim: *const LocregSimulation, buf: *mut f64, len: usize, needed: *mut usize) -> LocregStatus {
    let Some(s) = sim.as_ref() else {
        return fail(LocregStatus::NullPointer, "null simulation");
    };
    let n = s.pop.positions.len();
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || len < n {
        return LocregStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(s.pop.positions.as_ptr(), buf, n);
    LocregStatus::Ok
}
