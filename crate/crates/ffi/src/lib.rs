//! C ABI for the `hvac-rl` simulator and policies.
//!
//! Every fallible function returns an `HvacStatus`; on failure
//! `hvac_last_error()` describes the problem for the calling thread. Handles
//! are opaque and must be released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hvac_rl::baseline::{greedy_action, GreedyParams};
use hvac_rl::environment::{observe, Environment, FullState, FEATURE_DIM};
use hvac_rl::harness::{DayStreams, Policy, Settings};
use hvac_rl::neural::MlpParams;
use hvac_rl::occupant::{comfort_pmf, ComfortParams};
use hvac_rl::thermal::{self, build_matrices, CircuitParams, Disturbance, ThermalState};
use hvac_rl::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    NonFinite = 3,
    Shape = 4,
    Io = 5,
    Format = 6,
    Utf8 = 7,
    Panic = 8,
    Other = 9,
}

/// Simulation state after a reset or step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HvacState {
    pub t_air: f64,
    pub t_wall: f64,
    pub t_out: f64,
    pub q_solar: f64,
    /// Time-of-day index, 0..144.
    pub k: u32,
    pub occupied: u8,
    /// 0 cold, 1 hot, 2 comfortable.
    pub comfort: u8,
    /// The agent's observation features.
    pub features: [f64; 4],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HvacStep {
    /// Action after clamping to the power bound.
    pub action: f64,
    pub reward: f64,
    pub done: u8,
    pub state: HvacState,
}

/// Opaque simulator handle.
pub struct HvacEnv {
    env: Environment,
    streams: DayStreams,
    greedy: GreedyParams,
}

/// Opaque trained-actor handle.
pub struct HvacActor {
    policy: Policy,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> HvacStatus {
    match e {
        Error::InvalidParam { .. } | Error::OutOfRange(_) | Error::Config(_) => HvacStatus::InvalidParam,
        Error::NonFinite(_) => HvacStatus::NonFinite,
        Error::Shape(_) => HvacStatus::Shape,
        Error::Io { .. } => HvacStatus::Io,
        Error::Format(_) | Error::Json(_) | Error::Csv(_) => HvacStatus::Format,
        _ => HvacStatus::Other,
    }
}

/// Runs `f`, turning errors and panics into a status plus last-error text.
fn guard<F>(f: F) -> HvacStatus
where
    F: FnOnce() -> Result<(), (HvacStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            HvacStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            HvacStatus::Panic
        }
    }
}

fn lift(e: Error) -> (HvacStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HvacStatus, String) {
    (HvacStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, (HvacStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| (HvacStatus::Utf8, "path is not valid UTF-8".into()))
}

fn export_state(s: &FullState) -> HvacState {
    HvacState {
        t_air: s.thermal.t_air,
        t_wall: s.thermal.t_wall,
        t_out: s.t_out,
        q_solar: s.q_solar,
        k: s.k as u32,
        occupied: s.occupied as u8,
        comfort: s.comfort.label(),
        features: observe(s).features(),
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn hvac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a simulator. `config_path` may be null for the default
/// configuration, otherwise it names a TOML config file.
///
/// # Safety
/// `config_path` is null or a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hvac_env_new(config_path: *const c_char, out: *mut *mut HvacEnv) -> HvacStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let settings = if config_path.is_null() {
            Settings::default()
        } else {
            Settings::load(&path_arg(config_path)?).map_err(lift)?
        };
        let env = settings.environment().map_err(lift)?;
        let handle = HvacEnv { env, streams: DayStreams::new(settings.seed, 0), greedy: settings.greedy() };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `env` is null or a handle from `hvac_env_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hvac_env_free(env: *mut HvacEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Starts a new day. Day `day` under `seed` reproduces the harness's
/// evaluation day of the same index.
///
/// # Safety
/// `env` is a live handle; `state` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn hvac_env_reset(env: *mut HvacEnv, seed: u64, day: u64, state: *mut HvacState) -> HvacStatus {
    guard(|| {
        let h = env.as_mut().ok_or_else(|| null("env"))?;
        h.streams = DayStreams::new(seed, day);
        let (s, _) = h.env.reset(&mut h.streams.exo).map_err(lift)?;
        if let Some(out) = state.as_mut() {
            *out = export_state(&s);
        }
        Ok(())
    })
}

/// Applies heating (+) or cooling (-) power `u` in watts for one step.
///
/// # Safety
/// `env` is a live handle; `step` is writable.
#[no_mangle]
pub unsafe extern "C" fn hvac_env_step(env: *mut HvacEnv, u: f64, step: *mut HvacStep) -> HvacStatus {
    guard(|| {
        let h = env.as_mut().ok_or_else(|| null("env"))?;
        let out = step.as_mut().ok_or_else(|| null("step"))?;
        let s = h.env.step(u, &mut h.streams.comfort).map_err(lift)?;
        *out = HvacStep {
            action: s.action,
            reward: s.reward,
            done: s.done as u8,
            state: export_state(&s.state),
        };
        Ok(())
    })
}

/// Greedy baseline action for the current state, using the configured
/// greedy parameters.
///
/// # Safety
/// `env` is a live handle that has been reset; `action` is writable.
#[no_mangle]
pub unsafe extern "C" fn hvac_env_greedy_action(env: *const HvacEnv, action: *mut f64) -> HvacStatus {
    guard(|| {
        let h = env.as_ref().ok_or_else(|| null("env"))?;
        let out = action.as_mut().ok_or_else(|| null("action"))?;
        let s = h.env.state().map_err(lift)?;
        *out = greedy_action(&s.thermal, &s.disturbance(), s.occupied, h.env.matrices(), &h.greedy).map_err(lift)?;
        Ok(())
    })
}

/// Loads the actor from a training checkpoint.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hvac_actor_load(path: *const c_char, out: *mut *mut HvacActor) -> HvacStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let policy = Policy::from_checkpoint(&path_arg(path)?).map_err(lift)?;
        *out = Box::into_raw(Box::new(HvacActor { policy }));
        Ok(())
    })
}

/// # Safety
/// `actor` is null or a handle from `hvac_actor_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hvac_actor_free(actor: *mut HvacActor) {
    if !actor.is_null() {
        drop(Box::from_raw(actor));
    }
}

/// Deterministic action for the 4 observation features in `features`.
///
/// # Safety
/// `actor` is a live handle; `features` points to 4 doubles; `action` is writable.
#[no_mangle]
pub unsafe extern "C" fn hvac_actor_act(actor: *const HvacActor, features: *const f64, action: *mut f64) -> HvacStatus {
    guard(|| {
        let h = actor.as_ref().ok_or_else(|| null("actor"))?;
        if features.is_null() {
            return Err(null("features"));
        }
        let out = action.as_mut().ok_or_else(|| null("action"))?;
        let obs: [f64; FEATURE_DIM] = std::slice::from_raw_parts(features, FEATURE_DIM)
            .try_into()
            .expect("slice has FEATURE_DIM elements");
        let Policy::Ddpg { actor, u_max } = &h.policy else {
            unreachable!("actor handles only hold ddpg policies")
        };
        *out = act_on(actor, &obs, *u_max).map_err(lift)?;
        Ok(())
    })
}

fn act_on(actor: &MlpParams, obs: &[f64; FEATURE_DIM], u_max: f64) -> hvac_rl::Result<f64> {
    hvac_rl::error::ensure_finite("features", obs)?;
    hvac_rl::ddpg::act(actor, obs, None, u_max)
}

/// Probabilities of the cold, comfortable and hot votes at `t_air`, with the
/// default comfort parameters, written to `out[0..3]`.
///
/// # Safety
/// `out` points to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hvac_comfort_pmf(t_air: f64, out: *mut f64) -> HvacStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (c, m, h) = comfort_pmf(t_air, &ComfortParams::default()).map_err(lift)?;
        std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&[c, m, h]);
        Ok(())
    })
}

/// One explicit step of the default thermal circuit. `x` holds
/// (t_air, t_wall) and is updated in place.
///
/// # Safety
/// `x` points to 2 readable and writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hvac_thermal_step(x: *mut f64, u: f64, q_solar: f64, q_internal: f64, t_out: f64) -> HvacStatus {
    guard(|| {
        if x.is_null() {
            return Err(null("x"));
        }
        let x = std::slice::from_raw_parts_mut(x, 2);
        let m = build_matrices(&CircuitParams::default()).map_err(lift)?;
        let w = Disturbance { q_solar, q_internal, t_out };
        let next = thermal::step(&ThermalState::new(x[0], x[1]), u, &w, &m).map_err(lift)?;
        x[0] = next.t_air;
        x[1] = next.t_wall;
        Ok(())
    })
}
