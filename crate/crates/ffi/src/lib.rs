//! C ABI over `hammer-core`.
//!
//! Every object is an opaque heap handle created by a `*_new` function and
//! released by the matching `*_free`. Fallible functions return a
//! [`HammerStatus`]; on failure a description is kept per thread and can be
//! copied out with [`hammer_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::SeedableRng;

use hammer_core::env::{NavWorld, PhysicsParams};
use hammer_core::exp::rng::RunRng;
use hammer_core::exp::ExperimentConfig;
use hammer_core::hammer::Session;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HammerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Env = 4,
    Training = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

pub struct HammerConfig(ExperimentConfig);

pub struct HammerWorld {
    world: NavWorld,
    rng: RunRng,
}

pub struct HammerSession(Session);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: HammerStatus, msg: impl Into<String>) -> HammerStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> HammerStatus) -> HammerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(HammerStatus::Panic, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, HammerStatus> {
    if p.is_null() {
        return Err(fail(HammerStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(HammerStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies `s` plus a NUL into `buf`. `*needed` receives the full size
/// including the NUL, so callers can retry with a larger buffer.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> HammerStatus {
    if !needed.is_null() {
        *needed = s.len() + 1;
    }
    if buf.is_null() || len < s.len() + 1 {
        return fail(HammerStatus::BufferTooSmall, format!("need {} bytes", s.len() + 1));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    HammerStatus::Ok
}

macro_rules! handle {
    ($p:expr) => {{
        if $p.is_null() {
            return fail(HammerStatus::NullPointer, concat!(stringify!($p), " is null"));
        }
        &mut *$p
    }};
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn hammer_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` bytes or null; `needed` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn hammer_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> HammerStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    copy_out(&msg, buf, len, needed)
}

/// Creates a config holding the defaults.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hammer_config_new(out: *mut *mut HammerConfig) -> HammerStatus {
    if out.is_null() {
        return fail(HammerStatus::NullPointer, "out is null");
    }
    *out = Box::into_raw(Box::new(HammerConfig(ExperimentConfig::default())));
    HammerStatus::Ok
}

/// Parses a `key = value` config text on top of the defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hammer_config_from_text(text: *const c_char, out: *mut *mut HammerConfig) -> HammerStatus {
    guard(|| {
        if out.is_null() {
            return fail(HammerStatus::NullPointer, "out is null");
        }
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ExperimentConfig::from_text(text) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(HammerConfig(c)));
                HammerStatus::Ok
            }
            Err(e) => fail(HammerStatus::Config, e.to_string()),
        }
    })
}

/// Sets one config key, e.g. `"mode"` / `"independent"` or `"local.lr"` / `"0.001"`.
///
/// # Safety
/// `config` must come from this library; `key` and `value` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hammer_config_set(
    config: *mut HammerConfig,
    key: *const c_char,
    value: *const c_char,
) -> HammerStatus {
    let config = handle!(config);
    let (key, value) = match (str_arg(key, "key"), str_arg(value, "value")) {
        (Ok(k), Ok(v)) => (k, v),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    match config.0.set(key, value) {
        Ok(()) => HammerStatus::Ok,
        Err(e) => fail(HammerStatus::Config, e.to_string()),
    }
}

/// Serializes the config; see [`hammer_last_error`] for the buffer protocol.
///
/// # Safety
/// `config` must come from this library; `buf`/`needed` as for [`hammer_last_error`].
#[no_mangle]
pub unsafe extern "C" fn hammer_config_to_text(
    config: *const HammerConfig,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> HammerStatus {
    if config.is_null() {
        return fail(HammerStatus::NullPointer, "config is null");
    }
    copy_out(&(*config).0.to_text(), buf, len, needed)
}

/// # Safety
/// `config` must come from [`hammer_config_new`] or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hammer_config_free(config: *mut HammerConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Creates a navigation world with `n_agents` agents and landmarks, reset
/// from `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hammer_world_new(n_agents: usize, seed: u64, out: *mut *mut HammerWorld) -> HammerStatus {
    if out.is_null() {
        return fail(HammerStatus::NullPointer, "out is null");
    }
    match NavWorld::new(n_agents, PhysicsParams::default()) {
        Ok(mut world) => {
            let mut rng = RunRng::seed_from_u64(seed);
            world.reset(&mut rng);
            *out = Box::into_raw(Box::new(HammerWorld { world, rng }));
            HammerStatus::Ok
        }
        Err(e) => fail(HammerStatus::Env, e.to_string()),
    }
}

/// Starts a new episode.
///
/// # Safety
/// `world` must come from [`hammer_world_new`].
#[no_mangle]
pub unsafe extern "C" fn hammer_world_reset(world: *mut HammerWorld) -> HammerStatus {
    let w = handle!(world);
    w.world.reset(&mut w.rng);
    HammerStatus::Ok
}

/// Length of one agent's observation, or 0 for a null handle.
///
/// # Safety
/// `world` must come from [`hammer_world_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn hammer_world_obs_dim(world: *const HammerWorld) -> usize {
    if world.is_null() {
        return 0;
    }
    (*world).world.obs_dim()
}

/// Writes all observations, agent after agent, into `out` (length
/// `n_agents * obs_dim`).
///
/// # Safety
/// `world` must come from [`hammer_world_new`]; `out` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hammer_world_observations(world: *const HammerWorld, out: *mut f64, len: usize) -> HammerStatus {
    if world.is_null() || out.is_null() {
        return fail(HammerStatus::NullPointer, "world or out is null");
    }
    let obs: Vec<f64> = (*world).world.observations().concat();
    if len < obs.len() {
        return fail(HammerStatus::BufferTooSmall, format!("need {} values", obs.len()));
    }
    std::ptr::copy_nonoverlapping(obs.as_ptr(), out, obs.len());
    HammerStatus::Ok
}

/// Applies one discrete action per agent (0 stay, 1 +x, 2 -x, 3 +y, 4 -y),
/// writing per-agent rewards and the episode-end flag.
///
/// # Safety
/// `actions` must hold `n` values and `rewards` must be writable for `n`
/// doubles; `done` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hammer_world_step(
    world: *mut HammerWorld,
    actions: *const u32,
    n: usize,
    rewards: *mut f64,
    done: *mut bool,
) -> HammerStatus {
    let w = handle!(world);
    if actions.is_null() || rewards.is_null() {
        return fail(HammerStatus::NullPointer, "actions or rewards is null");
    }
    let acts: Vec<usize> = std::slice::from_raw_parts(actions, n).iter().map(|&a| a as usize).collect();
    match w.world.step(&acts) {
        Ok(r) => {
            std::ptr::copy_nonoverlapping(r.rewards.as_ptr(), rewards, n);
            if !done.is_null() {
                *done = r.done;
            }
            HammerStatus::Ok
        }
        Err(e) => fail(HammerStatus::Env, e.to_string()),
    }
}

/// Team reward of the current state.
///
/// # Safety
/// `world` must come from [`hammer_world_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hammer_world_team_reward(world: *const HammerWorld, out: *mut f64) -> HammerStatus {
    if world.is_null() || out.is_null() {
        return fail(HammerStatus::NullPointer, "world or out is null");
    }
    *out = (*world).world.team_reward();
    HammerStatus::Ok
}

/// # Safety
/// `world` must come from [`hammer_world_new`] or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hammer_world_free(world: *mut HammerWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Creates a training session from a validated copy of `config`.
///
/// # Safety
/// `config` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hammer_session_new(config: *const HammerConfig, out: *mut *mut HammerSession) -> HammerStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(HammerStatus::NullPointer, "config or out is null");
        }
        match Session::new((*config).0.clone()) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(HammerSession(s)));
                HammerStatus::Ok
            }
            Err(e) => fail(HammerStatus::Config, e.to_string()),
        }
    })
}

/// Runs one training episode; `mean_reward` receives the mean reward per agent.
///
/// # Safety
/// `session` must come from [`hammer_session_new`]; `mean_reward` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hammer_session_run_episode(session: *mut HammerSession, mean_reward: *mut f64) -> HammerStatus {
    let s = handle!(session);
    guard(|| match s.0.run_episode() {
        Ok(summary) => {
            if !mean_reward.is_null() {
                *mean_reward = summary.mean_reward_per_agent;
            }
            HammerStatus::Ok
        }
        Err(e) => fail(HammerStatus::Training, e.to_string()),
    })
}

/// # Safety
/// `session` must come from [`hammer_session_new`] or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hammer_session_free(session: *mut HammerSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
