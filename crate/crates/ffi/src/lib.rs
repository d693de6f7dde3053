//! C ABI over the `paug` library.
//!
//! Every fallible function returns a [`PaugStatus`]; on anything other than
//! `PAUG_STATUS_OK` a message is kept per thread and can be read with
//! [`paug_last_error`]. Objects are opaque handles created by a `*_new` or
//! `*_run` function and released with the matching `*_free`. Matrices are
//! passed as row-major `double` buffers.
//!
//! The generated header is `include/paug.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use paug::envs::{Env, EnvConfig, EnvId};
use paug::harness::{self, ExperimentConfig, ExperimentResult, Summary};
use paug::imc::{self, FactorPair, Features, ImcConfig, ObservedMatrix};
use nalgebra::DMatrix;
use paug::{Error, Rng};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaugStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    EpisodeFinished = 4,
    /// The solver produced NaN or infinity.
    Numerical = 5,
    /// An observed set or other required input was empty.
    Empty = 6,
    Io = 7,
    /// The caller's output buffer is too short.
    BufferTooSmall = 8,
    /// A Rust panic was caught at the boundary; this is a bug.
    Internal = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: PaugStatus, msg: impl Into<String>) -> PaugStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn status_of(err: &Error) -> PaugStatus {
    match err {
        Error::DimensionMismatch(_) | Error::Ragged { .. } => PaugStatus::DimensionMismatch,
        Error::EpisodeFinished => PaugStatus::EpisodeFinished,
        Error::NonFinite { .. } | Error::Divergence { .. } => PaugStatus::Numerical,
        Error::Empty(_) => PaugStatus::Empty,
        Error::Io(_) | Error::Plot(_) => PaugStatus::Io,
        _ => PaugStatus::InvalidArgument,
    }
}

/// Run `f`, converting errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<(), PaugStatus>) -> PaugStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            PaugStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(PaugStatus::Internal, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, PaugStatus>;
}

impl<T> OrStatus<T> for paug::Result<T> {
    fn or_status(self) -> Result<T, PaugStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), PaugStatus> {
    if p.is_null() {
        Err(fail(PaugStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PaugStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PaugStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize, what: &str) -> Result<&'a mut [f64], PaugStatus> {
    non_null(p, what)?;
    if len < needed {
        return Err(fail(PaugStatus::BufferTooSmall, format!("{what} holds {len}, needs {needed}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn row_major(p: *const f64, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, PaugStatus> {
    non_null(p, what)?;
    Ok(DMatrix::from_row_slice(rows, cols, std::slice::from_raw_parts(p, rows * cols)))
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// so a caller can retry with a larger buffer. `buf` may be null to query.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn paug_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

// ---------------------------------------------------------------- environments

/// An environment instance.
pub struct PaugEnv(Env);

/// Create `name` (`"mountaincar"` or `"cartpole"`) seeded with `seed`.
/// The episode must be started with [`paug_env_reset`].
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn paug_env_new(name: *const c_char, seed: u64, out: *mut *mut PaugEnv) -> PaugStatus {
    guarded(|| {
        non_null(out, "out")?;
        let id: EnvId = c_str(name, "name")?.parse().or_status()?;
        let env = Env::new(EnvConfig::new(id, seed)).or_status()?;
        *out = Box::into_raw(Box::new(PaugEnv(env)));
        Ok(())
    })
}

/// Observation length; 0 for a null handle.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn paug_env_obs_dim(env: *const PaugEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.config().env.obs_dim())
}

/// Number of discrete actions; 0 for a null handle.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn paug_env_n_actions(env: *const PaugEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.config().env.n_actions())
}

/// Start a new episode and write the initial observation to `obs`.
///
/// # Safety
/// `env` must be a live handle and `obs` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn paug_env_reset(env: *mut PaugEnv, obs: *mut f64, len: usize) -> PaugStatus {
    guarded(|| {
        non_null(env, "env")?;
        let env = &mut (*env).0;
        let out = out_slice(obs, len, env.config().env.obs_dim(), "obs")?;
        out.copy_from_slice(&env.reset().observation);
        Ok(())
    })
}

/// Apply `action`. Writes the next observation, the reward, whether the
/// episode ended and whether the MountainCar flag was reached. Any of
/// `reward`, `done` and `reached_goal` may be null.
///
/// # Safety
/// `env` must be a live handle, `obs` must hold `len` doubles and the other
/// pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn paug_env_step(
    env: *mut PaugEnv,
    action: usize,
    obs: *mut f64,
    len: usize,
    reward: *mut f64,
    done: *mut bool,
    reached_goal: *mut bool,
) -> PaugStatus {
    guarded(|| {
        non_null(env, "env")?;
        let env = &mut (*env).0;
        let out = out_slice(obs, len, env.config().env.obs_dim(), "obs")?;
        let t = env.step(action).or_status()?;
        out.copy_from_slice(&t.next_state.observation);
        if let Some(r) = reward.as_mut() {
            *r = t.reward;
        }
        if let Some(d) = done.as_mut() {
            *d = t.done;
        }
        if let Some(g) = reached_goal.as_mut() {
            *g = t.reached_goal;
        }
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn paug_env_free(env: *mut PaugEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

// ---------------------------------------------------------------- solver

/// Solver settings. Start from [`paug_imc_default_options`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PaugImcOptions {
    pub lambda_u: f64,
    pub lambda_v: f64,
    /// 0 picks `min(m, n)`.
    pub rank: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub denominator_guard: f64,
}

impl From<PaugImcOptions> for ImcConfig {
    fn from(o: PaugImcOptions) -> Self {
        ImcConfig {
            lambda_u: o.lambda_u,
            lambda_v: o.lambda_v,
            rank: (o.rank > 0).then_some(o.rank),
            max_iterations: o.max_iterations,
            tolerance: o.tolerance,
            denominator_guard: o.denominator_guard,
        }
    }
}

#[no_mangle]
pub extern "C" fn paug_imc_default_options() -> PaugImcOptions {
    let d = ImcConfig::default();
    PaugImcOptions {
        lambda_u: d.lambda_u,
        lambda_v: d.lambda_v,
        rank: d.rank.unwrap_or(0),
        max_iterations: d.max_iterations,
        tolerance: d.tolerance,
        denominator_guard: d.denominator_guard,
    }
}

/// A solver that keeps its factors between calls, so repeated solves on a
/// growing observed set warm-start from the previous answer.
pub struct PaugImcSolver {
    config: ImcConfig,
    rng: Rng,
    factors: Option<FactorPair>,
}

/// Summary of one solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PaugImcReport {
    pub iterations: usize,
    pub initial_cost: f64,
    pub cost: f64,
    pub converged: bool,
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn paug_imc_solver_new(
    options: PaugImcOptions,
    seed: u64,
    out: *mut *mut PaugImcSolver,
) -> PaugStatus {
    guarded(|| {
        non_null(out, "out")?;
        let config = ImcConfig::from(options);
        config.validate().or_status()?;
        let solver = PaugImcSolver { config, rng: paug::seeded_rng(seed, 0), factors: None };
        *out = Box::into_raw(Box::new(solver));
        Ok(())
    })
}

/// Complete the `rows × cols` matrix `q` observed where `mask` is non-zero,
/// with state features `x` (`rows × m`) and action features `y`
/// (`cols × n`). The completed matrix goes to `q_hat` (`rows × cols`).
/// Factors from the previous call are reused when their shape matches.
///
/// # Safety
/// `solver` must be a live handle; every buffer must hold the stated number
/// of elements; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn paug_imc_solve(
    solver: *mut PaugImcSolver,
    q: *const f64,
    mask: *const u8,
    rows: usize,
    cols: usize,
    x: *const f64,
    m: usize,
    y: *const f64,
    n: usize,
    q_hat: *mut f64,
    q_hat_len: usize,
    report: *mut PaugImcReport,
) -> PaugStatus {
    guarded(|| {
        non_null(solver, "solver")?;
        non_null(mask, "mask")?;
        let solver = &mut *solver;
        let values = row_major(q, rows, cols, "q")?;
        let mask = std::slice::from_raw_parts(mask, rows * cols);
        let mask = DMatrix::from_row_iterator(rows, cols, mask.iter().map(|&b| b != 0));
        let x = row_major(x, rows, m, "x")?;
        let y = row_major(y, cols, n, "y")?;
        let out = out_slice(q_hat, q_hat_len, rows * cols, "q_hat")?;
        let obs = ObservedMatrix::new(values, mask).or_status()?;
        let rank = solver.config.resolved_rank(m, n);
        let previous = solver.factors.as_ref().filter(|f| f.u.shape() == (m, rank) && f.v.shape() == (n, rank));
        let sol = imc::solve(&obs, Features { x: &x, y: &y }, previous, &solver.config, &mut solver.rng).or_status()?;
        for (k, v) in out.iter_mut().enumerate() {
            *v = sol.augmented.q_hat[(k / cols, k % cols)];
        }
        if let Some(r) = report.as_mut() {
            *r = PaugImcReport {
                iterations: sol.augmented.iterations,
                initial_cost: sol.initial_cost,
                cost: sol.augmented.cost,
                converged: sol.augmented.converged,
            };
        }
        solver.factors = Some(sol.factors);
        Ok(())
    })
}

/// Forget the stored factors; the next solve starts from random ones.
///
/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn paug_imc_solver_reset(solver: *mut PaugImcSolver) {
    if let Some(s) = solver.as_mut() {
        s.factors = None;
    }
}

/// # Safety
/// `solver` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn paug_imc_solver_free(solver: *mut PaugImcSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

// ---------------------------------------------------------------- experiments

/// Finished experiment and its per-episode summary.
pub struct PaugExperiment {
    result: ExperimentResult,
    summary: Summary,
}

/// Run an experiment described by `key = value` lines, the same format the
/// command line's `--config` accepts. Outputs are written only if the text
/// sets `out`.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn paug_experiment_run(config: *const c_char, out: *mut *mut PaugExperiment) -> PaugStatus {
    guarded(|| {
        non_null(out, "out")?;
        let cfg = ExperimentConfig::from_text(c_str(config, "config")?).or_status()?;
        let result = harness::run_experiment(&cfg).or_status()?;
        let summary = harness::summarize(&result.records).or_status()?;
        *out = Box::into_raw(Box::new(PaugExperiment { result, summary }));
        Ok(())
    })
}

/// Episodes per repetition; 0 for a null handle.
///
/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn paug_experiment_episodes(exp: *const PaugExperiment) -> usize {
    exp.as_ref().map_or(0, |e| e.summary.len())
}

/// Repetitions that completed; 0 for a null handle.
///
/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn paug_experiment_repetitions(exp: *const PaugExperiment) -> usize {
    exp.as_ref().map_or(0, |e| e.result.records.len())
}

/// Per-episode mean and standard deviation across repetitions. Either
/// output may be null.
///
/// # Safety
/// `exp` must be a live handle; non-null outputs must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn paug_experiment_summary(
    exp: *const PaugExperiment,
    mean: *mut f64,
    std: *mut f64,
    len: usize,
) -> PaugStatus {
    guarded(|| {
        non_null(exp, "experiment")?;
        let s = &(*exp).summary;
        if !mean.is_null() {
            out_slice(mean, len, s.len(), "mean")?.copy_from_slice(&s.mean);
        }
        if !std.is_null() {
            out_slice(std, len, s.len(), "std")?.copy_from_slice(&s.std);
        }
        Ok(())
    })
}

/// Episode returns of the `index`-th completed repetition.
///
/// # Safety
/// `exp` must be a live handle; `returns` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn paug_experiment_returns(
    exp: *const PaugExperiment,
    index: usize,
    returns: *mut f64,
    len: usize,
) -> PaugStatus {
    guarded(|| {
        non_null(exp, "experiment")?;
        let records = &(*exp).result.records;
        let r = records.get(index).ok_or_else(|| {
            fail(PaugStatus::InvalidArgument, format!("repetition {index} out of range (< {})", records.len()))
        })?;
        out_slice(returns, len, r.episode_returns.len(), "returns")?.copy_from_slice(&r.episode_returns);
        Ok(())
    })
}

/// # Safety
/// `exp` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn paug_experiment_free(exp: *mut PaugExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}
