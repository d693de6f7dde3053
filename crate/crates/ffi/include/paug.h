#ifndef PAUG_H
#define PAUG_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum PaugStatus {
  PAUG_STATUS_OK = 0,
  PAUG_STATUS_NULL_POINTER = 1,
  PAUG_STATUS_INVALID_ARGUMENT = 2,
  PAUG_STATUS_DIMENSION_MISMATCH = 3,
  PAUG_STATUS_EPISODE_FINISHED = 4,
  /*
   The solver produced NaN or infinity.
   */
  PAUG_STATUS_NUMERICAL = 5,
  /*
   An observed set or other required input was empty.
   */
  PAUG_STATUS_EMPTY = 6,
  PAUG_STATUS_IO = 7,
  /*
   The caller's output buffer is too short.
   */
  PAUG_STATUS_BUFFER_TOO_SMALL = 8,
  /*
   A Rust panic was caught at the boundary; this is a bug.
   */
  PAUG_STATUS_INTERNAL = 99,
} PaugStatus;

/*
 An environment instance.
 */
typedef struct PaugEnv PaugEnv;

/*
 Finished experiment and its per-episode summary.
 */
typedef struct PaugExperiment PaugExperiment;

/*
 A solver that keeps its factors between calls, so repeated solves on a
 growing observed set warm-start from the previous answer.
 */
typedef struct PaugImcSolver PaugImcSolver;

/*
 Solver settings. Start from [`paug_imc_default_options`].
 */
typedef struct PaugImcOptions {
  double lambda_u;
  double lambda_v;
  /*
   0 picks `min(m, n)`.
   */
  size_t rank;
  size_t max_iterations;
  double tolerance;
  double denominator_guard;
} PaugImcOptions;

/*
 Summary of one solve.
 */
typedef struct PaugImcReport {
  size_t iterations;
  double initial_cost;
  double cost;
  bool converged;
} PaugImcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copy the calling thread's last error message into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length excluding the NUL,
 so a caller can retry with a larger buffer. `buf` may be null to query.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t paug_last_error(char *buf, size_t len);

/*
 Create `name` (`"mountaincar"` or `"cartpole"`) seeded with `seed`.
 The episode must be started with [`paug_env_reset`].

 # Safety
 `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PaugStatus paug_env_new(const char *name, uint64_t seed, struct PaugEnv **out);

/*
 Observation length; 0 for a null handle.

 # Safety
 `env` must be null or a live handle.
 */
size_t paug_env_obs_dim(const struct PaugEnv *env);

/*
 Number of discrete actions; 0 for a null handle.

 # Safety
 `env` must be null or a live handle.
 */
size_t paug_env_n_actions(const struct PaugEnv *env);

/*
 Start a new episode and write the initial observation to `obs`.

 # Safety
 `env` must be a live handle and `obs` must hold `len` doubles.
 */
enum PaugStatus paug_env_reset(struct PaugEnv *env, double *obs, size_t len);

/*
 Apply `action`. Writes the next observation, the reward, whether the
 episode ended and whether the MountainCar flag was reached. Any of
 `reward`, `done` and `reached_goal` may be null.

 # Safety
 `env` must be a live handle, `obs` must hold `len` doubles and the other
 pointers must be null or writable.
 */
enum PaugStatus paug_env_step(struct PaugEnv *env,
                              size_t action,
                              double *obs,
                              size_t len,
                              double *reward,
                              bool *done,
                              bool *reached_goal);

/*
 # Safety
 `env` must be null or a handle not yet freed.
 */
void paug_env_free(struct PaugEnv *env);

struct PaugImcOptions paug_imc_default_options(void);

/*
 # Safety
 `out` must be writable.
 */
enum PaugStatus paug_imc_solver_new(struct PaugImcOptions options,
                                    uint64_t seed,
                                    struct PaugImcSolver **out);

/*
 Complete the `rows × cols` matrix `q` observed where `mask` is non-zero,
 with state features `x` (`rows × m`) and action features `y`
 (`cols × n`). The completed matrix goes to `q_hat` (`rows × cols`).
 Factors from the previous call are reused when their shape matches.

 # Safety
 `solver` must be a live handle; every buffer must hold the stated number
 of elements; `report` may be null.
 */
enum PaugStatus paug_imc_solve(struct PaugImcSolver *solver,
                               const double *q,
                               const uint8_t *mask,
                               size_t rows,
                               size_t cols,
                               const double *x,
                               size_t m,
                               const double *y,
                               size_t n,
                               double *q_hat,
                               size_t q_hat_len,
                               struct PaugImcReport *report);

/*
 Forget the stored factors; the next solve starts from random ones.

 # Safety
 `solver` must be null or a live handle.
 */
void paug_imc_solver_reset(struct PaugImcSolver *solver);

/*
 # Safety
 `solver` must be null or a handle not yet freed.
 */
void paug_imc_solver_free(struct PaugImcSolver *solver);

/*
 Run an experiment described by `key = value` lines, the same format the
 command line's `--config` accepts. Outputs are written only if the text
 sets `out`.

 # Safety
 `config` must be a NUL-terminated string; `out` must be writable.
 */
enum PaugStatus paug_experiment_run(const char *config, struct PaugExperiment **out);

/*
 Episodes per repetition; 0 for a null handle.

 # Safety
 `exp` must be null or a live handle.
 */
size_t paug_experiment_episodes(const struct PaugExperiment *exp);

/*
 Repetitions that completed; 0 for a null handle.

 # Safety
 `exp` must be null or a live handle.
 */
size_t paug_experiment_repetitions(const struct PaugExperiment *exp);

/*
 Per-episode mean and standard deviation across repetitions. Either
 output may be null.

 # Safety
 `exp` must be a live handle; non-null outputs must hold `len` doubles.
 */
enum PaugStatus paug_experiment_summary(const struct PaugExperiment *exp,
                                        double *mean,
                                        double *std,
                                        size_t len);

/*
 Episode returns of the `index`-th completed repetition.

 # Safety
 `exp` must be a live handle; `returns` must hold `len` doubles.
 */
enum PaugStatus paug_experiment_returns(const struct PaugExperiment *exp,
                                        size_t index,
                                        double *returns,
                                        size_t len);

/*
 # Safety
 `exp` must be null or a handle not yet freed.
 */
void paug_experiment_free(struct PaugExperiment *exp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAUG_H */
