#ifndef ADVLABEL_H
#define ADVLABEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define ADV_RULE_LAGRANGIAN 0

#define ADV_RULE_SLACK_DRIVEN 1

typedef enum AdvStatus {
  ADV_STATUS_OK = 0,
  ADV_STATUS_NULL_POINTER = 1,
  ADV_STATUS_INVALID_ARGUMENT = 2,
  /**
   * No labeling satisfies the weak-signal bounds.
   */
  ADV_STATUS_INFEASIBLE = 3,
  ADV_STATUS_FAILED = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  ADV_STATUS_PANIC = 5,
} AdvStatus;

typedef enum AdvTrainStatus {
  ADV_TRAIN_STATUS_CONVERGED = 0,
  ADV_TRAIN_STATUS_MAX_ITERATIONS = 1,
  ADV_TRAIN_STATUS_INFEASIBLE = 2,
} AdvTrainStatus;

/**
 * A trained sigmoid-linear model, feature standardization included.
 */
typedef struct AdvModel AdvModel;

/**
 * A weak-signal set: per-example soft labels with one error bound each.
 */
typedef struct AdvSignals AdvSignals;

/**
 * Solver settings; start from `adv_solver_config_linear` or
 * `adv_solver_config_direct` and adjust fields.
 */
typedef struct AdvSolverConfig {
  /**
   * Constant step size.
   */
  double step;
  double rho;
  size_t max_iters;
  double tol;
  /**
   * `ADV_RULE_LAGRANGIAN` or `ADV_RULE_SLACK_DRIVEN`.
   */
  uint32_t rule;
} AdvSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *adv_version(void);

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *adv_last_error(void);

/**
 * Expected disagreement between two probability vectors of length `n`.
 *
 * # Safety
 * `p` and `y` must point to `n` doubles; `out` to one.
 */
enum AdvStatus adv_expected_error(const double *p, const double *y, size_t n, double *out);

/**
 * Expected error of weak signal `q` against labeling `y`.
 *
 * # Safety
 * `q` and `y` must point to `n` doubles; `out` to one.
 */
enum AdvStatus adv_constraint_value(const double *q, const double *y, size_t n, double *out);

/**
 * Empty signal set over `n` examples; null when `n` is zero.
 */
struct AdvSignals *adv_signals_new(size_t n);

/**
 * Appends a signal with its error bound.
 *
 * # Safety
 * `signals` must come from `adv_signals_new`; `q` must point to `n` doubles
 * where `n` is the set's example count.
 */
enum AdvStatus adv_signals_push(struct AdvSignals *signals, const double *q, double bound);

/**
 * Number of signals in the set; 0 for null.
 *
 * # Safety
 * `signals` must be null or come from `adv_signals_new`.
 */
size_t adv_signals_len(const struct AdvSignals *signals);

/**
 * # Safety
 * `signals` must be null or come from `adv_signals_new`, and not be used afterwards.
 */
void adv_signals_free(struct AdvSignals *signals);

/**
 * Worst-case labeling for predictions `p` under the bounds. Writes `n`
 * labels and the maximized error; returns `ADV_STATUS_INFEASIBLE` when no
 * labeling meets the bounds.
 *
 * # Safety
 * `p` and `labels_out` must point to `n` doubles, `value_out` to one;
 * `signals` must come from `adv_signals_new` with the same `n`.
 */
enum AdvStatus adv_solve_exact(const double *p,
                               size_t n,
                               const struct AdvSignals *signals,
                               double *labels_out,
                               double *value_out);

/**
 * The worst-case expected error of predictions `p`.
 *
 * # Safety
 * As for `adv_solve_exact`.
 */
enum AdvStatus adv_primal_value(const double *p,
                                size_t n,
                                const struct AdvSignals *signals,
                                double *out);

/**
 * Defaults for the sigmoid-linear model.
 */
struct AdvSolverConfig adv_solver_config_linear(void);

/**
 * Defaults for the one-probability-per-example model.
 */
struct AdvSolverConfig adv_solver_config_direct(void);

/**
 * Trains a sigmoid-linear model on unlabeled features `x` (`n × d`,
 * row-major). On `ADV_STATUS_OK`, `*model_out` owns a new model and
 * `*status_out` says how training ended.
 *
 * # Safety
 * `x` must point to `n·d` doubles; `signals` must come from
 * `adv_signals_new` with `n` examples; `config` may be null for defaults.
 */
enum AdvStatus adv_train_linear(const double *x,
                                size_t n,
                                size_t d,
                                const struct AdvSignals *signals,
                                const struct AdvSolverConfig *config,
                                struct AdvModel **model_out,
                                enum AdvTrainStatus *status_out);

/**
 * Optimizes one probability per example directly and writes the `n`
 * learned probabilities.
 *
 * # Safety
 * `p_out` must point to `n` doubles; `signals` must come from
 * `adv_signals_new` with `n` examples; `config` may be null for defaults.
 */
enum AdvStatus adv_train_direct(size_t n,
                                const struct AdvSignals *signals,
                                const struct AdvSolverConfig *config,
                                double *p_out,
                                enum AdvTrainStatus *status_out);

/**
 * Number of input features the model expects; 0 for null.
 *
 * # Safety
 * `model` must be null or come from `adv_train_linear`.
 */
size_t adv_model_dim(const struct AdvModel *model);

/**
 * Copies the `dim + 1` weights (bias last) into `out`.
 *
 * # Safety
 * `model` must come from `adv_train_linear`; `out` must point to `len` doubles.
 */
enum AdvStatus adv_model_weights(const struct AdvModel *model, double *out, size_t len);

/**
 * Positive-class probabilities for `n` rows of `d` features.
 *
 * # Safety
 * `model` must come from `adv_train_linear`; `x` must point to `n·d`
 * doubles and `out` to `n`.
 */
enum AdvStatus adv_model_predict(const struct AdvModel *model,
                                 const double *x,
                                 size_t n,
                                 size_t d,
                                 double *out);

/**
 * # Safety
 * `model` must be null or come from `adv_train_linear`, and not be used afterwards.
 */
void adv_model_free(struct AdvModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADVLABEL_H */
