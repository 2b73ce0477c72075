#ifndef QDC_H
#define QDC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QdcStatus {
  QDC_STATUS_OK = 0,
  QDC_STATUS_NULL_POINTER = 1,
  QDC_STATUS_CONFIG = 2,
  QDC_STATUS_DIMENSION = 3,
  QDC_STATUS_CONTRACT = 4,
  QDC_STATUS_UNDEFINED = 5,
  QDC_STATUS_OUT_OF_RANGE = 6,
  QDC_STATUS_PANIC = 7,
} QdcStatus;

typedef enum QdcCollisionMode {
  QDC_COLLISION_MODE_JOINT = 0,
  QDC_COLLISION_MODE_MIXTURE = 1,
} QdcCollisionMode;

typedef enum QdcReservoirPhase {
  QDC_RESERVOIR_PHASE_LOCKED = 0,
  QDC_RESERVOIR_PHASE_AVERAGED = 1,
} QdcReservoirPhase;

typedef enum QdcParam {
  QDC_PARAM_COUPLING = 0,
  QDC_PARAM_THETA = 1,
  QDC_PARAM_PHI = 2,
} QdcParam;

typedef enum QdcTrainStatus {
  QDC_TRAIN_STATUS_CONVERGED = 0,
  QDC_TRAIN_STATUS_MAX_EPISODES = 1,
  QDC_TRAIN_STATUS_DIVERGED = 2,
} QdcTrainStatus;

/**
 * Reservoirs plus collision parameters, built up one reservoir at a time.
 */
typedef struct QdcClassifier QdcClassifier;

typedef struct QdcTrainResult QdcTrainResult;

typedef struct QdcSimulateOptions {
  size_t max_collisions;
  /**
   * Bound on the trace distance to the fixed point.
   */
  double steady_tol;
  size_t max_dim;
  enum QdcCollisionMode mode;
  enum QdcReservoirPhase phase;
  uint64_t seed;
} QdcSimulateOptions;

typedef struct QdcSteadyState {
  double sz;
  double sy;
  size_t collisions_used;
  bool converged;
} QdcSteadyState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer stays valid
 * until the next `qdc_*` call on the same thread.
 */
const char *qdc_last_error_message(void);

/**
 * New classifier with no reservoirs and the target in |+⟩. Writes the handle to `out`.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum QdcStatus qdc_classifier_new(double tau, double r, struct QdcClassifier **out);

/**
 * # Safety
 * `handle` must be null or a pointer from [`qdc_classifier_new`] not yet freed.
 */
void qdc_classifier_free(struct QdcClassifier *handle);

/**
 * Appends a reservoir in the pure state `(theta, phi)` with coupling `g ≥ 0`.
 *
 * # Safety
 * `handle` must be null or a live classifier handle.
 */
enum QdcStatus qdc_classifier_add_reservoir(struct QdcClassifier *handle,
                                            double theta,
                                            double phi,
                                            double g);

/**
 * Initial target state; the steady state does not depend on it.
 *
 * # Safety
 * `handle` must be null or a live classifier handle.
 */
enum QdcStatus qdc_classifier_set_target(struct QdcClassifier *handle, double theta, double phi);

/**
 * Number of reservoirs added so far; 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live classifier handle.
 */
size_t qdc_classifier_len(const struct QdcClassifier *handle);

/**
 * Closed-form steady `⟨σz⟩`.
 *
 * # Safety
 * `handle` must be null or a live classifier handle; `out` null or writable.
 */
enum QdcStatus qdc_steady_sz(const struct QdcClassifier *handle, double *out);

/**
 * Closed-form steady `⟨σy⟩`.
 *
 * # Safety
 * `handle` must be null or a live classifier handle; `out` null or writable.
 */
enum QdcStatus qdc_steady_sy(const struct QdcClassifier *handle, double *out);

/**
 * Label for a readout value: 0 when `value ≥ 0`, 1 otherwise (also 1 for NaN).
 */
uint8_t qdc_classify(double value);

struct QdcSimulateOptions qdc_simulate_options_default(void);

/**
 * Repeated collisions until the steady state. `options` may be null for defaults.
 *
 * # Safety
 * `handle` must be a live classifier handle, `options` null or readable, `out` writable.
 */
enum QdcStatus qdc_simulate(const struct QdcClassifier *handle,
                            const struct QdcSimulateOptions *options,
                            struct QdcSteadyState *out);

/**
 * Gradient descent on one parameter family. `max_episodes = 0` or `cost_tol ≤ 0`
 * select the library defaults.
 *
 * # Safety
 * `handle` must be a live classifier handle and `out` writable.
 */
enum QdcStatus qdc_train(const struct QdcClassifier *handle,
                         enum QdcParam param,
                         double eta,
                         double desired,
                         size_t max_episodes,
                         double cost_tol,
                         struct QdcTrainResult **out);

/**
 * # Safety
 * `result` must be null or a pointer from [`qdc_train`] not yet freed.
 */
void qdc_train_result_free(struct QdcTrainResult *result);

/**
 * # Safety
 * `result` must be a live train result; `out` writable.
 */
enum QdcStatus qdc_train_result_status(const struct QdcTrainResult *result,
                                       enum QdcTrainStatus *out);

/**
 * Number of recorded episodes, including the initial one; 0 for null.
 *
 * # Safety
 * `result` must be null or a live train result.
 */
size_t qdc_train_result_len(const struct QdcTrainResult *result);

/**
 * Number of episodes whose cost rose above the previous one; 0 for null.
 *
 * # Safety
 * `result` must be null or a live train result.
 */
size_t qdc_train_result_cost_increases(const struct QdcTrainResult *result);

/**
 * Readout and cost of record `index`. Any of the output pointers may be null.
 *
 * # Safety
 * `result` must be a live train result; non-null outputs must be writable.
 */
enum QdcStatus qdc_train_result_record(const struct QdcTrainResult *result,
                                       size_t index,
                                       size_t *episode,
                                       double *actual,
                                       double *cost);

/**
 * Copies the parameter values of record `index` into `values` (capacity `cap`) and
 * writes their count to `written`. Fails with `OutOfRange` if `cap` is too small.
 *
 * # Safety
 * `result` must be a live train result, `values` writable for `cap` doubles,
 * `written` null or writable.
 */
enum QdcStatus qdc_train_result_params(const struct QdcTrainResult *result,
                                       size_t index,
                                       double *values,
                                       size_t cap,
                                       size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDC_H */
