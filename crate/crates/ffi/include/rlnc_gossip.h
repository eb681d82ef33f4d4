#ifndef RLNC_GOSSIP_H
#define RLNC_GOSSIP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RlncInduce {
  RLNC_INDUCE_PUSH = 0,
  RLNC_INDUCE_PULL = 1,
  RLNC_INDUCE_EXCHANGE = 2,
} RlncInduce;

typedef enum RlncStatus {
  RLNC_STATUS_OK = 0,
  RLNC_STATUS_NULL_POINTER = 1,
  RLNC_STATUS_INVALID_UTF8 = 2,
  RLNC_STATUS_CONFIG = 3,
  RLNC_STATUS_SIMULATION = 4,
  RLNC_STATUS_NETWORK = 5,
  RLNC_STATUS_DOMAIN = 6,
  RLNC_STATUS_OUT_OF_RANGE = 7,
  RLNC_STATUS_PANIC = 8,
} RlncStatus;

typedef struct RlncGraph RlncGraph;

// Outcome of running every trial of a scenario.
typedef struct RlncResult RlncResult;

// A validated scenario ready to run.
typedef struct RlncScenario RlncScenario;

// Aggregate stopping-round statistics. Fields without a value (no trial
// converged) are NaN.
typedef struct RlncStats {
  double mean;
  double median;
  double p90;
  double p99;
  double min;
  double max;
  double stderr;
  uint64_t trials;
  uint64_t converged;
  double convergence_rate;
  uint64_t max_rounds;
} RlncStats;

// γ, h and λ of a graph; NaN when a metric is unavailable.
typedef struct RlncMetrics {
  uintptr_t n;
  double gamma;
  double h;
  double lambda;
} RlncMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next library call on the same thread.
const char *rlnc_last_error_message(void);

// # Safety
// `s` must come from this library and not have been freed.
void rlnc_string_free(char *s);

// Parses and validates a scenario config (flat `key = value` text).
// `overrides` holds `n_overrides` strings of the form `key=value`.
//
// # Safety
// `text` is a NUL-terminated string; `overrides` points to `n_overrides`
// such strings (or is NULL when `n_overrides` is 0); `out` is writable.
enum RlncStatus rlnc_scenario_new(const char *text,
                                  const char *const *overrides,
                                  uintptr_t n_overrides,
                                  struct RlncScenario **out);

// # Safety
// `s` is NULL or a handle from [`rlnc_scenario_new`] not yet freed.
void rlnc_scenario_free(struct RlncScenario *s);

// Round budget in effect for the scenario.
//
// # Safety
// `s` is a live scenario handle; `out` is writable.
enum RlncStatus rlnc_scenario_max_rounds(const struct RlncScenario *s, uint64_t *out);

// Runs every trial. `threads` = 0 uses the config's setting.
//
// # Safety
// `s` is a live scenario handle; `out` is writable.
enum RlncStatus rlnc_run(const struct RlncScenario *s, uintptr_t threads, struct RlncResult **out);

// # Safety
// `r` is NULL or a handle from [`rlnc_run`] not yet freed.
void rlnc_result_free(struct RlncResult *r);

// # Safety
// `r` is a live result handle; `out` is writable.
enum RlncStatus rlnc_result_stats(const struct RlncResult *r, struct RlncStats *out);

// Stopping round of trial `trial`; `*converged` is false (and `*round`
// 0) when the trial hit the round budget.
//
// # Safety
// `r` is a live result handle; `round` and `converged` are writable.
enum RlncStatus rlnc_result_stopping_round(const struct RlncResult *r,
                                           uintptr_t trial,
                                           uint64_t *round,
                                           bool *converged);

// Per-trial CSV; free with [`rlnc_string_free`].
//
// # Safety
// `r` is a live result handle; `out` is writable.
enum RlncStatus rlnc_result_raw_csv(const struct RlncResult *r, char **out);

// Aggregate CSV (header plus one row); free with [`rlnc_string_free`].
//
// # Safety
// `r` is a live result handle; `out` is writable.
enum RlncStatus rlnc_result_aggregate_csv(const struct RlncResult *r, char **out);

// Full result as JSON; free with [`rlnc_string_free`].
//
// # Safety
// `r` is a live result handle; `out` is writable.
enum RlncStatus rlnc_result_json(const struct RlncResult *r, char **out);

// Parses an edge list (`n <count> directed|undirected` header, then
// `a b [p]` lines).
//
// # Safety
// `text` is a NUL-terminated string; `out` is writable.
enum RlncStatus rlnc_graph_parse(const char *text, struct RlncGraph **out);

// # Safety
// `g` is NULL or a handle from [`rlnc_graph_parse`] not yet freed.
void rlnc_graph_free(struct RlncGraph *g);

// γ, h and λ. Unweighted graphs get `induce` edge probabilities for γ and
// λ; h and λ need at most 20 nodes and are NaN beyond that.
//
// # Safety
// `g` is a live graph handle; `out` is writable.
enum RlncStatus rlnc_graph_metrics(const struct RlncGraph *g,
                                   enum RlncInduce induce,
                                   struct RlncMetrics *out);

// `P[at least t - T failures in t trials]` for failure probability `p`.
//
// # Safety
// `out` is writable.
enum RlncStatus rlnc_negbin_tail(uint64_t t, uint64_t big_t, double p, double *out);

// Round budget `coefficient·k + c·T + d` with `c` = 8.
//
// # Safety
// `out` is writable.
enum RlncStatus rlnc_pipelining_rounds(uint64_t k,
                                       double big_t,
                                       double p,
                                       double q,
                                       uint64_t d,
                                       uint64_t *out);

// Lower and upper leading constants of worst-case PULL over `k`.
//
// # Safety
// `lower` and `upper` are writable.
enum RlncStatus rlnc_worst_case_pull_constants(double i, double q, double *lower, double *upper);

// Runs a validation suite by name (`lemma1`, `theorem1_dominance`,
// `lemma9`, `lemma7`, `decode_equivalence`). `report_json` may be NULL;
// otherwise it receives the report, freed with [`rlnc_string_free`].
//
// # Safety
// `suite` is a NUL-terminated string; `pass` is writable; `report_json`
// is NULL or writable.
enum RlncStatus rlnc_validate(const char *suite, uint64_t seed, bool *pass, char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RLNC_GOSSIP_H */
