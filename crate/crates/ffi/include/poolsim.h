#ifndef POOLSIM_H
#define POOLSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PoolsimAgentStat {
  POOLSIM_AGENT_STAT_PAYOUT_PER_SHARE = 0,
  POOLSIM_AGENT_STAT_RELATIVE_PAYOUT = 1,
  POOLSIM_AGENT_STAT_VARIANCE_PER_SHARE = 2,
  POOLSIM_AGENT_STAT_MATURITY = 3,
  POOLSIM_AGENT_STAT_TOTAL_PAYOUT = 4,
} PoolsimAgentStat;

typedef enum PoolsimCauseKind {
  POOLSIM_CAUSE_KIND_BLOCK = 0,
  POOLSIM_CAUSE_KIND_IMMEDIATE = 1,
  POOLSIM_CAUSE_KIND_SHIFT_END = 2,
} PoolsimCauseKind;

typedef enum PoolsimRecipientKind {
  POOLSIM_RECIPIENT_KIND_MINER = 0,
  POOLSIM_RECIPIENT_KIND_OPERATOR = 1,
} PoolsimRecipientKind;

typedef enum PoolsimStatus {
  POOLSIM_STATUS_OK = 0,
  POOLSIM_STATUS_NULL_POINTER = 1,
  POOLSIM_STATUS_INVALID_ARGUMENT = 2,
  POOLSIM_STATUS_CONFIG = 3,
  POOLSIM_STATUS_RUNTIME = 4,
  POOLSIM_STATUS_OUT_OF_RANGE = 5,
  POOLSIM_STATUS_PANIC = 6,
} PoolsimStatus;

/**
 * A reward engine with its ledger.
 */
typedef struct PoolsimEngine PoolsimEngine;

/**
 * The result of a scenario run.
 */
typedef struct PoolsimRun PoolsimRun;

/**
 * One share submitted to an engine. `sim_time` is ignored when negative.
 */
typedef struct PoolsimShare {
  uint64_t index;
  uint32_t miner;
  double d;
  double p_eff;
  double reward;
  bool is_block;
  double sim_time;
} PoolsimShare;

/**
 * `miner` is meaningful only for miner payouts; `cause_index` is the block
 * share index or shift number, 0 for immediate payouts.
 */
typedef struct PoolsimPayout {
  enum PoolsimRecipientKind recipient;
  uint32_t miner;
  double amount;
  enum PoolsimCauseKind cause;
  uint64_t cause_index;
  uint64_t at_index;
} PoolsimPayout;

/**
 * Mean and 95% confidence half-width across replicas.
 */
typedef struct PoolsimEstimate {
  double mean;
  double half_width;
} PoolsimEstimate;

typedef struct PoolsimGeometricStats {
  double mean;
  double variance;
  double maturity;
  double fee_mean;
  double fee_variance;
} PoolsimGeometricStats;

typedef struct PoolsimLiwOptimum {
  double t_opt;
  double amplification;
  double gain_per_block;
} PoolsimLiwOptimum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next poolsim call on the same thread.
 */
const char *poolsim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *poolsim_version(void);

/**
 * Create an engine from a JSON config such as
 * `{"method": "pplns_unit", "f": 0.0, "x": 1.0}`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum PoolsimStatus poolsim_engine_new(const char *config_json, struct PoolsimEngine **out);

/**
 * # Safety
 * `engine` must come from [`poolsim_engine_new`] and not be used afterwards.
 */
void poolsim_engine_free(struct PoolsimEngine *engine);

/**
 * Submit one share. The number of payouts it triggered is written to
 * `n_payouts`; fetch them with [`poolsim_engine_payout`].
 *
 * # Safety
 * `engine` and `share` must be valid; `n_payouts` may be null.
 */
enum PoolsimStatus poolsim_engine_step(struct PoolsimEngine *engine,
                                       const struct PoolsimShare *share,
                                       size_t *n_payouts);

/**
 * Payout `i` from the most recent step.
 *
 * # Safety
 * `engine` and `out` must be valid.
 */
enum PoolsimStatus poolsim_engine_payout(const struct PoolsimEngine *engine,
                                         size_t i,
                                         struct PoolsimPayout *out);

/**
 * Reward the miner would still receive if no further shares arrived.
 *
 * # Safety
 * `engine` and `out` must be valid.
 */
enum PoolsimStatus poolsim_engine_pending(const struct PoolsimEngine *engine,
                                          uint32_t miner,
                                          double *out);

/**
 * Total paid to the miner so far.
 *
 * # Safety
 * `engine` and `out` must be valid.
 */
enum PoolsimStatus poolsim_engine_miner_total(const struct PoolsimEngine *engine,
                                              uint32_t miner,
                                              double *out);

/**
 * Block revenue minus miner payouts so far.
 *
 * # Safety
 * `engine` and `out` must be valid.
 */
enum PoolsimStatus poolsim_engine_operator_net(const struct PoolsimEngine *engine, double *out);

/**
 * Run a scenario given as JSON.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum PoolsimStatus poolsim_run_scenario(const char *config_json, struct PoolsimRun **out);

/**
 * # Safety
 * `run` must come from [`poolsim_run_scenario`] and not be used afterwards.
 */
void poolsim_run_free(struct PoolsimRun *run);

/**
 * Number of agents in the run.
 *
 * # Safety
 * `run` and `out` must be valid.
 */
enum PoolsimStatus poolsim_run_agent_count(const struct PoolsimRun *run, size_t *out);

/**
 * One statistic of agent `agent`. Fails with `OutOfRange` for an unknown
 * agent and with `Runtime` when the statistic is undefined (no shares).
 *
 * # Safety
 * `run` and `out` must be valid.
 */
enum PoolsimStatus poolsim_run_agent_stat(const struct PoolsimRun *run,
                                          size_t agent,
                                          enum PoolsimAgentStat stat,
                                          struct PoolsimEstimate *out);

/**
 * Exponential integral E1(x).
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_exp_integral_e1(double x, double *out);

/**
 * exp(x) E1(x).
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_prop_amplification(double x, double *out);

/**
 * Round age at which a proportional share is worth exactly pB.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_prop_hop_threshold(double *out);

/**
 * Hopper amplification among `m` proportional pools.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_hop_amplification(double m, bool fallback, double *out);

/**
 * Honest payout fraction against saturating hoppers.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_prop_honest_loss(double *out);

/**
 * PPS reserve for lifetime ruin probability `delta`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_pps_reserve(double reward, double f, double delta, double *out);

/**
 * PPS lifetime ruin probability with reserve `r`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_pps_ruin_probability(double reward, double f, double r, double *out);

/**
 * Expected MPPS loss fraction over `n` expected blocks.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_mpps_expected_loss(uint64_t n, double *out);

/**
 * SMPPS maturity in blocks for a constant negative buffer.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_smpps_maturity(double r, double reward, double *out);

/**
 * Amplification from choosing share difficulty after the hash is known.
 * `difficulties` is increasing and ends with `INFINITY`.
 *
 * # Safety
 * `difficulties` must point to `len` doubles; `out` must be writable.
 */
enum PoolsimStatus poolsim_posterior_difficulty_amplification(const double *difficulties,
                                                              size_t len,
                                                              double *out);

/**
 * Geometric method per-share and per-block statistics.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_geometric_stats(double p,
                                           double c,
                                           double f,
                                           double reward,
                                           struct PoolsimGeometricStats *out);

/**
 * Optimal lie-in-wait ambush and its amplification.
 *
 * # Safety
 * `out` must be writable.
 */
enum PoolsimStatus poolsim_liw_optimum(double m,
                                       double h,
                                       double h0,
                                       double t0,
                                       double p,
                                       double reward,
                                       struct PoolsimLiwOptimum *out);

/**
 * Hopping-immune reward table, row-major over `N = 1..=n_max`,
 * `I = 1..=N`: `n_max (n_max + 1) / 2` values, written to `out` when it
 * holds at least that many. The required length goes to `needed`.
 *
 * # Safety
 * `out` must point to `cap` writable doubles or be null with `cap = 0`;
 * `needed` must be writable.
 */
enum PoolsimStatus poolsim_immunity_solve(double p,
                                          size_t n_max,
                                          double total,
                                          double *out,
                                          size_t cap,
                                          size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POOLSIM_H */
