#ifndef QAMGAME_H
#define QAMGAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result codes; the non-zero values follow the CLI exit codes where they overlap.
 */
typedef enum QgStatus {
  QG_STATUS_OK = 0,
  QG_STATUS_INVALID_ARGUMENT = 2,
  QG_STATUS_DELAY_INFEASIBLE = 3,
  QG_STATUS_SYSTEM_INFEASIBLE = 4,
  QG_STATUS_NUMERIC = 5,
  QG_STATUS_NULL_POINTER = 6,
  QG_STATUS_PANIC = 7,
} QgStatus;

typedef enum QgPolicy {
  QG_POLICY_PARETO_DOMINANT = 0,
  QG_POLICY_MAX_RATE = 1,
} QgPolicy;

typedef struct QgEquilibrium QgEquilibrium;

typedef struct QgNetwork QgNetwork;

typedef struct QgScheme QgScheme;

/*
 Poisson packet arrivals (packets/s) and the mean-delay bound (s).
 */
typedef struct QgTraffic {
  double arrival_rate;
  double delay_bound;
} QgTraffic;

/*
 One user's share of an equilibrium.
 */
typedef struct QgUserResult {
  uint32_t bits_per_symbol;
  double symbol_rate;
  /*
   Linear target SIR.
   */
  double target_sir;
  double achieved_sir;
  double power;
  /*
   Bits per joule.
   */
  double utility;
  double size;
} QgUserResult;

/*
 Message of the last failed call on this thread, or NULL. The pointer is
 valid until the next failing call on the same thread.
 */
const char *qg_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *qg_version(void);

/*
 Creates an M-QAM scheme with `bits_per_symbol` bits per symbol and
 `packet_bits`-bit packets. With `coded` set, `gain_db` is the constant
 trellis coding gain.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum QgStatus qg_scheme_new(uint32_t bits_per_symbol,
                            uint32_t packet_bits,
                            bool coded,
                            double gain_db,
                            struct QgScheme **out);

/*
 # Safety
 `scheme` must be NULL or a handle from [`qg_scheme_new`] not yet freed.
 */
void qg_scheme_free(struct QgScheme *scheme);

/*
 Efficiency (zero-power-adjusted packet success rate) at linear SIR `sir`.

 # Safety
 `scheme` must be a live handle and `out` writable.
 */
enum QgStatus qg_scheme_efficiency(const struct QgScheme *scheme, double sir, double *out);

/*
 # Safety
 `scheme` must be a live handle and `out` writable.
 */
enum QgStatus qg_scheme_efficiency_derivative(const struct QgScheme *scheme,
                                              double sir,
                                              double *out);

/*
 Smallest linear SIR achieving efficiency `eta`.

 # Safety
 `scheme` must be a live handle and `out` writable.
 */
enum QgStatus qg_scheme_efficiency_inverse(const struct QgScheme *scheme, double eta, double *out);

/*
 Energy-optimal linear SIR.

 # Safety
 `scheme` must be a live handle and `out` writable.
 */
enum QgStatus qg_scheme_optimal_sir(const struct QgScheme *scheme, double *out);

/*
 Peak utility in units of bandwidth times effective channel gain.

 # Safety
 `scheme` must be a live handle and `out` writable.
 */
enum QgStatus qg_scheme_peak_utility(const struct QgScheme *scheme, double *out);

/*
 Mean packet delay (s) at the given symbol rate and linear SIR.

 # Safety
 `scheme` must be a live handle and `out` writable.
 */
enum QgStatus qg_avg_delay(const struct QgScheme *scheme,
                           double symbol_rate,
                           double sir,
                           struct QgTraffic traffic_qos,
                           double *out);

/*
 Lowest linear SIR meeting the delay bound at `symbol_rate`.

 # Safety
 `scheme` must be a live handle and `out` writable.
 */
enum QgStatus qg_sir_floor(const struct QgScheme *scheme,
                           double symbol_rate,
                           struct QgTraffic traffic_qos,
                           double *out);

/*
 Critical bit rate at which the energy-optimal SIR meets the delay bound exactly.

 # Safety
 `scheme` must be a live handle and `out` writable.
 */
enum QgStatus qg_omega_star(const struct QgScheme *scheme,
                            struct QgTraffic traffic_qos,
                            double *out);

/*
 Creates an empty network with bandwidth `bandwidth` (Hz) and receiver
 noise power `noise_power` (W).

 # Safety
 `out` must be writable.
 */
enum QgStatus qg_network_new(double bandwidth, double noise_power, struct QgNetwork **out);

/*
 # Safety
 `network` must be NULL or a handle from [`qg_network_new`] not yet freed.
 */
void qg_network_free(struct QgNetwork *network);

/*
 Appends a user. With `coded` set, `gain_db` applies to every constellation.

 # Safety
 `network` must be a live handle.
 */
enum QgStatus qg_network_add_user(struct QgNetwork *network,
                                  double channel_gain,
                                  struct QgTraffic traffic_qos,
                                  uint32_t packet_bits,
                                  uint32_t max_bits_per_symbol,
                                  bool coded,
                                  double gain_db);

/*
 Number of users added so far.

 # Safety
 `network` must be a live handle and `out` writable.
 */
enum QgStatus qg_network_user_count(const struct QgNetwork *network, size_t *out);

/*
 Solves for the Nash equilibrium with default solver settings.

 # Safety
 `network` must be a live handle and `out` writable.
 */
enum QgStatus qg_nash_equilibrium(const struct QgNetwork *network,
                                  enum QgPolicy policy,
                                  struct QgEquilibrium **out);

/*
 # Safety
 `equilibrium` must be NULL or a handle from [`qg_nash_equilibrium`] not yet freed.
 */
void qg_equilibrium_free(struct QgEquilibrium *equilibrium);

/*
 # Safety
 `equilibrium` must be a live handle and `out` writable.
 */
enum QgStatus qg_equilibrium_user(const struct QgEquilibrium *equilibrium,
                                  size_t index,
                                  struct QgUserResult *out);

/*
 Sum of user sizes, sweep count and convergence flag.

 # Safety
 `equilibrium` must be a live handle; each out-pointer must be NULL or writable.
 */
enum QgStatus qg_equilibrium_summary(const struct QgEquilibrium *equilibrium,
                                     double *sum_size,
                                     size_t *iterations,
                                     bool *converged);

#endif  /* QAMGAME_H */
