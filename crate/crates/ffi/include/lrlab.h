#ifndef LRLAB_H
#define LRLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  LRLAB_OUTCOME_STATUS_PASS = 0,
  LRLAB_OUTCOME_STATUS_WARN = 1,
  LRLAB_OUTCOME_STATUS_FAIL = 2,
} LrlabOutcomeStatus;

typedef enum {
  LRLAB_SPIN_MODEL_HEISENBERG = 0,
  LRLAB_SPIN_MODEL_ISING = 1,
  LRLAB_SPIN_MODEL_TFIM = 2,
} LrlabSpinModel;

typedef enum {
  LRLAB_STATUS_OK = 0,
  LRLAB_STATUS_NULL_POINTER = 1,
  LRLAB_STATUS_INVALID_ARGUMENT = 2,
  LRLAB_STATUS_RESOURCE = 3,
  LRLAB_STATUS_UNSUPPORTED = 4,
  LRLAB_STATUS_CONFIG = 5,
  LRLAB_STATUS_IO = 6,
  LRLAB_STATUS_BUFFER_TOO_SMALL = 7,
  LRLAB_STATUS_PANIC = 8,
} LrlabStatus;

/*
 Diagonalized open spin-1/2 chain.
 */
typedef struct LrlabChain LrlabChain;

/*
 Parsed and validated scenario configuration.
 */
typedef struct LrlabConfig LrlabConfig;

/*
 Result of one scenario run.
 */
typedef struct LrlabOutcome LrlabOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread.

 # Safety
 `buf` must point to `len` writable bytes or be null; `needed` may be null.
 */
LrlabStatus lrlab_last_error(char *buf, uintptr_t len, uintptr_t *needed);

/*
 Library version as a static NUL-terminated string.
 */
const char *lrlab_version(void);

/*
 Parses and validates a TOML configuration.

 # Safety
 `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
LrlabStatus lrlab_config_parse(const char *toml, LrlabConfig **out);

/*
 # Safety
 `cfg` must come from `lrlab_config_parse` or be null.
 */
void lrlab_config_free(LrlabConfig *cfg);

/*
 # Safety
 Pointers must be valid.
 */
LrlabStatus lrlab_config_scenario_count(const LrlabConfig *cfg, uintptr_t *out);

/*
 SHA-256 of the canonical configuration, as 64 hex digits.

 # Safety
 `buf` must point to `len` writable bytes; `needed` may be null.
 */
LrlabStatus lrlab_config_hash(const LrlabConfig *cfg, char *buf, uintptr_t len, uintptr_t *needed);

/*
 Runs scenario `index` (0-based) of `cfg`.

 # Safety
 `cfg` must be a live handle and `out` a valid pointer.
 */
LrlabStatus lrlab_run_scenario(const LrlabConfig *cfg, uintptr_t index, LrlabOutcome **out);

/*
 # Safety
 `outcome` must come from `lrlab_run_scenario` or be null.
 */
void lrlab_outcome_free(LrlabOutcome *outcome);

/*
 # Safety
 Pointers must be valid.
 */
LrlabStatus lrlab_outcome_status(const LrlabOutcome *outcome, LrlabOutcomeStatus *out);

/*
 Pretty-printed JSON summary of the outcome.

 # Safety
 `buf` must point to `len` writable bytes or be null; `needed` may be null.
 */
LrlabStatus lrlab_outcome_summary(const LrlabOutcome *outcome,
                                  char *buf,
                                  uintptr_t len,
                                  uintptr_t *needed);

/*
 Builds and diagonalizes an open chain of `n` spins (2 ≤ n ≤ 12).
 `kind` is an `LrlabSpinModel` value.
 Ising and Heisenberg use coupling `j`; TFIM adds the field `h`.

 # Safety
 `out` must be a valid pointer.
 */
LrlabStatus lrlab_chain_new(uint32_t kind, uintptr_t n, double j, double h, LrlabChain **out);

/*
 # Safety
 `chain` must come from `lrlab_chain_new` or be null.
 */
void lrlab_chain_free(LrlabChain *chain);

/*
 # Safety
 Pointers must be valid.
 */
LrlabStatus lrlab_chain_ground_energy(const LrlabChain *chain, double *out);

/*
 # Safety
 Pointers must be valid.
 */
LrlabStatus lrlab_chain_gap(const LrlabChain *chain, double *out);

/*
 ‖[τ_t(σ³_a), σ³_b]‖.

 # Safety
 Pointers must be valid.
 */
LrlabStatus lrlab_chain_commutator_norm(const LrlabChain *chain,
                                        uintptr_t a,
                                        uintptr_t b,
                                        double t,
                                        double *out);

/*
 Lieb-Robinson bound for the same pair with F(r) = (1+r)^(−2).

 # Safety
 Pointers must be valid.
 */
LrlabStatus lrlab_chain_lr_bound(const LrlabChain *chain,
                                 uintptr_t a,
                                 uintptr_t b,
                                 double t,
                                 double *out);

/*
 ω(S^a_0 S^b_r) in the AKLT ground state, a, b ∈ {1, 2, 3}.

 # Safety
 `out` must be a valid pointer.
 */
LrlabStatus lrlab_aklt_correlation(uintptr_t a, uintptr_t b, uintptr_t r, double *out);

/*
 Entanglement entropy of an AKLT interval of `len` sites.

 # Safety
 `out` must be a valid pointer.
 */
LrlabStatus lrlab_aklt_entropy(uintptr_t len, double *out);

/*
 ‖[W(τ_t δ_x), W(δ_y)]‖ for the harmonic chain on the torus (−L, L].

 # Safety
 `out` must be a valid pointer.
 */
LrlabStatus lrlab_harmonic_commutator(int64_t l,
                                      double omega,
                                      double lambda,
                                      int64_t x,
                                      int64_t y,
                                      double t,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRLAB_H */
