#include <stdio.h>
#include <string.h>
#include "lrlab.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (line %d)\n", #cond, __LINE__); return 1; } } while (0)

int main(void) {
    LrlabChain *chain = NULL;
    double e0 = 0.0, comm = 0.0, bound = 0.0, corr = 0.0;
    CHECK(lrlab_chain_new(LRLAB_SPIN_MODEL_HEISENBERG, 2, 1.0, 0.0, &chain) == LRLAB_STATUS_OK);
    CHECK(lrlab_chain_ground_energy(chain, &e0) == LRLAB_STATUS_OK);
    CHECK(e0 > -0.75 - 1e-12 && e0 < -0.75 + 1e-12);
    lrlab_chain_free(chain);

    CHECK(lrlab_chain_new(LRLAB_SPIN_MODEL_TFIM, 6, 1.0, 1.0, &chain) == LRLAB_STATUS_OK);
    CHECK(lrlab_chain_commutator_norm(chain, 0, 5, 1.0, &comm) == LRLAB_STATUS_OK);
    CHECK(lrlab_chain_lr_bound(chain, 0, 5, 1.0, &bound) == LRLAB_STATUS_OK);
    CHECK(comm <= bound);
    CHECK(lrlab_chain_commutator_norm(chain, 0, 9, 1.0, &comm) == LRLAB_STATUS_INVALID_ARGUMENT);
    lrlab_chain_free(chain);

    char msg[256];
    size_t needed = 0;
    CHECK(lrlab_last_error(msg, sizeof msg, &needed) == LRLAB_STATUS_OK);
    CHECK(strstr(msg, "sites") != NULL);

    CHECK(lrlab_aklt_correlation(3, 3, 1, &corr) == LRLAB_STATUS_OK);
    CHECK(corr < -4.0 / 9.0 + 1e-12 && corr > -4.0 / 9.0 - 1e-12);
    CHECK(lrlab_chain_ground_energy(NULL, &e0) == LRLAB_STATUS_NULL_POINTER);

    LrlabConfig *cfg = NULL;
    CHECK(lrlab_config_parse("[[scenario]]\nkind = \"dyson\"\n", &cfg) == LRLAB_STATUS_OK);
    LrlabOutcome *out = NULL;
    CHECK(lrlab_run_scenario(cfg, 0, &out) == LRLAB_STATUS_OK);
    LrlabOutcomeStatus st;
    CHECK(lrlab_outcome_status(out, &st) == LRLAB_STATUS_OK && st == LRLAB_OUTCOME_STATUS_PASS);
    CHECK(lrlab_outcome_summary(out, NULL, 0, &needed) == LRLAB_STATUS_BUFFER_TOO_SMALL && needed > 10);
    lrlab_outcome_free(out);
    lrlab_config_free(cfg);
    printf("ok\n");
    return 0;
}
