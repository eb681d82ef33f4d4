#include <stdio.h>
#include "rlnc_gossip.h"

int main(void) {
    const char *cfg = "n = 16\nk = 8\ncomm_model = \"sync_pull\"\ntrials = 100\nmax_rounds = 500\n";
    const char *sets[] = {"seed=7"};
    RlncScenario *s = NULL;
    if (rlnc_scenario_new(cfg, sets, 1, &s) != RLNC_STATUS_OK) {
        fprintf(stderr, "config: %s\n", rlnc_last_error_message());
        return 1;
    }
    RlncResult *r = NULL;
    if (rlnc_run(s, 0, &r) != RLNC_STATUS_OK) {
        fprintf(stderr, "run: %s\n", rlnc_last_error_message());
        rlnc_scenario_free(s);
        return 1;
    }
    RlncStats st;
    rlnc_result_stats(r, &st);
    printf("mean %.3f median %.0f converged %llu/%llu\n", st.mean, st.median,
           (unsigned long long)st.converged, (unsigned long long)st.trials);
    rlnc_result_free(r);
    rlnc_scenario_free(s);
    return 0;
}
