#include <math.h>
#include <stdio.h>
#include "hvac_rl.h"

int main(void) {
    HvacEnv *env = NULL;
    if (hvac_env_new(NULL, &env) != HVAC_STATUS_OK) {
        fprintf(stderr, "%s\n", hvac_last_error());
        return 1;
    }
    HvacState s;
    if (hvac_env_reset(env, 5, 0, &s) != HVAC_STATUS_OK) return 2;
    HvacStep step;
    double total = 0.0;
    int n = 0;
    do {
        double u = 0.0;
        if (hvac_env_greedy_action(env, &u) != HVAC_STATUS_OK) return 3;
        if (hvac_env_step(env, u, &step) != HVAC_STATUS_OK) return 4;
        total += step.reward;
        n++;
    } while (!step.done);
    if (hvac_env_step(env, NAN, &step) != HVAC_STATUS_NON_FINITE) return 5;
    hvac_env_free(env);

    double p[3];
    if (hvac_comfort_pmf(22.0, p) != HVAC_STATUS_OK) return 6;
    printf("steps=%d return=%.6f pmf_sum=%.12f\n", n, total, p[0] + p[1] + p[2]);
    return n == 144 ? 0 : 7;
}
