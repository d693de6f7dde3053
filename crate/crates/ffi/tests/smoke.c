#include <stdio.h>
#include "paug.h"

#define CHECK(call)                                                      \
    do {                                                                 \
        PaugStatus s_ = (call);                                          \
        if (s_ != PAUG_STATUS_OK) {                                      \
            char msg[256];                                               \
            paug_last_error(msg, sizeof msg);                            \
            fprintf(stderr, "%s failed (%d): %s\n", #call, s_, msg);     \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(void) {
    PaugEnv *env = NULL;
    CHECK(paug_env_new("mountaincar", 1, &env));
    double obs[2];
    CHECK(paug_env_reset(env, obs, 2));
    bool done = false, goal = false;
    double reward, total = 0;
    int steps = 0;
    while (!done) {
        CHECK(paug_env_step(env, 2, obs, 2, &reward, &done, &goal));
        total += reward;
        steps++;
    }
    paug_env_free(env);
    if (steps != 200 || total != -200.0) {
        fprintf(stderr, "unexpected episode: %d steps, return %g\n", steps, total);
        return 1;
    }

    PaugExperiment *exp = NULL;
    CHECK(paug_experiment_run("env = cartpole\nagent = eps\nepisodes = 3\nreps = 2\n", &exp));
    double mean[3], sd[3];
    CHECK(paug_experiment_summary(exp, mean, sd, 3));
    paug_experiment_free(exp);
    printf("ok %d %g\n", steps, mean[0]);
    return 0;
}
