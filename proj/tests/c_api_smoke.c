/* Compiled as C: the header must be usable without C++. */
#include <stdio.h>
#include <stdlib.h>

#include "iglu/c_api.h"

int main(void) {
  iglu_env* env = iglu_env_create_generated(7, 6, 3, NULL);
  iglu_obs* obs = malloc(sizeof *obs);
  iglu_step_info info;
  iglu_policy* pol = iglu_random_policy_create(1);
  int steps = 0;
  if (env == NULL || obs == NULL || iglu_env_reset(env, 0, obs) != 0) {
    fprintf(stderr, "setup failed: %s\n", iglu_last_error());
    return 1;
  }
  do {
    int verb;
    double dp, dy;
    iglu_random_policy_next(pol, &verb, &dp, &dy);
    if (iglu_env_step(env, verb, dp, dy, obs, &info) != 0) {
      fprintf(stderr, "step failed: %s\n", iglu_last_error());
      return 1;
    }
    ++steps;
  } while (!info.done);
  printf("c smoke: %d steps, final step %d\n", steps, obs->step);
  iglu_random_policy_destroy(pol);
  iglu_env_destroy(env);
  free(obs);
  return steps == 500 ? 0 : 1; /* default max_steps */
}
