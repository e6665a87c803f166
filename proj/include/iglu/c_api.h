#ifndef IGLU_C_API_H
#define IGLU_C_API_H

/* Plain C interface for foreign-language bindings. Every call that can fail
   returns 0 on success and -1 on error (NULL for constructors); the message
   is then available from iglu_last_error() on the same thread. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define IGLU_POV_BYTES (64 * 64 * 3)
#define IGLU_GRID_CELLS (9 * 11 * 11)

typedef struct iglu_env iglu_env;
typedef struct iglu_policy iglu_policy;

/* Observation buffers. grid is indexed [y][x][z]; pose is x, y, z, pitch, yaw. */
typedef struct {
  uint8_t pov[IGLU_POV_BYTES]; /* row-major 64x64 RGB; zeros when has_pov == 0 */
  int32_t has_pov;
  int8_t grid[IGLU_GRID_CELLS];
  int32_t inventory[6];
  int32_t selected;
  float pose[5];
  float compass;
  int32_t step;
} iglu_obs;

typedef struct {
  double reward;
  int32_t done;
  int32_t intersection_size;
  double f1_so_far;
  int32_t termination_reason; /* 0 none, 1 complete, 2 time_limit, 3 end_episode */
  int32_t has_change;
  int32_t change[5]; /* x, y, z, old colour, new colour */
} iglu_step_info;

const char* iglu_last_error(void);
int iglu_verb_count(void);
const char* iglu_verb_name(int verb);

/* task_json: one task object as in task files; config_json may be NULL. */
iglu_env* iglu_env_create(const char* task_json, const char* config_json);
iglu_env* iglu_env_create_generated(uint64_t task_seed, int n_blocks, int max_height, const char* config_json);
void iglu_env_destroy(iglu_env* env);
int iglu_env_reset(iglu_env* env, uint64_t seed, iglu_obs* out);
int iglu_env_step(iglu_env* env, int verb, double camera_pitch, double camera_yaw, iglu_obs* out, iglu_step_info* info);
/* Valid until the next create/destroy of this env. */
const char* iglu_env_instruction(const iglu_env* env);

iglu_policy* iglu_random_policy_create(uint64_t seed);
void iglu_random_policy_next(iglu_policy* p, int* verb, double* camera_pitch, double* camera_yaw);
void iglu_random_policy_destroy(iglu_policy* p);

#ifdef __cplusplus
}
#endif

#endif
