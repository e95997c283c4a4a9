#ifndef HAMMER_H
#define HAMMER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HammerStatus {
  HAMMER_STATUS_OK = 0,
  HAMMER_STATUS_NULL_POINTER = 1,
  HAMMER_STATUS_INVALID_ARGUMENT = 2,
  HAMMER_STATUS_CONFIG = 3,
  HAMMER_STATUS_ENV = 4,
  HAMMER_STATUS_TRAINING = 5,
  HAMMER_STATUS_BUFFER_TOO_SMALL = 6,
  HAMMER_STATUS_PANIC = 7,
} HammerStatus;

typedef struct HammerConfig HammerConfig;

typedef struct HammerSession HammerSession;

typedef struct HammerWorld HammerWorld;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Static NUL-terminated version string.
 */
const char *hammer_version(void);

/*
 Copies the calling thread's last error message into `buf`.

 # Safety
 `buf` must be writable for `len` bytes or null; `needed` must be null or valid.
 */
enum HammerStatus hammer_last_error(char *buf, size_t len, size_t *needed);

/*
 Creates a config holding the defaults.

 # Safety
 `out` must be a valid pointer.
 */
enum HammerStatus hammer_config_new(struct HammerConfig **out);

/*
 Parses a `key = value` config text on top of the defaults.

 # Safety
 `text` must be a NUL-terminated string; `out` must be valid.
 */
enum HammerStatus hammer_config_from_text(const char *text, struct HammerConfig **out);

/*
 Sets one config key, e.g. `"mode"` / `"independent"` or `"local.lr"` / `"0.001"`.

 # Safety
 `config` must come from this library; `key` and `value` must be NUL-terminated.
 */
enum HammerStatus hammer_config_set(struct HammerConfig *config,
                                    const char *key,
                                    const char *value);

/*
 Serializes the config; see [`hammer_last_error`] for the buffer protocol.

 # Safety
 `config` must come from this library; `buf`/`needed` as for [`hammer_last_error`].
 */
enum HammerStatus hammer_config_to_text(const struct HammerConfig *config,
                                        char *buf,
                                        size_t len,
                                        size_t *needed);

/*
 # Safety
 `config` must come from [`hammer_config_new`] or be null; it must not be used afterwards.
 */
void hammer_config_free(struct HammerConfig *config);

/*
 Creates a navigation world with `n_agents` agents and landmarks, reset
 from `seed`.

 # Safety
 `out` must be a valid pointer.
 */
enum HammerStatus hammer_world_new(size_t n_agents, uint64_t seed, struct HammerWorld **out);

/*
 Starts a new episode.

 # Safety
 `world` must come from [`hammer_world_new`].
 */
enum HammerStatus hammer_world_reset(struct HammerWorld *world);

/*
 Length of one agent's observation, or 0 for a null handle.

 # Safety
 `world` must come from [`hammer_world_new`] or be null.
 */
size_t hammer_world_obs_dim(const struct HammerWorld *world);

/*
 Writes all observations, agent after agent, into `out` (length
 `n_agents * obs_dim`).

 # Safety
 `world` must come from [`hammer_world_new`]; `out` must be writable for `len` doubles.
 */
enum HammerStatus hammer_world_observations(const struct HammerWorld *world,
                                            double *out,
                                            size_t len);

/*
 Applies one discrete action per agent (0 stay, 1 +x, 2 -x, 3 +y, 4 -y),
 writing per-agent rewards and the episode-end flag.

 # Safety
 `actions` must hold `n` values and `rewards` must be writable for `n`
 doubles; `done` must be valid or null.
 */
enum HammerStatus hammer_world_step(struct HammerWorld *world,
                                    const uint32_t *actions,
                                    size_t n,
                                    double *rewards,
                                    bool *done);

/*
 Team reward of the current state.

 # Safety
 `world` must come from [`hammer_world_new`]; `out` must be valid.
 */
enum HammerStatus hammer_world_team_reward(const struct HammerWorld *world, double *out);

/*
 # Safety
 `world` must come from [`hammer_world_new`] or be null; it must not be used afterwards.
 */
void hammer_world_free(struct HammerWorld *world);

/*
 Creates a training session from a validated copy of `config`.

 # Safety
 `config` must come from this library; `out` must be valid.
 */
enum HammerStatus hammer_session_new(const struct HammerConfig *config, struct HammerSession **out);

/*
 Runs one training episode; `mean_reward` receives the mean reward per agent.

 # Safety
 `session` must come from [`hammer_session_new`]; `mean_reward` must be valid or null.
 */
enum HammerStatus hammer_session_run_episode(struct HammerSession *session, double *mean_reward);

/*
 # Safety
 `session` must come from [`hammer_session_new`] or be null; it must not be used afterwards.
 */
void hammer_session_free(struct HammerSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAMMER_H */
