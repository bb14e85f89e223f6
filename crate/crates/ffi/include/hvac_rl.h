#ifndef HVAC_RL_H
#define HVAC_RL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum HvacStatus {
  HVAC_STATUS_OK = 0,
  HVAC_STATUS_NULL_POINTER = 1,
  HVAC_STATUS_INVALID_PARAM = 2,
  HVAC_STATUS_NON_FINITE = 3,
  HVAC_STATUS_SHAPE = 4,
  HVAC_STATUS_IO = 5,
  HVAC_STATUS_FORMAT = 6,
  HVAC_STATUS_UTF8 = 7,
  HVAC_STATUS_PANIC = 8,
  HVAC_STATUS_OTHER = 9,
} HvacStatus;

/**
 * Opaque trained-actor handle.
 */
typedef struct HvacActor HvacActor;

/**
 * Opaque simulator handle.
 */
typedef struct HvacEnv HvacEnv;

/**
 * Simulation state after a reset or step.
 */
typedef struct HvacState {
  double t_air;
  double t_wall;
  double t_out;
  double q_solar;
  /**
   * Time-of-day index, 0..144.
   */
  uint32_t k;
  uint8_t occupied;
  /**
   * 0 cold, 1 hot, 2 comfortable.
   */
  uint8_t comfort;
  /**
   * The agent's observation features.
   */
  double features[4];
} HvacState;

typedef struct HvacStep {
  /**
   * Action after clamping to the power bound.
   */
  double action;
  double reward;
  uint8_t done;
  struct HvacState state;
} HvacStep;

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library.
 */
const char *hvac_last_error(void);

/**
 * Creates a simulator. `config_path` may be null for the default
 * configuration, otherwise it names a TOML config file.
 *
 * # Safety
 * `config_path` is null or a NUL-terminated string; `out` is writable.
 */
enum HvacStatus hvac_env_new(const char *config_path, struct HvacEnv **out);

/**
 * # Safety
 * `env` is null or a handle from `hvac_env_new` not yet freed.
 */
void hvac_env_free(struct HvacEnv *env);

/**
 * Starts a new day. Day `day` under `seed` reproduces the harness's
 * evaluation day of the same index.
 *
 * # Safety
 * `env` is a live handle; `state` is null or writable.
 */
enum HvacStatus hvac_env_reset(struct HvacEnv *env,
                               uint64_t seed,
                               uint64_t day,
                               struct HvacState *state);

/**
 * Applies heating (+) or cooling (-) power `u` in watts for one step.
 *
 * # Safety
 * `env` is a live handle; `step` is writable.
 */
enum HvacStatus hvac_env_step(struct HvacEnv *env, double u, struct HvacStep *step);

/**
 * Greedy baseline action for the current state, using the configured
 * greedy parameters.
 *
 * # Safety
 * `env` is a live handle that has been reset; `action` is writable.
 */
enum HvacStatus hvac_env_greedy_action(const struct HvacEnv *env, double *action);

/**
 * Loads the actor from a training checkpoint.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum HvacStatus hvac_actor_load(const char *path, struct HvacActor **out);

/**
 * # Safety
 * `actor` is null or a handle from `hvac_actor_load` not yet freed.
 */
void hvac_actor_free(struct HvacActor *actor);

/**
 * Deterministic action for the 4 observation features in `features`.
 *
 * # Safety
 * `actor` is a live handle; `features` points to 4 doubles; `action` is writable.
 */
enum HvacStatus hvac_actor_act(const struct HvacActor *actor,
                               const double *features,
                               double *action);

/**
 * Probabilities of the cold, comfortable and hot votes at `t_air`, with the
 * default comfort parameters, written to `out[0..3]`.
 *
 * # Safety
 * `out` points to 3 writable doubles.
 */
enum HvacStatus hvac_comfort_pmf(double t_air, double *out);

/**
 * One explicit step of the default thermal circuit. `x` holds
 * (t_air, t_wall) and is updated in place.
 *
 * # Safety
 * `x` points to 2 readable and writable doubles.
 */
enum HvacStatus hvac_thermal_step(double *x,
                                  double u,
                                  double q_solar,
                                  double q_internal,
                                  double t_out);

#endif  /* HVAC_RL_H */
