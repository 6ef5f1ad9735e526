#ifndef ADVNET_ADVNET_H
#define ADVNET_ADVNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ADVNET_API __declspec(dllexport)
#else
#define ADVNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct advnet_scenario advnet_scenario;
typedef struct advnet_trace advnet_trace;

typedef enum advnet_status {
  ADVNET_OK = 0,
  ADVNET_INVALID_ARGUMENT = 1, /* null handle, bad shape, unknown name */
  ADVNET_PARSE = 2,            /* malformed scenario, trace or override */
  ADVNET_IO = 3,               /* unreadable or unwritable path */
  ADVNET_CONTRACT = 4,         /* precondition broken during a run */
  ADVNET_CONSTRUCTION = 5,     /* infeasible parameters */
  ADVNET_INVARIANT = 6,        /* internal invariant failed */
  ADVNET_INTERNAL = 7
} advnet_status;

typedef struct advnet_run_summary {
  size_t rounds;
  double avg_queue;
  double avg_queue_quarter;
  double avg_utility_gap;
  double olo_regret;
  double bco_regret;
  size_t resets;
  double max_alpha;
  double final_lyapunov;
  double drift_sum;
  double max_increment;
  size_t invariant_violations;
  size_t warnings;
  int privileged;
  char trace_hash[41];
} advnet_run_summary;

typedef struct advnet_trace_verdict {
  int accepted;
  double slack;
  size_t window;
  size_t server;
  size_t commodity;
  double deficit;
  size_t invariant_problems; /* partition, window-constant and path-budget failures */
} advnet_trace_verdict;

typedef struct advnet_sweep_result {
  size_t runs;
  size_t runs_with_violations;
} advnet_sweep_result;

/* Receives warnings (for example the V sanity check). Null clears it. */
typedef void (*advnet_message_fn)(const char* message, void* user);
ADVNET_API void advnet_set_message_handler(advnet_message_fn fn, void* user);

/* Message of the last failed call on this thread; never null. */
ADVNET_API const char* advnet_last_error(void);
ADVNET_API const char* advnet_version(void);

ADVNET_API advnet_status advnet_scenario_load(const char* path, advnet_scenario** out);
ADVNET_API advnet_status advnet_scenario_from_string(const char* json, advnet_scenario** out);
/* "a.b.c=value"; the value is JSON when it parses, else a string. */
ADVNET_API advnet_status advnet_scenario_override(advnet_scenario* s, const char* assignment);
ADVNET_API advnet_status advnet_scenario_set_seed(advnet_scenario* s, uint64_t seed);
ADVNET_API void advnet_scenario_free(advnet_scenario* s);

ADVNET_API advnet_status advnet_trace_generate(const advnet_scenario* s, advnet_trace** out);
ADVNET_API advnet_status advnet_trace_load(const char* path, advnet_trace** out);
ADVNET_API advnet_status advnet_trace_save(const advnet_trace* t, const char* path);
ADVNET_API advnet_status advnet_trace_verify(const advnet_trace* t, advnet_trace_verdict* out);
/* 40 hex digits plus terminator. */
ADVNET_API advnet_status advnet_trace_hash(const advnet_trace* t, char out[41]);
ADVNET_API void advnet_trace_free(advnet_trace* t);

/* Runs the scenario on `trace` (generated from the scenario when null).
   Writes rounds.csv and manifest.json into out_dir unless it is null. */
ADVNET_API advnet_status advnet_run(const advnet_scenario* s, const advnet_trace* trace,
                                    const char* out_dir, advnet_run_summary* out);

/* axis: "V", "T", "seed" or "scheduler". Writes sweep.csv into out_dir unless null. */
ADVNET_API advnet_status advnet_sweep(const advnet_scenario* s, const char* axis,
                                      const char* const* values, size_t count,
                                      const char* out_dir, advnet_sweep_result* out);

#ifdef __cplusplus
}
#endif

#endif
