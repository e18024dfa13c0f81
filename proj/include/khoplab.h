/* khoplab — multi-hop reasoning laboratory, C interface.
 *
 * All functionality is reachable through an opaque session handle created
 * from a JSON run configuration. Subcommands write their artifacts into a
 * run directory derived from the configuration's content hash; re-running
 * a subcommand with an identical configuration reproduces identical files.
 *
 * Every call returns KHOP_OK on success; on failure the session (or the
 * thread-local fallback for session-less calls) stores a human-readable
 * message retrievable via khop_session_error / khop_last_error.
 */
#ifndef KHOPLAB_H
#define KHOPLAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define KHOPLAB_API __declspec(dllexport)
#else
#define KHOPLAB_API __attribute__((visibility("default")))
#endif

typedef enum khop_status {
    KHOP_OK = 0,
    KHOP_ERR_INVALID_ARGUMENT = 1,
    KHOP_ERR_CONFIG = 2,
    KHOP_ERR_IO = 3,
    KHOP_ERR_STATE = 4,
    KHOP_ERR_INTERNAL = 5
} khop_status;

KHOPLAB_API const char* khop_version(void);
KHOPLAB_API const char* khop_status_name(khop_status status);

/* Message from the most recent failing session-less call on this thread. */
KHOPLAB_API const char* khop_last_error(void);

typedef struct khop_session khop_session;

/* Create a session from a JSON config file / literal JSON text. */
KHOPLAB_API khop_status khop_session_open(const char* config_path, khop_session** out);
KHOPLAB_API khop_status khop_session_open_text(const char* config_json, khop_session** out);
KHOPLAB_API void khop_session_close(khop_session* session);

/* Message from the most recent failing call on this session. */
KHOPLAB_API const char* khop_session_error(const khop_session* session);

/* Override an execution option: "out", "seed", "workers", "resume". */
KHOPLAB_API khop_status khop_session_set(khop_session* session, const char* key,
                                         const char* value);

typedef void (*khop_log_fn)(const char* line, void* user);
KHOPLAB_API void khop_session_set_logger(khop_session* session, khop_log_fn fn, void* user);

/* Run one of: gen, train, eval, sweep, probe, patch, oracle. */
KHOPLAB_API khop_status khop_session_run(khop_session* session, const char* subcommand);

/* Run directory a subcommand writes to (valid until the next call). */
KHOPLAB_API const char* khop_session_run_dir(khop_session* session, const char* subcommand);

/* Theory helpers, exposed directly for quick checks. */
KHOPLAB_API khop_status khop_fibonacci_count(uint32_t k, uint64_t* out);
KHOPLAB_API khop_status khop_depth_lower_bound(uint32_t k, uint32_t precision_bits,
                                               uint32_t d_model, uint32_t heads, uint64_t* num,
                                               uint64_t* den);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KHOPLAB_H */
