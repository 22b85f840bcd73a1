#ifndef ISOTRUSS_H
#define ISOTRUSS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define ISOTRUSS_API __attribute__((visibility("default")))
#else
#define ISOTRUSS_API
#endif

/* Status codes. Values 1..17 match the library's internal error codes. */
enum isotruss_status {
  ISOTRUSS_OK = 0,
  ISOTRUSS_ERR_INVALID_ARGUMENT = 1,
  ISOTRUSS_ERR_DUPLICATE_NODE = 2,
  ISOTRUSS_ERR_NODE_OUT_OF_RANGE = 3,
  ISOTRUSS_ERR_DEGENERATE_EDGE = 4,
  ISOTRUSS_ERR_INFEASIBLE = 5,
  ISOTRUSS_ERR_RECONSTRUCTION = 6,
  ISOTRUSS_ERR_LIMIT_VIOLATION = 7,
  ISOTRUSS_ERR_RANK_DEFICIENT = 8,
  ISOTRUSS_ERR_PARSE = 9,
  ISOTRUSS_ERR_IO = 10,
  ISOTRUSS_ERR_CHECKSUM = 11,
  ISOTRUSS_ERR_VERSION = 12,
  ISOTRUSS_ERR_SPEED_CAP = 13,
  ISOTRUSS_ERR_DOMAIN = 14,
  ISOTRUSS_ERR_CONSISTENCY = 15,
  ISOTRUSS_ERR_STABILITY = 16,
  ISOTRUSS_ERR_ABORTED = 17,
  ISOTRUSS_ERR_BUFFER_TOO_SMALL = 18,
  ISOTRUSS_ERR_INTERNAL = 99
};

enum isotruss_frame_mode { ISOTRUSS_MODE_VELOCITY = 0, ISOTRUSS_MODE_POSITION = 1 };

typedef struct isotruss_session isotruss_session;
typedef struct isotruss_server isotruss_server;

ISOTRUSS_API const char* isotruss_version(void);
ISOTRUSS_API const char* isotruss_status_name(int status);
/* Message of the last failing call on this thread; "" if none. */
ISOTRUSS_API const char* isotruss_last_error(void);

/*
 * Functions that produce text write it NUL-terminated into buf. *needed (if
 * non-NULL) receives the size including the terminator; when len is smaller
 * the call returns ISOTRUSS_ERR_BUFFER_TOO_SMALL and writes nothing.
 */

/*
 * Runs a script file headlessly and writes the trajectory CSV to out_path.
 * config is "single", "solar", "locomotion" or a config file path. dt <= 0
 * keeps the configured step; limits_path may be NULL. Returns ISOTRUSS_OK
 * when the trajectory was written; *aborted is then 1 if the run stopped
 * early, with the reason in isotruss_last_error(). Config, script or I/O
 * problems return their status and leave no output file.
 */
ISOTRUSS_API int isotruss_run(const char* config, const char* script_path, double dt,
                              const char* out_path, const char* limits_path, int* aborted);

/* Plain-text metrics report (key: value lines). */
ISOTRUSS_API int isotruss_metrics(const char* config, char* buf, size_t len, size_t* needed);

ISOTRUSS_API int isotruss_endurance(double capacity_ah, double motor_a, double radio_a,
                                    double* minutes);

/* Roller command frames, 11 bytes. value is m/s (velocity) or m (position). */
ISOTRUSS_API int isotruss_frame_encode(int unit, int mode, double value, uint16_t sequence,
                                       uint8_t out[11]);
ISOTRUSS_API int isotruss_frame_decode(const uint8_t* bytes, size_t len, int* unit, int* mode,
                                       double* value, uint16_t* sequence);

/* In-process session speaking the JSON protocol messages. */
ISOTRUSS_API int isotruss_session_create(const char* config, isotruss_session** out);
ISOTRUSS_API void isotruss_session_destroy(isotruss_session* session);
/* Applies one client message as the writer; buf receives a JSON array of the
 * resulting server messages. */
ISOTRUSS_API int isotruss_session_handle(isotruss_session* session, const char* message,
                                         char* buf, size_t len, size_t* needed);
/* Advances one tick; buf receives a JSON array whose first element is the
 * state_frame, followed by any events. */
ISOTRUSS_API int isotruss_session_tick(isotruss_session* session, char* buf, size_t len,
                                       size_t* needed);
ISOTRUSS_API int isotruss_session_node_count(const isotruss_session* session, int* count);
/* Copies 3 * node_count doubles. */
ISOTRUSS_API int isotruss_session_positions(const isotruss_session* session, double* out,
                                            size_t len);

/* TCP session endpoint. port 0 picks a free port. */
ISOTRUSS_API int isotruss_server_create(const char* config, const char* host, int port,
                                        isotruss_server** out);
ISOTRUSS_API int isotruss_server_start(isotruss_server* server);
ISOTRUSS_API int isotruss_server_port(const isotruss_server* server, int* port);
ISOTRUSS_API int isotruss_server_stop(isotruss_server* server);
ISOTRUSS_API void isotruss_server_destroy(isotruss_server* server);

#ifdef __cplusplus
}
#endif

#endif /* ISOTRUSS_H */
