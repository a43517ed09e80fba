#ifndef CANDELAY_H
#define CANDELAY_H

/* C interface to the candelay toolkit. All functions return a status code
 * (candelay_status); on failure candelay_last_error() describes the problem
 * for the calling thread. Strings returned through char** are heap copies
 * and must be released with candelay_string_free(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CANDELAY_API_VERSION 1

typedef enum candelay_status {
  CANDELAY_OK = 0,
  CANDELAY_ERR_CONFIG = 2,   /* invalid configuration or scenario */
  CANDELAY_ERR_DATA = 3,     /* malformed input data or file contents */
  CANDELAY_ERR_ARG = 4,      /* bad argument to an API call */
  CANDELAY_ERR_IO = 5,       /* filesystem failure */
  CANDELAY_ERR_INTERNAL = 6, /* unexpected failure */
} candelay_status;

const char* candelay_version(void);
const char* candelay_status_name(int status);

/* Message for the most recent failing call on this thread; empty string if
 * none. The pointer stays valid until the thread's next API call. */
const char* candelay_last_error(void);

void candelay_string_free(char* text);

/* ---- configuration ---- */

typedef struct candelay_config candelay_config;

int candelay_config_load(const char* path, candelay_config** out);
int candelay_config_parse(const char* json_text, candelay_config** out);
void candelay_config_free(candelay_config* config);

int candelay_config_seed(const candelay_config* config, uint64_t* out);
int candelay_config_messages_per_id(const candelay_config* config, int32_t* out);
/* Canonical JSON form of the config (the bytes whose digest manifests record). */
int candelay_config_canonical(const candelay_config* config, char** out);

/* ---- pipeline stages ----
 * Each stage writes its output file plus `<output>.manifest.json`. Out
 * parameters marked nullable may be NULL. */

int candelay_simulate(const candelay_config* config, uint64_t seed, const char* out_log,
                      uint32_t* message_count /* nullable */);
int candelay_extract(const candelay_config* config, const char* in_log,
                     const char* out_csv, uint32_t* row_count /* nullable */);
int candelay_rank(const candelay_config* config, uint64_t seed, const char* in_csv,
                  const char* out_weights);
int candelay_crossval(const candelay_config* config, uint64_t seed, const char* in_csv,
                      const char* out_summary, const char* model_out /* nullable */,
                      double* mean_accuracy /* nullable */);
int candelay_detect(const candelay_config* config, uint64_t seed, const char* model_path,
                    const char* out_report, double* tpr /* nullable */,
                    double* tnr /* nullable */);
int candelay_report_render(const char* report_path, const char* out_path /* nullable */,
                           char** rendered /* nullable */);

/* ---- fine-grained helpers ---- */

/* 32-bit capture word: 11-bit arbitration id, 21-bit counter. */
int candelay_record_encode(uint16_t arbitration_id, uint32_t counter, uint32_t* word);
int candelay_record_decode(uint32_t word, uint16_t* arbitration_id /* nullable */,
                           uint32_t* counter /* nullable */);

/* Offset of an edge from the nearest bit boundary given the elapsed time
 * since the start-of-frame latch. */
int candelay_delay_ns(int64_t elapsed_ns, int64_t bit_time_ns,
                      double* delay_ns /* nullable */,
                      int32_t* elapsed_bits /* nullable */);

/* Frequency deviation (Hz) and per-bit period error (ns) of a crystal with
 * the given tolerance in ppm. */
int candelay_clock_error(double f_bit_hz, double f_tol_ppm,
                         double* delta_f_hz /* nullable */,
                         double* t_e_ns /* nullable */);

/* Rising edges of a data frame inside the capture window. data may be NULL
 * when dlc is 0. */
int candelay_frame_edge_count(uint16_t arbitration_id, const uint8_t* data, size_t dlc,
                              int window_bits, uint32_t* count);

#ifdef __cplusplus
}
#endif

#endif /* CANDELAY_H */
