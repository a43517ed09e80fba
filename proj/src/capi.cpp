#include "candelay.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <system_error>

#include "candelay/capture.hpp"
#include "candelay/config.hpp"
#include "candelay/errors.hpp"
#include "candelay/frame.hpp"
#include "candelay/physim.hpp"
#include "candelay/pipeline.hpp"

struct candelay_config {
  candelay::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

int fail(int status, const char* message) {
  g_last_error = message;
  return status;
}

// Runs the body and maps thrown errors onto status codes.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CANDELAY_OK;
  } catch (const candelay::ConfigError& e) {
    g_last_error = e.what();
    return CANDELAY_ERR_CONFIG;
  } catch (const candelay::DataError& e) {
    g_last_error = e.what();
    return CANDELAY_ERR_DATA;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return CANDELAY_ERR_ARG;
  } catch (const std::system_error& e) {
    g_last_error = e.what();
    return CANDELAY_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CANDELAY_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CANDELAY_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& text) {
  char* out = new (std::nothrow) char[text.size() + 1];
  if (out) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* candelay_version(void) { return candelay::kToolVersion; }

const char* candelay_status_name(int status) {
  switch (status) {
    case CANDELAY_OK: return "ok";
    case CANDELAY_ERR_CONFIG: return "config-error";
    case CANDELAY_ERR_DATA: return "data-error";
    case CANDELAY_ERR_ARG: return "argument-error";
    case CANDELAY_ERR_IO: return "io-error";
    case CANDELAY_ERR_INTERNAL: return "internal-error";
    default: return "unknown-status";
  }
}

const char* candelay_last_error(void) { return g_last_error.c_str(); }

void candelay_string_free(char* text) { delete[] text; }

int candelay_config_load(const char* path, candelay_config** out) {
  if (!path || !out) return fail(CANDELAY_ERR_ARG, "config_load: null argument");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new candelay_config{candelay::load_config(path)};
    *out = handle;
  });
}

int candelay_config_parse(const char* json_text, candelay_config** out) {
  if (!json_text || !out) return fail(CANDELAY_ERR_ARG, "config_parse: null argument");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new candelay_config{candelay::parse_config(json_text)};
    *out = handle;
  });
}

void candelay_config_free(candelay_config* config) { delete config; }

int candelay_config_seed(const candelay_config* config, uint64_t* out) {
  if (!config || !out) return fail(CANDELAY_ERR_ARG, "config_seed: null argument");
  *out = config->cfg.pipeline.seed;
  g_last_error.clear();
  return CANDELAY_OK;
}

int candelay_config_messages_per_id(const candelay_config* config, int32_t* out) {
  if (!config || !out)
    return fail(CANDELAY_ERR_ARG, "config_messages_per_id: null argument");
  *out = config->cfg.pipeline.messages_per_id;
  g_last_error.clear();
  return CANDELAY_OK;
}

int candelay_config_canonical(const candelay_config* config, char** out) {
  if (!config || !out) return fail(CANDELAY_ERR_ARG, "config_canonical: null argument");
  *out = nullptr;
  return guarded([&] {
    char* text = dup_string(candelay::config_to_json(config->cfg));
    if (!text) throw std::bad_alloc();
    *out = text;
  });
}

int candelay_simulate(const candelay_config* config, uint64_t seed, const char* out_log,
                      uint32_t* message_count) {
  if (!config || !out_log) return fail(CANDELAY_ERR_ARG, "simulate: null argument");
  return guarded([&] {
    const size_t n = candelay::run_simulate(config->cfg, seed, out_log);
    if (message_count) *message_count = static_cast<uint32_t>(n);
  });
}

int candelay_extract(const candelay_config* config, const char* in_log,
                     const char* out_csv, uint32_t* row_count) {
  if (!config || !in_log || !out_csv)
    return fail(CANDELAY_ERR_ARG, "extract: null argument");
  return guarded([&] {
    const size_t n = candelay::run_extract(config->cfg, in_log, out_csv);
    if (row_count) *row_count = static_cast<uint32_t>(n);
  });
}

int candelay_rank(const candelay_config* config, uint64_t seed, const char* in_csv,
                  const char* out_weights) {
  if (!config || !in_csv || !out_weights)
    return fail(CANDELAY_ERR_ARG, "rank: null argument");
  return guarded([&] { candelay::run_rank(config->cfg, seed, in_csv, out_weights); });
}

int candelay_crossval(const candelay_config* config, uint64_t seed, const char* in_csv,
                      const char* out_summary, const char* model_out,
                      double* mean_accuracy) {
  if (!config || !in_csv || !out_summary)
    return fail(CANDELAY_ERR_ARG, "crossval: null argument");
  return guarded([&] {
    const std::filesystem::path model_path = model_out ? model_out : "";
    const candelay::CrossValResult result = candelay::run_crossval(
        config->cfg, seed, in_csv, out_summary, model_out ? &model_path : nullptr);
    if (mean_accuracy) *mean_accuracy = result.mean_accuracy;
  });
}

int candelay_detect(const candelay_config* config, uint64_t seed, const char* model_path,
                    const char* out_report, double* tpr, double* tnr) {
  if (!config || !model_path || !out_report)
    return fail(CANDELAY_ERR_ARG, "detect: null argument");
  return guarded([&] {
    const candelay::DetectionReport report =
        candelay::run_detect(config->cfg, seed, model_path, out_report);
    if (tpr) *tpr = report.tpr();
    if (tnr) *tnr = report.tnr();
  });
}

int candelay_report_render(const char* report_path, const char* out_path,
                           char** rendered) {
  if (!report_path) return fail(CANDELAY_ERR_ARG, "report_render: null argument");
  if (rendered) *rendered = nullptr;
  return guarded([&] {
    const std::filesystem::path out = out_path ? out_path : "";
    const std::string table =
        candelay::run_report(report_path, out_path ? &out : nullptr);
    if (rendered) {
      char* text = dup_string(table);
      if (!text) throw std::bad_alloc();
      *rendered = text;
    }
  });
}

int candelay_record_encode(uint16_t arbitration_id, uint32_t counter, uint32_t* word) {
  if (!word) return fail(CANDELAY_ERR_ARG, "record_encode: null argument");
  return guarded([&] { *word = candelay::encode_record(arbitration_id, counter); });
}

int candelay_record_decode(uint32_t word, uint16_t* arbitration_id, uint32_t* counter) {
  const candelay::CaptureRecord rec = candelay::decode_record(word);
  if (arbitration_id) *arbitration_id = rec.arbitration_id;
  if (counter) *counter = rec.counter;
  g_last_error.clear();
  return CANDELAY_OK;
}

int candelay_delay_ns(int64_t elapsed_ns, int64_t bit_time_ns, double* delay_ns,
                      int32_t* elapsed_bits) {
  if (bit_time_ns < 1) return fail(CANDELAY_ERR_ARG, "delay_ns: bit time must be positive");
  return guarded([&] {
    const candelay::DelaySample sample = candelay::delay_of(elapsed_ns, bit_time_ns);
    if (delay_ns) *delay_ns = sample.delay_ns;
    if (elapsed_bits) *elapsed_bits = sample.elapsed_bits;
  });
}

int candelay_clock_error(double f_bit_hz, double f_tol_ppm, double* delta_f_hz,
                         double* t_e_ns) {
  return guarded([&] {
    const candelay::ClockError err = candelay::clock_error(f_bit_hz, f_tol_ppm);
    if (delta_f_hz) *delta_f_hz = err.delta_f_hz;
    if (t_e_ns) *t_e_ns = err.t_e_ns;
  });
}

int candelay_frame_edge_count(uint16_t arbitration_id, const uint8_t* data, size_t dlc,
                              int window_bits, uint32_t* count) {
  if (!count) return fail(CANDELAY_ERR_ARG, "frame_edge_count: null argument");
  if (dlc > candelay::kMaxDlc || (dlc > 0 && !data))
    return fail(CANDELAY_ERR_ARG, "frame_edge_count: bad payload");
  return guarded([&] {
    candelay::FrameSpec frame;
    frame.arbitration_id = arbitration_id;
    frame.dlc = static_cast<uint8_t>(dlc);
    frame.data.assign(data, data + dlc);
    const candelay::BitStream stuffed = candelay::serialize_stuffed(frame);
    *count = static_cast<uint32_t>(
        candelay::rising_edges(stuffed, static_cast<size_t>(window_bits)).size());
  });
}

}  // extern "C"
