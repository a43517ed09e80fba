// candelay: CAN sender-identification pipeline driver.
//
// Everything goes through the public C interface so the CLI doubles as a
// living example of driving the shared library.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "candelay.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

int exit_code_for(int status) {
  switch (status) {
    case CANDELAY_OK:
      return 0;
    case CANDELAY_ERR_CONFIG:
    case CANDELAY_ERR_ARG:
      return kExitUsage;
    default:
      return kExitData;
  }
}

int complain(int status) {
  std::fprintf(stderr, "candelay: %s: %s\n", candelay_status_name(status),
               candelay_last_error());
  return exit_code_for(status);
}

struct ConfigHandle {
  candelay_config* cfg = nullptr;
  ~ConfigHandle() { candelay_config_free(cfg); }
};

// Loads the config and resolves the effective seed (--seed wins over the
// config's pipeline seed).
int open_config(const std::string& path, bool seed_given, uint64_t seed_flag,
                ConfigHandle& handle, uint64_t& seed) {
  const int status = candelay_config_load(path.c_str(), &handle.cfg);
  if (status != CANDELAY_OK) return status;
  if (seed_given) {
    seed = seed_flag;
    return CANDELAY_OK;
  }
  return candelay_config_seed(handle.cfg, &seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-time based CAN sender identification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // --config/--seed are accepted after the subcommand too
  app.set_version_flag("--version", std::string(candelay_version()));

  std::string config_path;
  uint64_t seed_flag = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "Experiment config (JSON)")->expected(1);
  app.add_option("--seed", seed_flag, "Override the config's pipeline seed");

  std::string out_path, in_path, model_path;

  CLI::App* simulate = app.add_subcommand("simulate", "Synthesize traffic into a capture log");
  simulate->add_option("--out", out_path, "Capture log to write")->required();

  CLI::App* extract = app.add_subcommand("extract", "Compute per-message delay features");
  extract->add_option("--in", in_path, "Capture log to read")->required();
  extract->add_option("--out", out_path, "Feature CSV to write")->required();

  CLI::App* rank = app.add_subcommand("rank", "Weight features by class separation");
  rank->add_option("--in", in_path, "Labeled feature CSV")->required();
  rank->add_option("--out", out_path, "Weight listing to write")->required();

  std::string model_out;
  CLI::App* crossval = app.add_subcommand("crossval", "Stratified cross-validation");
  crossval->add_option("--in", in_path, "Labeled feature CSV")->required();
  crossval->add_option("--out", out_path, "Summary file to write")->required();
  crossval->add_option("--model-out", model_out, "Also train and save a model");

  CLI::App* detect = app.add_subcommand("detect", "Run the configured attack scenario");
  detect->add_option("--model", model_path, "Trained model file")->required();
  detect->add_option("--out", out_path, "Detection report to write")->required();

  CLI::App* report = app.add_subcommand("report", "Render a detection report");
  report->add_option("--in", in_path, "Report file to read")->required();
  report->add_option("--out", out_path, "Rendered table destination (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  seed_given = app.count("--seed") > 0;

  const bool needs_config = !report->parsed();
  ConfigHandle handle;
  uint64_t seed = 0;
  if (needs_config) {
    if (config_path.empty()) {
      std::fprintf(stderr, "candelay: --config is required for this command\n");
      return kExitUsage;
    }
    const int status = open_config(config_path, seed_given, seed_flag, handle, seed);
    if (status != CANDELAY_OK) return complain(status);
  }

  if (simulate->parsed()) {
    uint32_t count = 0;
    const int status = candelay_simulate(handle.cfg, seed, out_path.c_str(), &count);
    if (status != CANDELAY_OK) return complain(status);
    std::printf("wrote %s (%" PRIu32 " messages, seed %" PRIu64 ")\n", out_path.c_str(),
                count, seed);
    return 0;
  }

  if (extract->parsed()) {
    uint32_t rows = 0;
    const int status =
        candelay_extract(handle.cfg, in_path.c_str(), out_path.c_str(), &rows);
    if (status != CANDELAY_OK) return complain(status);
    std::printf("wrote %s (%" PRIu32 " rows)\n", out_path.c_str(), rows);
    return 0;
  }

  if (rank->parsed()) {
    const int status =
        candelay_rank(handle.cfg, seed, in_path.c_str(), out_path.c_str());
    if (status != CANDELAY_OK) return complain(status);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
  }

  if (crossval->parsed()) {
    double mean_accuracy = 0.0;
    const int status = candelay_crossval(handle.cfg, seed, in_path.c_str(),
                                         out_path.c_str(),
                                         model_out.empty() ? nullptr : model_out.c_str(),
                                         &mean_accuracy);
    if (status != CANDELAY_OK) return complain(status);
    std::printf("wrote %s (mean accuracy %.4f)\n", out_path.c_str(), mean_accuracy);
    if (!model_out.empty()) std::printf("wrote %s\n", model_out.c_str());
    return 0;
  }

  if (detect->parsed()) {
    double tpr = 0.0, tnr = 0.0;
    const int status = candelay_detect(handle.cfg, seed, model_path.c_str(),
                                       out_path.c_str(), &tpr, &tnr);
    if (status != CANDELAY_OK) return complain(status);
    std::printf("wrote %s (tpr %.4f, tnr %.4f)\n", out_path.c_str(), tpr, tnr);
    return 0;
  }

  // report
  char* rendered = nullptr;
  const int status = candelay_report_render(
      in_path.c_str(), out_path.empty() ? nullptr : out_path.c_str(), &rendered);
  if (status != CANDELAY_OK) return complain(status);
  if (out_path.empty())
    std::fputs(rendered, stdout);
  else
    std::printf("wrote %s\n", out_path.c_str());
  candelay_string_free(rendered);
  return 0;
}
