#pragma once

// End-to-end stages behind the CLI subcommands. Every stage that writes an
// output also writes `<output>.manifest.json` recording the tool version,
// command, seed, config digest, and output digests; identical inputs must
// reproduce identical bytes.

#include <cstdint>
#include <filesystem>
#include <string>

#include "candelay/classify.hpp"
#include "candelay/config.hpp"
#include "candelay/ids.hpp"

namespace candelay {

inline constexpr const char* kToolVersion = "0.1.0";

std::filesystem::path manifest_path_for(const std::filesystem::path& output);

// Synthesizes fleet traffic and writes the binary capture log. Returns the
// number of captured messages.
size_t run_simulate(const ExperimentConfig& config, uint64_t seed,
                    const std::filesystem::path& out_log);

// Capture log -> per-message feature rows. Returns the row count.
size_t run_extract(const ExperimentConfig& config, const std::filesystem::path& in_log,
                   const std::filesystem::path& out_csv);

// Feature weighting over all eight statistics; rows must be labeled.
FeatureWeights run_rank(const ExperimentConfig& config, uint64_t seed,
                        const std::filesystem::path& in_csv,
                        const std::filesystem::path& out_weights);

// Stratified cross-validation on the configured feature subset; optionally
// trains a final model on the full table.
CrossValResult run_crossval(const ExperimentConfig& config, uint64_t seed,
                            const std::filesystem::path& in_csv,
                            const std::filesystem::path& out_summary,
                            const std::filesystem::path* model_out);

// Runs the configured attack scenario against a trained model and writes
// the detection report.
DetectionReport run_detect(const ExperimentConfig& config, uint64_t seed,
                           const std::filesystem::path& model_path,
                           const std::filesystem::path& out_report);

// Renders a saved report as a table; writes it when out_table is given.
std::string run_report(const std::filesystem::path& in_report,
                       const std::filesystem::path* out_table);

std::string render_crossval_summary(const CrossValResult& result);

}  // namespace candelay
