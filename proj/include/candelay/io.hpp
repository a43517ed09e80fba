#pragma once

// File formats and small I/O helpers shared across the toolkit: the binary
// capture log, the feature CSV, weight listings, run manifests, digests,
// and locale-independent float text.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "candelay/capture.hpp"
#include "candelay/errors.hpp"
#include "candelay/features.hpp"

namespace candelay {

// Shortest round-trip decimal form, independent of locale.
std::string format_double(double v);
double parse_double(std::string_view text);
uint64_t parse_u64(std::string_view text);

uint64_t fnv1a64(std::span<const unsigned char> bytes);
uint64_t fnv1a64(std::string_view text);
std::string digest_hex(uint64_t digest);

// Digest of a file's raw bytes, as 16 lowercase hex digits.
std::string file_digest(const std::filesystem::path& path);

// Write via a sibling temp file and rename, so readers never observe a
// half-written file and reruns either fully replace or leave the old one.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// ---- capture log ---------------------------------------------------------
//
// Binary, big-endian. Layout:
//   magic "CDLY", u8 version, u8 label_count, label_count x (u8 len, bytes),
//   u32 message_count, then per message:
//     u32 message_index, u8 edge_count, u8 label_index (0xff = unknown),
//     (1 + edge_count) x u32 timer records; the first record is the
//     start-of-frame latch, the rest are rising edges.

inline constexpr char kCaptureMagic[4] = {'C', 'D', 'L', 'Y'};
inline constexpr uint8_t kCaptureVersion = 1;
inline constexpr uint8_t kUnknownLabel = 0xff;

struct CaptureLog {
  std::vector<std::string> labels;
  std::vector<MessageCapture> messages;
};

void write_capture_log(const CaptureLog& log, const std::filesystem::path& path);
CaptureLog read_capture_log(const std::filesystem::path& path);

// ---- feature table -------------------------------------------------------

struct FeatureRow {
  uint32_t message_index = 0;
  uint16_t arbitration_id = 0;
  std::string label;  // empty = unknown sender
  FeatureVector features;
};

std::string feature_csv_header();
void write_feature_csv(std::span<const FeatureRow> rows, const std::filesystem::path& path);
std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path);

// ---- weight listing ------------------------------------------------------

// One "name<TAB>weight" line per feature, descending weight (ties by table
// order).
std::string render_weights(const FeatureWeights& weights);

// ---- run manifest --------------------------------------------------------

struct RunManifest {
  std::string tool_version;
  std::string command;
  uint64_t seed = 0;
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> outputs;  // basename -> digest
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace candelay
