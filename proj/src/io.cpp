#include "candelay/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <system_error>

#include <json.hpp>

namespace candelay {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

void put_u32_be(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

class Cursor {
 public:
  explicit Cursor(std::string_view data) : data_(data) {}

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(data_[pos_++]);
  }
  uint32_t u32_be() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<uint8_t>(data_[pos_++]);
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(size_t n) {
    if (data_.size() - pos_ < n) throw DataError("capture log: truncated");
  }
  std::string_view data_;
  size_t pos_ = 0;
};

double& field(FeatureVector& fv, int index) {
  switch (static_cast<Feature>(index)) {
    case Feature::Mean: return fv.mean;
    case Feature::StdDev: return fv.std_dev;
    case Feature::Variance: return fv.variance;
    case Feature::Skewness: return fv.skewness;
    case Feature::Kurtosis: return fv.kurtosis;
    case Feature::Rms: return fv.rms;
    case Feature::Max: return fv.max;
    case Feature::Energy: return fv.energy;
  }
  throw std::invalid_argument("bad feature index");
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw DataError("bad floating point value: '" + std::string(text) + "'");
  return v;
}

uint64_t parse_u64(std::string_view text) {
  text = trim(text);
  uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw DataError("bad integer value: '" + std::string(text) + "'");
  return v;
}

uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64(std::string_view text) {
  return fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string digest_hex(uint64_t digest) {
  static const char* kHex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = kHex[digest & 0xf];
    digest >>= 4;
  }
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  return digest_hex(fnv1a64(read_file(path)));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw std::ios_base::failure("read failed: " + path.string());
  return data;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::ios_base::failure("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_capture_log(const CaptureLog& log, const std::filesystem::path& path) {
  if (log.labels.size() > 254) throw DataError("capture log: too many labels");
  std::set<std::string> seen;
  for (const auto& label : log.labels) {
    if (label.empty() || label.size() > 255)
      throw DataError("capture log: bad label length");
    if (!seen.insert(label).second)
      throw DataError("capture log: duplicate label '" + label + "'");
  }
  if (log.messages.size() > 0xffffffffull)
    throw DataError("capture log: too many messages");

  std::string out;
  out.append(kCaptureMagic, sizeof kCaptureMagic);
  out.push_back(static_cast<char>(kCaptureVersion));
  out.push_back(static_cast<char>(log.labels.size()));
  for (const auto& label : log.labels) {
    out.push_back(static_cast<char>(label.size()));
    out.append(label);
  }
  put_u32_be(out, static_cast<uint32_t>(log.messages.size()));

  for (size_t i = 0; i < log.messages.size(); ++i) {
    const MessageCapture& msg = log.messages[i];
    if (msg.edge_counters.empty() || msg.edge_counters.size() > 255)
      throw DataError("capture log: bad edge count");
    uint8_t label_index = kUnknownLabel;
    if (msg.true_sender) {
      const auto it = std::find(log.labels.begin(), log.labels.end(), *msg.true_sender);
      if (it == log.labels.end())
        throw DataError("capture log: sender '" + *msg.true_sender + "' not in label set");
      label_index = static_cast<uint8_t>(it - log.labels.begin());
    }
    put_u32_be(out, static_cast<uint32_t>(i));
    out.push_back(static_cast<char>(msg.edge_counters.size()));
    out.push_back(static_cast<char>(label_index));
    put_u32_be(out, encode_record(msg.arbitration_id, msg.sof_counter));
    for (uint32_t counter : msg.edge_counters)
      put_u32_be(out, encode_record(msg.arbitration_id, counter));
  }
  atomic_write(path, out);
}

CaptureLog read_capture_log(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Cursor cur(data);

  if (cur.bytes(4) != std::string_view(kCaptureMagic, sizeof kCaptureMagic))
    throw DataError("capture log: bad magic");
  if (cur.u8() != kCaptureVersion) throw DataError("capture log: unsupported version");

  CaptureLog log;
  const uint8_t label_count = cur.u8();
  if (label_count == kUnknownLabel) throw DataError("capture log: bad label count");
  for (uint8_t i = 0; i < label_count; ++i) {
    const uint8_t len = cur.u8();
    if (len == 0) throw DataError("capture log: empty label");
    log.labels.push_back(cur.bytes(len));
  }

  const uint32_t message_count = cur.u32_be();
  log.messages.reserve(message_count);
  for (uint32_t i = 0; i < message_count; ++i) {
    if (cur.u32_be() != i) throw DataError("capture log: message index out of order");
    const uint8_t edge_count = cur.u8();
    if (edge_count == 0) throw DataError("capture log: message without edges");
    const uint8_t label_index = cur.u8();
    if (label_index != kUnknownLabel && label_index >= label_count)
      throw DataError("capture log: label index out of range");

    MessageCapture msg;
    const auto [id, sof] = decode_record(cur.u32_be());
    msg.arbitration_id = id;
    msg.sof_counter = sof;
    for (uint8_t e = 0; e < edge_count; ++e) {
      const auto [edge_id, counter] = decode_record(cur.u32_be());
      if (edge_id != id) throw DataError("capture log: id mismatch within message");
      msg.edge_counters.push_back(counter);
    }
    if (label_index != kUnknownLabel) msg.true_sender = log.labels[label_index];
    log.messages.push_back(std::move(msg));
  }
  if (!cur.done()) throw DataError("capture log: trailing bytes");
  return log;
}

std::string feature_csv_header() {
  std::string header = "message_index,arbitration_id,label";
  for (Feature f : kAllFeatures) {
    header.push_back(',');
    header.append(feature_name(f));
  }
  return header;
}

void write_feature_csv(std::span<const FeatureRow> rows, const std::filesystem::path& path) {
  std::string out = feature_csv_header();
  out.push_back('\n');
  for (const FeatureRow& row : rows) {
    out.append(std::to_string(row.message_index));
    out.push_back(',');
    out.append(std::to_string(row.arbitration_id));
    out.push_back(',');
    out.append(row.label.empty() ? "?" : row.label);
    for (Feature f : kAllFeatures) {
      out.push_back(',');
      out.append(format_double(row.features.value(f)));
    }
    out.push_back('\n');
  }
  atomic_write(path, out);
}

std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::vector<FeatureRow> rows;

  size_t line_no = 0;
  size_t start = 0;
  while (start < data.size()) {
    size_t end = data.find('\n', start);
    if (end == std::string::npos) end = data.size();
    const std::string_view line = trim(std::string_view(data).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    if (line_no == 1) {
      if (line != feature_csv_header()) throw DataError("feature csv: bad header");
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 3 + kFeatureCount)
      throw DataError("feature csv: wrong column count on line " + std::to_string(line_no));

    FeatureRow row;
    const uint64_t index = parse_u64(fields[0]);
    if (index > 0xffffffffull) throw DataError("feature csv: message index out of range");
    row.message_index = static_cast<uint32_t>(index);
    const uint64_t id = parse_u64(fields[1]);
    if (id > kMaxBaseId) throw DataError("feature csv: arbitration id out of range");
    row.arbitration_id = static_cast<uint16_t>(id);
    if (fields[2] != "?") row.label = std::string(fields[2]);
    for (int f = 0; f < kFeatureCount; ++f)
      field(row.features, f) = parse_double(fields[static_cast<size_t>(3 + f)]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_weights(const FeatureWeights& weights) {
  std::array<int, kFeatureCount> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return weights[static_cast<size_t>(a)] > weights[static_cast<size_t>(b)];
  });
  std::string out;
  for (int i : order) {
    out.append(feature_name(static_cast<Feature>(i)));
    out.push_back('\t');
    out.append(format_double(weights[static_cast<size_t>(i)]));
    out.push_back('\n');
  }
  return out;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& [name, digest] : manifest.outputs) outputs[name] = digest;
  const nlohmann::json doc = {
      {"command", manifest.command},
      {"config_digest", manifest.config_digest},
      {"outputs", outputs},
      {"seed", manifest.seed},
      {"tool_version", manifest.tool_version},
  };
  atomic_write(path, doc.dump(2) + "\n");
}

}  // namespace candelay
