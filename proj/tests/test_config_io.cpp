#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "candelay/config.hpp"
#include "candelay/io.hpp"
#include "candelay/rng.hpp"

using namespace candelay;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / (std::string("candelay-test-") + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

void dump(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

const char* kBaseConfig = R"({
  "bus": {
    "ecus": [
      {"label": "left", "fall_delay_ns": 95, "rise_delay_ns": 112,
       "jitter_sigma_ns": 2, "clock_ppm": 12},
      {"label": "right", "fall_delay_ns": 130, "rise_delay_ns": 230,
       "jitter_sigma_ns": 2, "clock_ppm": -25}
    ],
    "id_assignment": {"0x100": "left", "0x200": "right"}
  }
})";

std::string patched(const std::string& needle, const std::string& replacement) {
  std::string text = kBaseConfig;
  const size_t at = text.find(needle);
  REQUIRE(at != std::string::npos);
  text.replace(at, needle.size(), replacement);
  return text;
}

}  // namespace

TEST_CASE("number text helpers round-trip and reject junk") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-3.0) == "-3");
  CHECK(parse_double("0.97") == 0.97);
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, double(rng.below(13)) - 4.0);
    CHECK(parse_double(format_double(v)) == v);  // shortest form, exact
  }
  CHECK(parse_u64("18446744073709551615") == UINT64_MAX);
  CHECK_THROWS_AS(parse_double(""), DataError);
  CHECK_THROWS_AS(parse_double("abc"), DataError);
  CHECK_THROWS_AS(parse_double("1.2x"), DataError);
  CHECK_THROWS_AS(parse_u64("-3"), DataError);
  CHECK_THROWS_AS(parse_u64("99999999999999999999"), DataError);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(digest_hex(0) == "0000000000000000");
  CHECK(digest_hex(0xabcull) == "0000000000000abc");
  CHECK(digest_hex(0x85944171f73967e8ull) == "85944171f73967e8");
}

TEST_CASE("atomic_write replaces files without leaving temporaries") {
  const fs::path p = temp_file("atomic.txt");
  atomic_write(p, "first");
  CHECK(read_file(p) == "first");
  atomic_write(p, "second");
  CHECK(read_file(p) == "second");
  CHECK(!fs::exists(p.string() + ".tmp"));
  CHECK(file_digest(p) == digest_hex(fnv1a64("second")));
  fs::remove(p);
  CHECK_THROWS_AS(read_file(p), std::ios_base::failure);
}

TEST_CASE("capture log round-trips through its binary form") {
  MessageCapture a;
  a.arbitration_id = 0x123;
  a.sof_counter = 42;
  a.edge_counters = {50, 143, kCounterModulus - 1};
  a.true_sender = "alpha";
  MessageCapture b;
  b.arbitration_id = 0x7ff;
  b.sof_counter = 1;
  b.edge_counters = {9};
  b.true_sender = std::nullopt;  // unknown sender
  const CaptureLog log{{"alpha", "beta"}, {a, b}};

  const fs::path p = temp_file("capture.bin");
  write_capture_log(log, p);
  const CaptureLog back = read_capture_log(p);
  CHECK(back.labels == log.labels);
  REQUIRE(back.messages.size() == 2);
  CHECK(back.messages[0].arbitration_id == 0x123);
  CHECK(back.messages[0].sof_counter == 42);
  CHECK(back.messages[0].edge_counters == a.edge_counters);
  CHECK(back.messages[0].true_sender == a.true_sender);
  CHECK(back.messages[1].true_sender == std::nullopt);

  const std::string bytes = slurp(p);
  REQUIRE(bytes.size() > 8);
  CHECK(bytes.compare(0, 4, "CDLY") == 0);

  std::string bad = bytes;
  bad[0] = 'X';
  dump(p, bad);
  CHECK_THROWS_AS(read_capture_log(p), DataError);

  bad = bytes;
  bad[4] = 9;  // unsupported version
  dump(p, bad);
  CHECK_THROWS_AS(read_capture_log(p), DataError);

  dump(p, bytes.substr(0, bytes.size() - 3));  // truncated
  CHECK_THROWS_AS(read_capture_log(p), DataError);

  dump(p, bytes + '\0');  // trailing garbage
  CHECK_THROWS_AS(read_capture_log(p), DataError);
  fs::remove(p);
}

TEST_CASE("capture log write rejects inconsistent input") {
  const fs::path p = temp_file("capture-bad.bin");
  MessageCapture m;
  m.arbitration_id = 0x100;
  m.sof_counter = 0;
  m.edge_counters = {5};

  CHECK_THROWS_AS(write_capture_log(CaptureLog{{"a", "a"}, {m}}, p), DataError);
  CHECK_THROWS_AS(write_capture_log(CaptureLog{{""}, {m}}, p), DataError);

  m.true_sender = "ghost";  // not in the label table
  CHECK_THROWS_AS(write_capture_log(CaptureLog{{"a"}, {m}}, p), DataError);

  m.true_sender = std::nullopt;
  m.edge_counters.clear();  // a message must have at least one rising edge
  CHECK_THROWS_AS(write_capture_log(CaptureLog{{"a"}, {m}}, p), DataError);
  fs::remove(p);
}

TEST_CASE("hand-built capture bytes with mixed ids are rejected") {
  std::string bytes = "CDLY";
  bytes += '\x01';           // version
  bytes += '\x00';           // no labels
  auto be32 = [&](uint32_t v) {
    bytes += static_cast<char>(v >> 24);
    bytes += static_cast<char>(v >> 16);
    bytes += static_cast<char>(v >> 8);
    bytes += static_cast<char>(v);
  };
  be32(1);                   // one message
  be32(0);                   // message index
  bytes += '\x01';           // one edge
  bytes += '\xff';           // unknown label
  be32(encode_record(0x100, 10));
  be32(encode_record(0x101, 30));  // id differs from the SOF record
  const fs::path p = temp_file("capture-mixed.bin");
  dump(p, bytes);
  CHECK_THROWS_AS(read_capture_log(p), DataError);

  // Same layout with a non-sequential message index.
  bytes[10] = '\x05';
  bytes[bytes.size() - 4] = static_cast<char>(encode_record(0x100, 30) >> 24);
  bytes[bytes.size() - 3] = static_cast<char>(encode_record(0x100, 30) >> 16);
  bytes[bytes.size() - 2] = static_cast<char>(encode_record(0x100, 30) >> 8);
  bytes[bytes.size() - 1] = static_cast<char>(encode_record(0x100, 30));
  dump(p, bytes);
  CHECK_THROWS_AS(read_capture_log(p), DataError);
  fs::remove(p);
}

TEST_CASE("feature CSV round-trips exact values and unknown labels") {
  FeatureRow r1;
  r1.message_index = 0;
  r1.arbitration_id = 0x123;
  r1.label = "alpha";
  r1.features = FeatureVector{40.25, 1.5, 2.25, -0.125, 3.0, 40.3, 42.0, 16240.9};
  FeatureRow r2;
  r2.message_index = 1;
  r2.arbitration_id = 0x7ff;
  r2.label = "";  // unknown on disk as '?'
  r2.features = FeatureVector{-1e-12, 0, 0, 0, 0, 1e-12, -1e-12, 1e-300};
  const std::vector<FeatureRow> rows = {r1, r2};

  const fs::path p = temp_file("features.csv");
  write_feature_csv(rows, p);
  const std::string text = slurp(p);
  CHECK(text.rfind(feature_csv_header() + "\n", 0) == 0);
  CHECK(text.find(",?,") != std::string::npos);

  const auto back = read_feature_csv(p);
  REQUIRE(back.size() == 2);
  CHECK(back[0].message_index == 0);
  CHECK(back[0].arbitration_id == 0x123);
  CHECK(back[0].label == "alpha");
  CHECK(back[0].features.mean == r1.features.mean);
  CHECK(back[0].features.energy == r1.features.energy);
  CHECK(back[1].label.empty());
  CHECK(back[1].features.mean == r2.features.mean);
  CHECK(back[1].features.energy == r2.features.energy);

  dump(p, "wrong,header\n");
  CHECK_THROWS_AS(read_feature_csv(p), DataError);
  dump(p, feature_csv_header() + "\n0,0x123,alpha,1,2\n");  // short row
  CHECK_THROWS_AS(read_feature_csv(p), DataError);
  dump(p, feature_csv_header() + "\n0,0x900,alpha,1,2,3,4,5,6,7,8\n");  // id range
  CHECK_THROWS_AS(read_feature_csv(p), DataError);
  dump(p, feature_csv_header() + "\n0,0x123,alpha,x,2,3,4,5,6,7,8\n");  // bad number
  CHECK_THROWS_AS(read_feature_csv(p), DataError);
  fs::remove(p);
}

TEST_CASE("render_weights sorts descending with table-order ties") {
  FeatureWeights w{};
  w[static_cast<size_t>(Feature::Mean)] = 0.5;
  w[static_cast<size_t>(Feature::Max)] = 0.9;
  const std::string text = render_weights(w);
  CHECK(text.rfind("max\t0.9\nmean\t0.5\nstd\t0\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == kFeatureCount);
}

TEST_CASE("run manifests are canonical json with stable bytes") {
  RunManifest m;
  m.tool_version = "0.1.0";
  m.command = "simulate";
  m.seed = 17;
  m.config_digest = "00ff00ff00ff00ff";
  m.outputs = {{"cap.bin", "1111111111111111"}, {"cap.bin.manifest.json", ""}};
  m.outputs.pop_back();
  m.outputs.emplace_back("feat.csv", "2222222222222222");

  const fs::path p1 = temp_file("manifest1.json");
  const fs::path p2 = temp_file("manifest2.json");
  write_manifest(m, p1);
  write_manifest(m, p2);
  const std::string t1 = slurp(p1);
  CHECK(t1 == slurp(p2));
  CHECK(t1.back() == '\n');

  const auto doc = nlohmann::json::parse(t1);
  CHECK(doc.at("tool_version") == "0.1.0");
  CHECK(doc.at("command") == "simulate");
  CHECK(doc.at("seed") == 17);
  CHECK(doc.at("config_digest") == "00ff00ff00ff00ff");
  CHECK(doc.at("outputs").at("cap.bin") == "1111111111111111");
  CHECK(doc.at("outputs").at("feat.csv") == "2222222222222222");
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("parse_config applies defaults and reads the full schema") {
  const ExperimentConfig cfg = parse_config(kBaseConfig);
  CHECK(cfg.bus.bitrate_bps == 500000);
  CHECK(cfg.bus.counter_tick_ns == 20);
  CHECK(cfg.bus.window_bits == 34);
  REQUIRE(cfg.bus.ecus.size() == 2);
  CHECK(cfg.bus.ecus[0].label == "left");
  CHECK(cfg.bus.ecus[1].clock_ppm == -25.0);
  CHECK(cfg.bus.id_assignment.at(0x100) == "left");
  CHECK(cfg.pipeline.knn_k == 5);
  CHECK(cfg.pipeline.cv_folds == 5);
  CHECK(cfg.pipeline.messages_per_id == 1000);
  CHECK(cfg.pipeline.seed == 1);
  CHECK(cfg.pipeline.features ==
        std::vector<Feature>{Feature::Mean, Feature::Rms, Feature::Max});
  CHECK(cfg.pipeline.unregistered_policy == UnregisteredIdPolicy::Warn);
  CHECK(!cfg.scenario.has_value());

  const std::string full = R"({
    "bus": {
      "bitrate_bps": 500000, "counter_tick_ns": 20, "window_bits": 34,
      "ecus": [
        {"label": "left", "fall_delay_ns": 95, "rise_delay_ns": 112},
        {"label": "right", "fall_delay_ns": 130, "rise_delay_ns": 230}
      ],
      "id_assignment": {"0x100": "left", "512": "right"}
    },
    "pipeline": {
      "features": ["mean", "energy"], "knn_k": 3, "cv_folds": 4,
      "relieff_k": 7, "relieff_iterations": 100, "messages_per_id": 50,
      "seed": 99, "unregistered_policy": "flag_attack"
    },
    "scenario": {
      "kind": "compromised", "attacker": "right", "spoofed_id": "0x100",
      "attack_count": 10, "normal_count": 20
    }
  })";
  const ExperimentConfig f = parse_config(full);
  CHECK(f.bus.id_assignment.at(0x200) == "right");  // decimal id accepted
  CHECK(f.pipeline.features == std::vector<Feature>{Feature::Mean, Feature::Energy});
  CHECK(f.pipeline.knn_k == 3);
  CHECK(f.pipeline.unregistered_policy == UnregisteredIdPolicy::FlagAttack);
  REQUIRE(f.scenario.has_value());
  CHECK(f.scenario->kind == "compromised");
  CHECK(f.scenario->attacker == "right");
  CHECK(f.scenario->spoofed_id == 0x100);
  CHECK(f.scenario->attack_count == 10);

  const fs::path p = temp_file("config.json");
  atomic_write(p, full);
  const ExperimentConfig g = load_config(p);
  CHECK(config_to_json(g) == config_to_json(f));
  fs::remove(p);
}

TEST_CASE("parse_config rejects malformed documents") {
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"bus": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"surprise": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(patched("\"0x100\"", "\"0x900\"")), ConfigError);
  CHECK_THROWS_AS(parse_config(patched("\"label\": \"right\"", "\"label\": \"le ft\"")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(patched("\"clock_ppm\": 12", "\"clock_ppm\": 150")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(patched("\"clock_ppm\": 12", "\"typo_key\": 1")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(patched("\"0x200\": \"right\"", "\"0x200\": \"ghost\"")),
                  ConfigError);

  auto with_pipeline = [](const std::string& body) {
    std::string text = kBaseConfig;
    text.insert(text.rfind('}'), ", \"pipeline\": {" + body + "}");
    return text;
  };
  CHECK_THROWS_AS(parse_config(with_pipeline("\"knn_k\": 4")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_pipeline("\"cv_folds\": 1")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_pipeline("\"seed\": -1")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_pipeline("\"features\": []")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_pipeline("\"features\": [\"mean\", \"mean\"]")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(with_pipeline("\"features\": [\"median\"]")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_pipeline("\"unregistered_policy\": \"drop\"")),
                  ConfigError);

  auto with_scenario = [](const std::string& body) {
    std::string text = kBaseConfig;
    text.insert(text.rfind('}'), ", \"scenario\": {" + body + "}");
    return text;
  };
  CHECK_THROWS_AS(parse_config(with_scenario("\"kind\": \"weird\", \"spoofed_id\": \"0x100\"")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(with_scenario("\"kind\": \"compromised\"")), ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_scenario("\"kind\": \"compromised\", \"spoofed_id\": \"0x300\", "
                                 "\"attacker\": \"right\"")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_scenario("\"kind\": \"compromised\", \"spoofed_id\": \"0x100\", "
                                 "\"attacker\": \"ghost\"")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_scenario(
          "\"kind\": \"compromised\", \"spoofed_id\": \"0x100\", \"attacker\": \"right\", "
          "\"foreign_ecu\": {\"label\": \"x\"}")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_scenario("\"kind\": \"unmonitored\", \"spoofed_id\": \"0x100\"")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_scenario(
          "\"kind\": \"unmonitored\", \"spoofed_id\": \"0x100\", "
          "\"foreign_ecu\": {\"label\": \"left\"}")),
      ConfigError);
  // Valid unmonitored scenario for contrast.
  const ExperimentConfig ok = parse_config(with_scenario(
      "\"kind\": \"unmonitored\", \"spoofed_id\": \"0x100\", "
      "\"foreign_ecu\": {\"label\": \"ghost\", \"fall_delay_ns\": 300, "
      "\"rise_delay_ns\": 420}"));
  REQUIRE(ok.scenario.has_value());
  CHECK(ok.scenario->foreign_ecu->label == "ghost");
}

TEST_CASE("config_to_json is a canonical fixpoint") {
  const std::string spaced = R"({
    "bus": {"id_assignment": {"0x100":"left", "0x200":   "right"},
      "ecus": [
        {"label":"left","fall_delay_ns":95,"rise_delay_ns":112,
         "jitter_sigma_ns":2,"clock_ppm":12},
        {"label":"right","fall_delay_ns":130,"rise_delay_ns":230,
         "jitter_sigma_ns":2,"clock_ppm":-25}
      ]}
  })";
  const std::string canon1 = config_to_json(parse_config(kBaseConfig));
  const std::string canon2 = config_to_json(parse_config(spaced));
  CHECK(canon1 == canon2);
  CHECK(config_to_json(parse_config(canon1)) == canon1);
  CHECK(fnv1a64(canon1) == fnv1a64(canon2));
}
