#pragma once

// Per-message statistics over delay-times and Relief-F feature weighting.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "candelay/errors.hpp"

namespace candelay {

// Fixed table order; ties and column layouts resolve by this order.
enum class Feature : int {
  Mean = 0,
  StdDev,
  Variance,
  Skewness,
  Kurtosis,
  Rms,
  Max,
  Energy,
};

inline constexpr int kFeatureCount = 8;
inline constexpr std::array<Feature, kFeatureCount> kAllFeatures = {
    Feature::Mean,     Feature::StdDev, Feature::Variance, Feature::Skewness,
    Feature::Kurtosis, Feature::Rms,    Feature::Max,      Feature::Energy,
};

const char* feature_name(Feature f);
std::optional<Feature> feature_from_name(std::string_view name);

struct FeatureVector {
  double mean = 0.0;
  double std_dev = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double rms = 0.0;
  double max = 0.0;
  double energy = 0.0;

  double value(Feature f) const;
  bool operator==(const FeatureVector&) const = default;
};

// Population statistics (divisor N). Skewness and kurtosis are defined as
// 0 when the standard deviation is 0; kurtosis is raw, not excess.
FeatureVector extract(std::span<const double> delays);

std::vector<double> project(const FeatureVector& fv, std::span<const Feature> subset);

struct LabeledFeatures {
  FeatureVector features;
  std::string label;
};

struct ReliefFParams {
  int k_neighbors = 10;
  int iterations = 0;  // <= 0: one pass over every instance
  uint64_t seed = 0;
};

using FeatureWeights = std::array<double, kFeatureCount>;

// Nearest hits and per-class nearest misses under Manhattan distance on
// range-normalized features; miss contributions weighted by class priors.
FeatureWeights relief_f(std::span<const LabeledFeatures> dataset,
                        const ReliefFParams& params);

// Top n features by weight, ties broken by table order.
std::vector<Feature> select_top(const FeatureWeights& weights, int n = 3);

}  // namespace candelay
