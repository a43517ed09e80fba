#include "candelay/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "candelay/rng.hpp"

namespace candelay {

namespace {

constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "mean", "std", "variance", "skewness", "kurtosis", "rms", "max", "energy",
};

}  // namespace

const char* feature_name(Feature f) {
  const int i = static_cast<int>(f);
  if (i < 0 || i >= kFeatureCount) throw std::invalid_argument("feature_name: bad feature");
  return kFeatureNames[static_cast<size_t>(i)];
}

std::optional<Feature> feature_from_name(std::string_view name) {
  for (int i = 0; i < kFeatureCount; ++i) {
    if (name == kFeatureNames[static_cast<size_t>(i)]) return static_cast<Feature>(i);
  }
  return std::nullopt;
}

double FeatureVector::value(Feature f) const {
  switch (f) {
    case Feature::Mean: return mean;
    case Feature::StdDev: return std_dev;
    case Feature::Variance: return variance;
    case Feature::Skewness: return skewness;
    case Feature::Kurtosis: return kurtosis;
    case Feature::Rms: return rms;
    case Feature::Max: return max;
    case Feature::Energy: return energy;
  }
  throw std::invalid_argument("FeatureVector::value: bad feature");
}

FeatureVector extract(std::span<const double> delays) {
  if (delays.empty()) throw DataError("extract: empty delay vector");
  const double n = static_cast<double>(delays.size());

  double sum = 0.0;
  double sum_sq = 0.0;
  double mx = -std::numeric_limits<double>::infinity();
  for (double d : delays) {
    sum += d;
    sum_sq += d * d;
    mx = std::max(mx, d);
  }
  const double mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double d : delays) {
    const double c = d - mean;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  FeatureVector fv;
  fv.mean = mean;
  fv.variance = m2;
  fv.std_dev = std::sqrt(m2);
  if (fv.std_dev > 0.0) {
    fv.skewness = m3 / (fv.std_dev * fv.std_dev * fv.std_dev);
    fv.kurtosis = m4 / (m2 * m2);
  }
  fv.rms = std::sqrt(sum_sq / n);
  fv.max = mx;
  fv.energy = sum_sq;
  return fv;
}

std::vector<double> project(const FeatureVector& fv, std::span<const Feature> subset) {
  std::vector<double> out;
  out.reserve(subset.size());
  for (Feature f : subset) out.push_back(fv.value(f));
  return out;
}

FeatureWeights relief_f(std::span<const LabeledFeatures> dataset,
                        const ReliefFParams& params) {
  if (params.k_neighbors < 1) throw std::invalid_argument("relief_f: k_neighbors < 1");
  const size_t n = dataset.size();
  const size_t k = static_cast<size_t>(params.k_neighbors);

  std::map<std::string, std::vector<size_t>> by_class;
  for (size_t i = 0; i < n; ++i) by_class[dataset[i].label].push_back(i);
  if (by_class.size() < 2) throw DataError("relief_f: need at least two classes");
  for (const auto& [label, members] : by_class) {
    if (members.size() < k + 1)
      throw DataError("relief_f: class '" + label + "' has fewer than k+1 instances");
  }

  // Range normalization so every feature contributes on a common scale.
  std::array<double, kFeatureCount> lo{}, range{};
  lo.fill(std::numeric_limits<double>::infinity());
  std::array<double, kFeatureCount> hi{};
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& inst : dataset) {
    for (int f = 0; f < kFeatureCount; ++f) {
      const double v = inst.features.value(static_cast<Feature>(f));
      lo[static_cast<size_t>(f)] = std::min(lo[static_cast<size_t>(f)], v);
      hi[static_cast<size_t>(f)] = std::max(hi[static_cast<size_t>(f)], v);
    }
  }
  for (int f = 0; f < kFeatureCount; ++f) {
    const double r = hi[static_cast<size_t>(f)] - lo[static_cast<size_t>(f)];
    range[static_cast<size_t>(f)] = r > 0.0 ? r : 1.0;
  }

  auto diff = [&](int f, size_t a, size_t b) {
    const auto feat = static_cast<Feature>(f);
    return std::abs(dataset[a].features.value(feat) - dataset[b].features.value(feat)) /
           range[static_cast<size_t>(f)];
  };
  auto dist = [&](size_t a, size_t b) {
    double d = 0.0;
    for (int f = 0; f < kFeatureCount; ++f) d += diff(f, a, b);
    return d;
  };

  std::map<std::string, double> prior;
  for (const auto& [label, members] : by_class)
    prior[label] = static_cast<double>(members.size()) / static_cast<double>(n);

  std::vector<size_t> picks;
  if (params.iterations <= 0) {
    picks.resize(n);
    std::iota(picks.begin(), picks.end(), size_t{0});
  } else {
    Rng rng(params.seed);
    picks.reserve(static_cast<size_t>(params.iterations));
    for (int i = 0; i < params.iterations; ++i) picks.push_back(rng.below(n));
  }
  const double m = static_cast<double>(picks.size());

  FeatureWeights weights{};
  std::vector<std::pair<double, size_t>> scored;
  for (size_t pick : picks) {
    const std::string& own = dataset[pick].label;
    for (const auto& [label, members] : by_class) {
      scored.clear();
      for (size_t j : members) {
        if (j == pick) continue;
        scored.emplace_back(dist(pick, j), j);
      }
      std::sort(scored.begin(), scored.end());
      const size_t take = std::min(k, scored.size());
      const bool hit = label == own;
      // Kononenko's update: hits pull a weight down, misses push it up in
      // proportion to how likely the miss class is among the alternatives.
      const double scale = hit ? -1.0 : prior[label] / (1.0 - prior[own]);
      for (size_t t = 0; t < take; ++t) {
        const size_t j = scored[t].second;
        for (int f = 0; f < kFeatureCount; ++f)
          weights[static_cast<size_t>(f)] +=
              scale * diff(f, pick, j) / (m * static_cast<double>(k));
      }
    }
  }
  return weights;
}

std::vector<Feature> select_top(const FeatureWeights& weights, int n) {
  if (n < 1 || n > kFeatureCount) throw std::invalid_argument("select_top: n out of range");
  std::array<int, kFeatureCount> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return weights[static_cast<size_t>(a)] > weights[static_cast<size_t>(b)]; });
  std::vector<Feature> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(static_cast<Feature>(order[static_cast<size_t>(i)]));
  return out;
}

}  // namespace candelay
