#pragma once

// k-nearest-neighbour sender classification with z-score normalization,
// stratified cross-validation, and a small flat-file model format.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "candelay/errors.hpp"
#include "candelay/features.hpp"

namespace candelay {

struct LabeledVector {
  std::vector<double> values;
  std::string label;
};

struct KnnModel {
  int k = 5;
  std::vector<Feature> features;   // column meaning of every point
  std::vector<std::string> labels; // sorted unique class names
  std::vector<double> norm_mean;   // per-column training mean
  std::vector<double> norm_std;    // per-column training std (0 stored as 1)
  std::vector<std::vector<double>> points;  // z-scored training vectors
  std::vector<int> point_labels;   // index into labels
};

// k must be odd and >= 1. Normalization statistics come from the training
// rows only.
KnnModel train(std::span<const LabeledVector> rows, std::span<const Feature> features,
               int k = 5);

struct Prediction {
  std::string label;
  int votes = 0;
};

// Majority vote over the k nearest (Euclidean) training points; vote ties
// fall back to the smaller mean neighbour distance, then label order.
Prediction predict(const KnnModel& model, std::span<const double> values);

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<uint64_t>> counts;  // [actual][predicted]

  uint64_t total() const;
  double accuracy() const;
  double recall(const std::string& label) const;
};

struct CrossValResult {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
  std::vector<ConfusionMatrix> fold_matrices;
  ConfusionMatrix pooled;
};

// Stratified K-fold: per class, a seeded shuffle followed by round-robin
// fold assignment. Every class must have at least K members.
CrossValResult kfold_cv(std::span<const LabeledVector> rows,
                        std::span<const Feature> features, int k_neighbors, int folds,
                        uint64_t seed);

void save_model(const KnnModel& model, const std::filesystem::path& path);
KnnModel load_model(const std::filesystem::path& path);

}  // namespace candelay
