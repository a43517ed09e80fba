#include "candelay/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "candelay/io.hpp"
#include "candelay/rng.hpp"

namespace candelay {

namespace {

std::vector<double> normalize(const KnnModel& model, std::span<const double> values) {
  std::vector<double> out(values.size());
  for (size_t i = 0; i < values.size(); ++i)
    out[i] = (values[i] - model.norm_mean[i]) / model.norm_std[i];
  return out;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

}  // namespace

KnnModel train(std::span<const LabeledVector> rows, std::span<const Feature> features,
               int k) {
  if (k < 1 || k % 2 == 0) throw std::invalid_argument("train: k must be odd and >= 1");
  if (features.empty()) throw std::invalid_argument("train: no features");
  if (rows.empty()) throw DataError("train: no training rows");

  const size_t dims = features.size();
  std::set<std::string> label_set;
  for (const LabeledVector& row : rows) {
    if (row.values.size() != dims) throw DataError("train: row dimension mismatch");
    if (row.label.empty()) throw DataError("train: unlabeled row");
    label_set.insert(row.label);
  }
  if (label_set.size() < 2) throw DataError("train: need at least two classes");

  KnnModel model;
  model.k = k;
  model.features.assign(features.begin(), features.end());
  model.labels.assign(label_set.begin(), label_set.end());

  model.norm_mean.assign(dims, 0.0);
  model.norm_std.assign(dims, 0.0);
  for (const LabeledVector& row : rows)
    for (size_t i = 0; i < dims; ++i) model.norm_mean[i] += row.values[i];
  for (size_t i = 0; i < dims; ++i) model.norm_mean[i] /= static_cast<double>(rows.size());
  for (const LabeledVector& row : rows)
    for (size_t i = 0; i < dims; ++i) {
      const double c = row.values[i] - model.norm_mean[i];
      model.norm_std[i] += c * c;
    }
  for (size_t i = 0; i < dims; ++i) {
    model.norm_std[i] = std::sqrt(model.norm_std[i] / static_cast<double>(rows.size()));
    if (model.norm_std[i] == 0.0) model.norm_std[i] = 1.0;  // constant column
  }

  model.points.reserve(rows.size());
  model.point_labels.reserve(rows.size());
  for (const LabeledVector& row : rows) {
    model.points.push_back(normalize(model, row.values));
    const auto it = std::lower_bound(model.labels.begin(), model.labels.end(), row.label);
    model.point_labels.push_back(static_cast<int>(it - model.labels.begin()));
  }
  return model;
}

Prediction predict(const KnnModel& model, std::span<const double> values) {
  if (values.size() != model.features.size())
    throw std::invalid_argument("predict: dimension mismatch");
  if (model.points.empty()) throw DataError("predict: empty model");

  const std::vector<double> query = normalize(model, values);
  const size_t k = std::min(static_cast<size_t>(model.k), model.points.size());

  std::vector<std::pair<double, size_t>> scored;
  scored.reserve(model.points.size());
  for (size_t i = 0; i < model.points.size(); ++i)
    scored.emplace_back(sq_dist(query, model.points[i]), i);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<ptrdiff_t>(k),
                    scored.end());

  std::vector<int> votes(model.labels.size(), 0);
  std::vector<double> dist_sum(model.labels.size(), 0.0);
  for (size_t t = 0; t < k; ++t) {
    const int label = model.point_labels[scored[t].second];
    ++votes[static_cast<size_t>(label)];
    dist_sum[static_cast<size_t>(label)] += std::sqrt(scored[t].first);
  }

  // Majority vote; ties go to the candidate whose voters sit closer on
  // average, and failing that to label order.
  int best = -1;
  for (size_t c = 0; c < votes.size(); ++c) {
    if (votes[c] == 0) continue;
    if (best < 0) {
      best = static_cast<int>(c);
      continue;
    }
    const size_t b = static_cast<size_t>(best);
    if (votes[c] > votes[b] ||
        (votes[c] == votes[b] && dist_sum[c] / votes[c] < dist_sum[b] / votes[b]))
      best = static_cast<int>(c);
  }
  return Prediction{model.labels[static_cast<size_t>(best)],
                    votes[static_cast<size_t>(best)]};
}

uint64_t ConfusionMatrix::total() const {
  uint64_t t = 0;
  for (const auto& row : counts)
    for (uint64_t c : row) t += c;
  return t;
}

double ConfusionMatrix::accuracy() const {
  const uint64_t t = total();
  if (t == 0) return 0.0;
  uint64_t correct = 0;
  for (size_t i = 0; i < counts.size(); ++i) correct += counts[i][i];
  return static_cast<double>(correct) / static_cast<double>(t);
}

double ConfusionMatrix::recall(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw std::invalid_argument("recall: unknown label " + label);
  const size_t i = static_cast<size_t>(it - labels.begin());
  uint64_t row_total = 0;
  for (uint64_t c : counts[i]) row_total += c;
  if (row_total == 0) return 0.0;
  return static_cast<double>(counts[i][i]) / static_cast<double>(row_total);
}

CrossValResult kfold_cv(std::span<const LabeledVector> rows,
                        std::span<const Feature> features, int k_neighbors, int folds,
                        uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("kfold_cv: folds < 2");
  if (rows.empty()) throw DataError("kfold_cv: no rows");

  std::map<std::string, std::vector<size_t>> by_class;
  for (size_t i = 0; i < rows.size(); ++i) by_class[rows[i].label].push_back(i);

  // Stratified assignment: shuffle each class once, deal round-robin.
  std::vector<int> fold_of(rows.size(), -1);
  Rng rng(seed);
  for (auto& [label, members] : by_class) {
    if (members.size() < static_cast<size_t>(folds))
      throw DataError("kfold_cv: class '" + label + "' smaller than fold count");
    rng.shuffle(members);
    for (size_t pos = 0; pos < members.size(); ++pos)
      fold_of[members[pos]] = static_cast<int>(pos % static_cast<size_t>(folds));
  }

  std::vector<std::string> labels;
  for (const auto& [label, members] : by_class) labels.push_back(label);
  auto empty_matrix = [&] {
    ConfusionMatrix cm;
    cm.labels = labels;
    cm.counts.assign(labels.size(), std::vector<uint64_t>(labels.size(), 0));
    return cm;
  };
  auto label_index = [&](const std::string& label) {
    return static_cast<size_t>(
        std::lower_bound(labels.begin(), labels.end(), label) - labels.begin());
  };

  CrossValResult result;
  result.pooled = empty_matrix();
  for (int fold = 0; fold < folds; ++fold) {
    std::vector<LabeledVector> train_rows;
    std::vector<size_t> test_rows;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (fold_of[i] == fold)
        test_rows.push_back(i);
      else
        train_rows.push_back(rows[i]);
    }
    const KnnModel model = train(train_rows, features, k_neighbors);

    ConfusionMatrix cm = empty_matrix();
    for (size_t i : test_rows) {
      const Prediction pred = predict(model, rows[i].values);
      ++cm.counts[label_index(rows[i].label)][label_index(pred.label)];
      ++result.pooled.counts[label_index(rows[i].label)][label_index(pred.label)];
    }
    result.fold_accuracy.push_back(cm.accuracy());
    result.fold_matrices.push_back(std::move(cm));
  }
  result.mean_accuracy =
      std::accumulate(result.fold_accuracy.begin(), result.fold_accuracy.end(), 0.0) /
      static_cast<double>(folds);
  return result;
}

void save_model(const KnnModel& model, const std::filesystem::path& path) {
  for (const auto& label : model.labels)
    if (label.empty() || label.find_first_of(" \t\n\r") != std::string::npos)
      throw DataError("save_model: label unsuitable for flat file: '" + label + "'");

  std::string out = "candelay-knn 1\n";
  out += "k " + std::to_string(model.k) + "\n";
  out += "features";
  for (Feature f : model.features) out += std::string(" ") + feature_name(f);
  out += "\nclasses";
  for (const auto& label : model.labels) out += " " + label;
  out += "\nnorm_mean";
  for (double v : model.norm_mean) out += " " + format_double(v);
  out += "\nnorm_std";
  for (double v : model.norm_std) out += " " + format_double(v);
  out += "\npoints " + std::to_string(model.points.size()) + "\n";
  for (size_t i = 0; i < model.points.size(); ++i) {
    out += std::to_string(model.point_labels[i]);
    for (double v : model.points[i]) out += " " + format_double(v);
    out.push_back('\n');
  }
  atomic_write(path, out);
}

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string("model file: missing ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

KnnModel load_model(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  if (next_line(in, "header") != "candelay-knn 1")
    throw DataError("model file: bad header");

  KnnModel model;
  auto expect = [&](const char* key) {
    auto toks = tokens(next_line(in, key));
    if (toks.empty() || toks[0] != key)
      throw DataError(std::string("model file: expected ") + key);
    toks.erase(toks.begin());
    return toks;
  };

  const auto k_toks = expect("k");
  if (k_toks.size() != 1) throw DataError("model file: bad k line");
  model.k = static_cast<int>(parse_u64(k_toks[0]));
  if (model.k < 1 || model.k % 2 == 0) throw DataError("model file: k must be odd");

  for (const auto& name : expect("features")) {
    const auto f = feature_from_name(name);
    if (!f) throw DataError("model file: unknown feature '" + name + "'");
    model.features.push_back(*f);
  }
  if (model.features.empty()) throw DataError("model file: no features");

  model.labels = expect("classes");
  if (model.labels.empty()) throw DataError("model file: no classes");
  if (!std::is_sorted(model.labels.begin(), model.labels.end()))
    throw DataError("model file: classes not sorted");

  for (const auto& tok : expect("norm_mean")) model.norm_mean.push_back(parse_double(tok));
  for (const auto& tok : expect("norm_std")) model.norm_std.push_back(parse_double(tok));
  if (model.norm_mean.size() != model.features.size() ||
      model.norm_std.size() != model.features.size())
    throw DataError("model file: normalization dimension mismatch");
  for (double s : model.norm_std)
    if (s <= 0.0) throw DataError("model file: non-positive normalization std");

  const auto count_toks = expect("points");
  if (count_toks.size() != 1) throw DataError("model file: bad points line");
  const uint64_t count = parse_u64(count_toks[0]);
  for (uint64_t i = 0; i < count; ++i) {
    const auto toks = tokens(next_line(in, "point row"));
    if (toks.size() != model.features.size() + 1)
      throw DataError("model file: bad point row");
    const uint64_t label = parse_u64(toks[0]);
    if (label >= model.labels.size())
      throw DataError("model file: point label out of range");
    model.point_labels.push_back(static_cast<int>(label));
    std::vector<double> values;
    for (size_t t = 1; t < toks.size(); ++t) values.push_back(parse_double(toks[t]));
    model.points.push_back(std::move(values));
  }
  if (model.points.empty()) throw DataError("model file: no points");
  return model;
}

}  // namespace candelay
