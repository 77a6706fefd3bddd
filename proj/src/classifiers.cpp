#include "behsynth/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "behsynth/errors.hpp"
#include "behsynth/random.hpp"

namespace behsynth {

std::string_view to_string(ClassifierId id) {
  switch (id) {
    case ClassifierId::lr: return "lr";
    case ClassifierId::svm: return "svm";
    case ClassifierId::knn: return "knn";
    case ClassifierId::rf: return "rf";
  }
  return "lr";
}

ClassifierId parse_classifier_id(std::string_view text) {
  for (auto id : kAllClassifiers) {
    if (to_string(id) == text) return id;
  }
  throw ConfigError(fmt::format("unknown classifier '{}'", text));
}

namespace {

void check_training_set(std::span<const FeatureRow> x, std::span<const int> y) {
  if (x.empty() || x.size() != y.size()) throw DataError("classifier: bad training set shape");
  const auto dim = x.front().size();
  for (const auto& row : x) {
    if (row.size() != dim) throw DataError("classifier: ragged feature rows");
  }
}

double dot(const std::vector<double>& w, const FeatureRow& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

}  // namespace

// --- LR -------------------------------------------------------------------

void LogisticRegressionClassifier::fit(std::span<const FeatureRow> x, std::span<const int> y) {
  check_training_set(x, y);
  constexpr double kRate = 0.1;
  constexpr int kEpochs = 500;
  const std::size_t dim = x.front().size();
  w_.assign(dim, 0.0);
  b_ = 0.0;
  const double n = static_cast<double>(x.size());
  std::vector<double> gw(dim);
  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double err = 1.0 / (1.0 + std::exp(-(dot(w_, x[i]) + b_))) - y[i];
      for (std::size_t k = 0; k < dim; ++k) gw[k] += err * x[i][k];
      gb += err;
    }
    for (std::size_t k = 0; k < dim; ++k) w_[k] -= kRate * gw[k] / n;
    b_ -= kRate * gb / n;
  }
}

double LogisticRegressionClassifier::probability(const FeatureRow& x) const {
  return 1.0 / (1.0 + std::exp(-(dot(w_, x) + b_)));
}

int LogisticRegressionClassifier::predict(const FeatureRow& x) const {
  return probability(x) > 0.5 ? 1 : 0;
}

// --- SVM ------------------------------------------------------------------

void LinearSvmClassifier::fit(std::span<const FeatureRow> x, std::span<const int> y) {
  check_training_set(x, y);
  constexpr double kRate = 0.05;
  constexpr int kEpochs = 500;
  constexpr double kPenalty = 1e-3;
  const std::size_t dim = x.front().size();
  w_.assign(dim, 0.0);
  b_ = 0.0;
  const double n = static_cast<double>(x.size());
  std::vector<double> gw(dim);
  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    for (std::size_t k = 0; k < dim; ++k) gw[k] = kPenalty * w_[k];
    double gb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double label = y[i] == 1 ? 1.0 : -1.0;
      if (label * (dot(w_, x[i]) + b_) < 1.0) {
        for (std::size_t k = 0; k < dim; ++k) gw[k] -= label * x[i][k] / n;
        gb -= label / n;
      }
    }
    for (std::size_t k = 0; k < dim; ++k) w_[k] -= kRate * gw[k];
    b_ -= kRate * gb;
  }
}

int LinearSvmClassifier::predict(const FeatureRow& x) const { return dot(w_, x) + b_ > 0.0 ? 1 : 0; }

// --- KNN ------------------------------------------------------------------

void KnnClassifier::fit(std::span<const FeatureRow> x, std::span<const int> y) {
  check_training_set(x, y);
  x_.assign(x.begin(), x.end());
  y_.assign(y.begin(), y.end());
}

int KnnClassifier::predict(const FeatureRow& x) const {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(x_.size());
  for (std::size_t i = 0; i < x_.size(); ++i) {
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) d += (x[k] - x_[i][k]) * (x[k] - x_[i][k]);
    dist.emplace_back(d, i);
  }
  const std::size_t k = std::min(k_, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::size_t positive = 0;
  for (std::size_t i = 0; i < k; ++i) positive += y_[dist[i].second] == 1 ? 1 : 0;
  return 2 * positive > k ? 1 : 0;
}

// --- RF -------------------------------------------------------------------

RandomForestClassifier::RandomForestClassifier(std::uint64_t seed, int trees, int max_depth)
    : seed_(seed), trees_(trees), max_depth_(max_depth) {}

namespace {

using Node = RandomForestClassifier::Node;

double gini(std::size_t pos, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

int grow(std::vector<Node>& tree, std::span<const FeatureRow> x, std::span<const int> y,
         std::vector<std::size_t> rows, int depth, int max_depth, Rng& rng) {
  std::size_t pos = 0;
  for (auto r : rows) pos += y[r] == 1 ? 1 : 0;
  const int index = static_cast<int>(tree.size());
  tree.push_back({});
  tree.back().positive_fraction = static_cast<double>(pos) / static_cast<double>(rows.size());
  if (depth >= max_depth || pos == 0 || pos == rows.size()) return index;

  // Random feature order; the first one with any variation is used.
  const std::size_t dim = x.front().size();
  std::vector<std::size_t> features(dim);
  std::iota(features.begin(), features.end(), 0);
  rng.shuffle(features);
  for (auto f : features) {
    std::vector<double> values;
    for (auto r : rows) values.push_back(x[r][f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() < 2) continue;

    double best_score = gini(pos, rows.size());
    double best_threshold = 0.0;
    bool found = false;
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      const double t = 0.5 * (values[v] + values[v + 1]);
      std::size_t left_n = 0, left_pos = 0;
      for (auto r : rows) {
        if (x[r][f] <= t) {
          ++left_n;
          left_pos += y[r] == 1 ? 1 : 0;
        }
      }
      const std::size_t right_n = rows.size() - left_n;
      const double score = (static_cast<double>(left_n) * gini(left_pos, left_n) +
                            static_cast<double>(right_n) * gini(pos - left_pos, right_n)) /
                           static_cast<double>(rows.size());
      if (score < best_score - 1e-12) {
        best_score = score;
        best_threshold = t;
        found = true;
      }
    }
    if (!found) return index;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (x[r][f] <= best_threshold ? left : right).push_back(r);
    tree[static_cast<std::size_t>(index)].feature = static_cast<int>(f);
    tree[static_cast<std::size_t>(index)].threshold = best_threshold;
    const int l = grow(tree, x, y, std::move(left), depth + 1, max_depth, rng);
    const int r = grow(tree, x, y, std::move(right), depth + 1, max_depth, rng);
    tree[static_cast<std::size_t>(index)].left = l;
    tree[static_cast<std::size_t>(index)].right = r;
    return index;
  }
  return index;
}

}  // namespace

void RandomForestClassifier::fit(std::span<const FeatureRow> x, std::span<const int> y) {
  check_training_set(x, y);
  forest_.clear();
  Rng rng(derive_seed(seed_, {0xF0E57}));
  for (int t = 0; t < trees_; ++t) {
    std::vector<std::size_t> rows(x.size());
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(x.size()));
    std::vector<Node> tree;
    grow(tree, x, y, std::move(rows), 0, max_depth_, rng);
    forest_.push_back(std::move(tree));
  }
}

int RandomForestClassifier::predict(const FeatureRow& x) const {
  int votes = 0;
  for (const auto& tree : forest_) {
    int node = 0;
    while (tree[static_cast<std::size_t>(node)].feature >= 0) {
      const auto& n = tree[static_cast<std::size_t>(node)];
      node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    votes += tree[static_cast<std::size_t>(node)].positive_fraction > 0.5 ? 1 : 0;
  }
  return 2 * votes > static_cast<int>(forest_.size()) ? 1 : 0;
}

std::unique_ptr<BinaryClassifier> make_classifier(ClassifierId id, std::uint64_t seed) {
  switch (id) {
    case ClassifierId::lr: return std::make_unique<LogisticRegressionClassifier>();
    case ClassifierId::svm: return std::make_unique<LinearSvmClassifier>();
    case ClassifierId::knn: return std::make_unique<KnnClassifier>(5);
    case ClassifierId::rf: return std::make_unique<RandomForestClassifier>(seed);
  }
  throw ConfigError("unknown classifier");
}

}  // namespace behsynth
