#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace behsynth {

using FeatureRow = std::vector<double>;

enum class ClassifierId { lr, svm, knn, rf };

[[nodiscard]] std::string_view to_string(ClassifierId id);
[[nodiscard]] ClassifierId parse_classifier_id(std::string_view text);
inline constexpr ClassifierId kAllClassifiers[] = {ClassifierId::lr, ClassifierId::svm,
                                                   ClassifierId::knn, ClassifierId::rf};

/// Binary classifier over dense features; labels are 0 or 1.
class BinaryClassifier {
 public:
  virtual ~BinaryClassifier() = default;
  virtual void fit(std::span<const FeatureRow> x, std::span<const int> y) = 0;
  [[nodiscard]] virtual int predict(const FeatureRow& x) const = 0;
};

/// Logistic regression, full-batch gradient descent (rate 0.1, 500 epochs,
/// unregularised).
class LogisticRegressionClassifier final : public BinaryClassifier {
 public:
  void fit(std::span<const FeatureRow> x, std::span<const int> y) override;
  [[nodiscard]] int predict(const FeatureRow& x) const override;
  [[nodiscard]] double probability(const FeatureRow& x) const;

 private:
  std::vector<double> w_;
  double b_ = 0.0;
};

/// Linear SVM, hinge loss with L2 penalty 1e-3, full-batch sub-gradient
/// descent (rate 0.05, 500 epochs).
class LinearSvmClassifier final : public BinaryClassifier {
 public:
  void fit(std::span<const FeatureRow> x, std::span<const int> y) override;
  [[nodiscard]] int predict(const FeatureRow& x) const override;

 private:
  std::vector<double> w_;
  double b_ = 0.0;
};

/// k-nearest neighbours (k = 5, Euclidean); equal distances resolve to the
/// lower training index; vote ties go to class 0.
class KnnClassifier final : public BinaryClassifier {
 public:
  explicit KnnClassifier(std::size_t k = 5) : k_(k) {}
  void fit(std::span<const FeatureRow> x, std::span<const int> y) override;
  [[nodiscard]] int predict(const FeatureRow& x) const override;

 private:
  std::size_t k_;
  std::vector<FeatureRow> x_;
  std::vector<int> y_;
};

/// Random forest: 25 bootstrap trees of depth <= 4. Each node draws a random
/// feature and picks the Gini-best midpoint threshold between consecutive
/// distinct values.
class RandomForestClassifier final : public BinaryClassifier {
 public:
  explicit RandomForestClassifier(std::uint64_t seed, int trees = 25, int max_depth = 4);
  void fit(std::span<const FeatureRow> x, std::span<const int> y) override;
  [[nodiscard]] int predict(const FeatureRow& x) const override;

  struct Node {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double positive_fraction = 0.0;
  };

 private:
  std::uint64_t seed_;
  int trees_;
  int max_depth_;
  std::vector<std::vector<Node>> forest_;
};

[[nodiscard]] std::unique_ptr<BinaryClassifier> make_classifier(ClassifierId id, std::uint64_t seed);

}  // namespace behsynth
