#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "behsynth/core.hpp"
#include "behsynth/dataio.hpp"

namespace behsynth {

struct PredictorConfig {
  int history_length = 2;  ///< I: number of prior events in the context
  int timeslot_buckets = 8;
  double learning_rate = 0.5;
  int epochs = 300;
  double finetune_learning_rate = 0.3;
  int finetune_epochs = 150;
  /// 0 trains full-batch; otherwise mini-batches over a seeded permutation.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;

  void check() const;
};

/// One-hot block layout: weekday(7) | timeslot bucket(B) | previous intent
/// (N_B) per history position, oldest first | latest location(N_L) | bias.
struct FeatureLayout {
  int history_length = 2;
  int timeslot_buckets = 8;
  int intent_count = 1;
  int location_count = 1;

  [[nodiscard]] std::size_t dimension() const;
  [[nodiscard]] std::size_t bucket_offset() const { return kWeekdayCount; }
  [[nodiscard]] std::size_t intent_offset(int position) const;
  [[nodiscard]] std::size_t location_offset() const;
  [[nodiscard]] std::size_t bias_index() const { return dimension() - 1; }

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

[[nodiscard]] FeatureLayout make_layout(const PredictorConfig& cfg, const Vocabularies& vocab);

/// Indices of the active (value 1) coordinates, ascending.
using SparseFeatures = std::vector<std::uint32_t>;

/// `history` holds exactly I prior events, oldest first; throws DataError
/// otherwise.
[[nodiscard]] SparseFeatures featurize(std::span<const BehaviorEvent> history, int weekday,
                                       int timeslot, const FeatureLayout& layout);

struct Sample {
  SparseFeatures features;
  int label = 0;
};

/// Samples whose target index lies in [begin, end) of the sequence; targets
/// without I predecessors are skipped.
[[nodiscard]] std::vector<Sample> make_samples(const BehaviorSequence& sequence,
                                               const FeatureLayout& layout, std::size_t begin = 0,
                                               std::size_t end = SIZE_MAX);

enum class TrainingProvenance { untrained, pretrained, finetuned };

struct PredictorModel {
  FeatureLayout layout;
  /// Row-major [dimension x N_B].
  std::vector<double> weights;
  TrainingProvenance provenance = TrainingProvenance::untrained;

  [[nodiscard]] static PredictorModel zeros(const FeatureLayout& layout);
  [[nodiscard]] double& weight(std::size_t feature, int intent);
  [[nodiscard]] double weight(std::size_t feature, int intent) const;
  /// Logits per intent.
  [[nodiscard]] std::vector<double> logits(const SparseFeatures& x) const;
};

[[nodiscard]] std::vector<double> softmax(std::span<const double> logits);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;  ///< same layout as weights
};

/// Mean cross-entropy and its analytic gradient.
[[nodiscard]] LossGradient loss_and_gradient(const PredictorModel& model,
                                             std::span<const Sample> samples);
[[nodiscard]] double mean_loss(const PredictorModel& model, std::span<const Sample> samples);

/// Order in which pooled samples are visited in a mini-batch epoch.
[[nodiscard]] std::vector<std::size_t> epoch_permutation(std::uint64_t seed, int epoch, std::size_t n);

struct TrainingTrace {
  std::vector<double> epoch_losses;  ///< full training loss after each epoch
};

/// Minimises the cross-entropy summed over every sample of every dataset
/// (scaled by the pooled sample count). `init` supplies the layout and the
/// starting weights: an untrained model uses `learning_rate`/`epochs`, a
/// trained one is finetuned with the finetune rate and epoch count. Throws
/// DataError when `init` is null.
[[nodiscard]] PredictorModel train(std::span<const std::vector<Sample>> datasets,
                                   const PredictorConfig& cfg, const PredictorModel* init = nullptr,
                                   TrainingTrace* trace = nullptr);

struct RankedIntent {
  int intent_id = 0;
  double score = 0.0;
};

/// Softmax scores, descending; equal scores keep ascending intent order.
[[nodiscard]] std::vector<RankedIntent> predict_ranking(const PredictorModel& model,
                                                        const SparseFeatures& x);

/// Macro averages over all N_B classes; a class never predicted (or never
/// true) contributes 0 precision (recall).
[[nodiscard]] double macro_precision(std::span<const int> predictions, std::span<const int> truths,
                                     int class_count);
[[nodiscard]] double macro_recall(std::span<const int> predictions, std::span<const int> truths,
                                  int class_count);

/// Binary relevance; IDCG = 1.
[[nodiscard]] double ndcg_at_k(std::span<const RankedIntent> ranking, int true_intent, int k);

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double ndcg3 = 0.0;
  double ndcg5 = 0.0;
  std::size_t samples = 0;
};

[[nodiscard]] EvalReport evaluate(const PredictorModel& model, std::span<const Sample> samples);

/// Unweighted mean over users.
[[nodiscard]] EvalReport mean_report(std::span<const EvalReport> reports);

/// Relative gain over the strongest comparison arm.
[[nodiscard]] double improvement_rate(double ours, double best_other);
/// Share of the real-data finetuning gain recovered with synthetic data.
[[nodiscard]] double replacement_rate(double synthetic_finetuned, double pretrained,
                                      double real_finetuned);

enum class ScenarioId { pretrain_aug, finetune_replace, finetune_aug };

[[nodiscard]] std::string_view to_string(ScenarioId id);
[[nodiscard]] ScenarioId parse_scenario_id(std::string_view text);

struct MetricSet {
  double precision = 0.0;
  double recall = 0.0;
  double ndcg3 = 0.0;
  double ndcg5 = 0.0;
};

struct ScenarioReport {
  ScenarioId id = ScenarioId::pretrain_aug;
  std::vector<std::pair<std::string, EvalReport>> arms;
  MetricSet improvement;                 ///< pretrain_aug, finetune_aug
  std::optional<MetricSet> replacement;  ///< finetune_replace only
  std::size_t users = 0;

  [[nodiscard]] const EvalReport& arm(std::string_view name) const;
};

struct ScenarioOptions {
  PredictorConfig predictor;
  SplitSpec split;
  /// Real events kept for finetune augmentation.
  std::size_t limited_real_events = 105;
  std::size_t max_parallel = 4;
};

[[nodiscard]] ScenarioReport run_scenario(ScenarioId id, const Dataset& real_population,
                                          const Dataset& real_individual, const Dataset& synth,
                                          const ScenarioOptions& options);

}  // namespace behsynth
