#include "behsynth/downstream.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include <fmt/core.h>

#include "behsynth/random.hpp"

namespace behsynth {

void PredictorConfig::check() const {
  if (history_length < 1) throw ConfigError("history_length must be >= 1");
  if (timeslot_buckets < 1 || kTimeslotCount % timeslot_buckets != 0) {
    throw ConfigError("timeslot_buckets must divide 96");
  }
  if (!(learning_rate > 0.0) || !(finetune_learning_rate > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (epochs < 1 || finetune_epochs < 1) throw ConfigError("epoch counts must be >= 1");
}

std::size_t FeatureLayout::dimension() const {
  return static_cast<std::size_t>(kWeekdayCount + timeslot_buckets + history_length * intent_count +
                                  location_count + 1);
}

std::size_t FeatureLayout::intent_offset(int position) const {
  return static_cast<std::size_t>(kWeekdayCount + timeslot_buckets + position * intent_count);
}

std::size_t FeatureLayout::location_offset() const {
  return static_cast<std::size_t>(kWeekdayCount + timeslot_buckets + history_length * intent_count);
}

FeatureLayout make_layout(const PredictorConfig& cfg, const Vocabularies& vocab) {
  cfg.check();
  return {cfg.history_length, cfg.timeslot_buckets, vocab.intent_count(), vocab.location_count()};
}

SparseFeatures featurize(std::span<const BehaviorEvent> history, int weekday, int timeslot,
                         const FeatureLayout& layout) {
  if (static_cast<int>(history.size()) != layout.history_length) {
    throw DataError(fmt::format("featurize: context has {} events, need {}", history.size(),
                                layout.history_length));
  }
  if (weekday < 0 || weekday >= kWeekdayCount || timeslot < 0 || timeslot >= kTimeslotCount) {
    throw DataError("featurize: target time out of range");
  }
  const int slots_per_bucket = kTimeslotCount / layout.timeslot_buckets;
  SparseFeatures x;
  x.reserve(static_cast<std::size_t>(layout.history_length) + 4);
  x.push_back(static_cast<std::uint32_t>(weekday));
  x.push_back(static_cast<std::uint32_t>(layout.bucket_offset() +
                                         static_cast<std::size_t>(timeslot / slots_per_bucket)));
  for (int i = 0; i < layout.history_length; ++i) {
    const int intent = history[static_cast<std::size_t>(i)].intent_id;
    if (intent < 0 || intent >= layout.intent_count) throw DataError("featurize: intent out of range");
    x.push_back(static_cast<std::uint32_t>(layout.intent_offset(i) + static_cast<std::size_t>(intent)));
  }
  const int loc = history.back().location_id;
  if (loc < 0 || loc >= layout.location_count) throw DataError("featurize: location out of range");
  x.push_back(static_cast<std::uint32_t>(layout.location_offset() + static_cast<std::size_t>(loc)));
  x.push_back(static_cast<std::uint32_t>(layout.bias_index()));
  return x;
}

std::vector<Sample> make_samples(const BehaviorSequence& sequence, const FeatureLayout& layout,
                                 std::size_t begin, std::size_t end) {
  const auto& events = sequence.events;
  end = std::min(end, events.size());
  const auto history = static_cast<std::size_t>(layout.history_length);
  std::vector<Sample> out;
  for (std::size_t t = std::max(begin, history); t < end; ++t) {
    std::span<const BehaviorEvent> context(events.data() + (t - history), history);
    out.push_back({featurize(context, events[t].weekday, events[t].timeslot, layout),
                   events[t].intent_id});
  }
  return out;
}

PredictorModel PredictorModel::zeros(const FeatureLayout& layout) {
  PredictorModel m;
  m.layout = layout;
  m.weights.assign(layout.dimension() * static_cast<std::size_t>(layout.intent_count), 0.0);
  return m;
}

double& PredictorModel::weight(std::size_t feature, int intent) {
  return weights[feature * static_cast<std::size_t>(layout.intent_count) + static_cast<std::size_t>(intent)];
}

double PredictorModel::weight(std::size_t feature, int intent) const {
  return weights[feature * static_cast<std::size_t>(layout.intent_count) + static_cast<std::size_t>(intent)];
}

std::vector<double> PredictorModel::logits(const SparseFeatures& x) const {
  const auto k = static_cast<std::size_t>(layout.intent_count);
  std::vector<double> z(k, 0.0);
  for (auto f : x) {
    const double* row = weights.data() + static_cast<std::size_t>(f) * k;
    for (std::size_t c = 0; c < k; ++c) z[c] += row[c];
  }
  return z;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

namespace {

// Accumulates the summed (not averaged) loss and gradient of `samples`.
double accumulate(const PredictorModel& model, std::span<const Sample> samples,
                  std::span<const std::size_t> order, std::vector<double>* gradient) {
  const auto k = static_cast<std::size_t>(model.layout.intent_count);
  double loss = 0.0;
  for (auto idx : order) {
    const auto& s = samples[idx];
    auto z = model.logits(s.features);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_norm = mx + std::log(sum);
    loss += log_norm - z[static_cast<std::size_t>(s.label)];
    if (gradient != nullptr) {
      for (std::size_t c = 0; c < k; ++c) z[c] = std::exp(z[c] - log_norm);
      z[static_cast<std::size_t>(s.label)] -= 1.0;
      for (auto f : s.features) {
        double* g = gradient->data() + static_cast<std::size_t>(f) * k;
        for (std::size_t c = 0; c < k; ++c) g[c] += z[c];
      }
    }
  }
  return loss;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

}  // namespace

LossGradient loss_and_gradient(const PredictorModel& model, std::span<const Sample> samples) {
  if (samples.empty()) throw DataError("loss_and_gradient: no samples");
  LossGradient out;
  out.gradient.assign(model.weights.size(), 0.0);
  const auto order = identity_order(samples.size());
  out.loss = accumulate(model, samples, order, &out.gradient);
  const double n = static_cast<double>(samples.size());
  out.loss /= n;
  for (double& g : out.gradient) g /= n;
  return out;
}

double mean_loss(const PredictorModel& model, std::span<const Sample> samples) {
  if (samples.empty()) throw DataError("mean_loss: no samples");
  const auto order = identity_order(samples.size());
  return accumulate(model, samples, order, nullptr) / static_cast<double>(samples.size());
}

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, int epoch, std::size_t n) {
  auto order = identity_order(n);
  Rng rng(derive_seed(seed, {0xE90C, static_cast<std::uint64_t>(epoch)}));
  rng.shuffle(order);
  return order;
}

PredictorModel train(std::span<const std::vector<Sample>> datasets, const PredictorConfig& cfg,
                     const PredictorModel* init, TrainingTrace* trace) {
  cfg.check();
  if (datasets.empty()) throw DataError("train: no datasets");
  std::vector<Sample> pooled;
  for (const auto& d : datasets) {
    if (d.empty()) throw DataError("train: a dataset has no trainable contexts");
    pooled.insert(pooled.end(), d.begin(), d.end());
  }
  if (init == nullptr) throw DataError("train: missing layout (pass an initial model)");

  PredictorModel model = *init;
  const bool finetune = init->provenance != TrainingProvenance::untrained;
  const double rate = finetune ? cfg.finetune_learning_rate : cfg.learning_rate;
  const int epochs = finetune ? cfg.finetune_epochs : cfg.epochs;
  const std::size_t n = pooled.size();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);

  std::vector<double> gradient(model.weights.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto order = cfg.batch_size == 0 ? identity_order(n) : epoch_permutation(cfg.seed, epoch, n);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      std::fill(gradient.begin(), gradient.end(), 0.0);
      std::span<const std::size_t> slice(order.data() + start, stop - start);
      epoch_loss += accumulate(model, pooled, slice, &gradient);
      const double scale = rate / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < gradient.size(); ++i) model.weights[i] -= scale * gradient[i];
    }
    if (!std::isfinite(epoch_loss)) throw DataError("train: loss diverged (non-finite)");
    if (trace != nullptr) trace->epoch_losses.push_back(mean_loss(model, pooled));
  }
  model.provenance = finetune ? TrainingProvenance::finetuned : TrainingProvenance::pretrained;
  return model;
}

std::vector<RankedIntent> predict_ranking(const PredictorModel& model, const SparseFeatures& x) {
  const auto p = softmax(model.logits(x));
  std::vector<RankedIntent> out;
  out.reserve(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) out.push_back({static_cast<int>(c), p[c]});
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedIntent& a, const RankedIntent& b) { return a.score > b.score; });
  return out;
}

namespace {

struct Confusion {
  std::vector<double> tp, fp, fn;
};

Confusion confusion(std::span<const int> predictions, std::span<const int> truths, int class_count) {
  if (predictions.size() != truths.size()) throw DataError("metric: prediction/truth length mismatch");
  if (class_count < 1) throw DataError("metric: class_count must be >= 1");
  const auto k = static_cast<std::size_t>(class_count);
  Confusion c{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const int p = predictions[i];
    const int t = truths[i];
    if (p < 0 || p >= class_count || t < 0 || t >= class_count) throw DataError("metric: class out of range");
    if (p == t) {
      c.tp[static_cast<std::size_t>(t)] += 1.0;
    } else {
      c.fp[static_cast<std::size_t>(p)] += 1.0;
      c.fn[static_cast<std::size_t>(t)] += 1.0;
    }
  }
  return c;
}

}  // namespace

double macro_precision(std::span<const int> predictions, std::span<const int> truths, int class_count) {
  const auto c = confusion(predictions, truths, class_count);
  double sum = 0.0;
  for (std::size_t i = 0; i < c.tp.size(); ++i) {
    const double denom = c.tp[i] + c.fp[i];
    if (denom > 0.0) sum += c.tp[i] / denom;
  }
  return sum / class_count;
}

double macro_recall(std::span<const int> predictions, std::span<const int> truths, int class_count) {
  const auto c = confusion(predictions, truths, class_count);
  double sum = 0.0;
  for (std::size_t i = 0; i < c.tp.size(); ++i) {
    const double denom = c.tp[i] + c.fn[i];
    if (denom > 0.0) sum += c.tp[i] / denom;
  }
  return sum / class_count;
}

double ndcg_at_k(std::span<const RankedIntent> ranking, int true_intent, int k) {
  if (k < 1) throw DataError("ndcg_at_k: k must be >= 1");
  const std::size_t limit = std::min(static_cast<std::size_t>(k), ranking.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranking[i].intent_id == true_intent) return 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return 0.0;
}

EvalReport evaluate(const PredictorModel& model, std::span<const Sample> samples) {
  EvalReport report;
  report.samples = samples.size();
  if (samples.empty()) return report;
  std::vector<int> preds, truths;
  double n3 = 0.0, n5 = 0.0;
  for (const auto& s : samples) {
    const auto ranking = predict_ranking(model, s.features);
    preds.push_back(ranking.front().intent_id);
    truths.push_back(s.label);
    n3 += ndcg_at_k(ranking, s.label, 3);
    n5 += ndcg_at_k(ranking, s.label, 5);
  }
  report.precision = macro_precision(preds, truths, model.layout.intent_count);
  report.recall = macro_recall(preds, truths, model.layout.intent_count);
  report.ndcg3 = n3 / static_cast<double>(samples.size());
  report.ndcg5 = n5 / static_cast<double>(samples.size());
  return report;
}

EvalReport mean_report(std::span<const EvalReport> reports) {
  EvalReport out;
  if (reports.empty()) return out;
  for (const auto& r : reports) {
    out.precision += r.precision;
    out.recall += r.recall;
    out.ndcg3 += r.ndcg3;
    out.ndcg5 += r.ndcg5;
    out.samples += r.samples;
  }
  const double n = static_cast<double>(reports.size());
  out.precision /= n;
  out.recall /= n;
  out.ndcg3 /= n;
  out.ndcg5 /= n;
  return out;
}

double improvement_rate(double ours, double best_other) {
  if (best_other == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (ours - best_other) / best_other;
}

double replacement_rate(double synthetic_finetuned, double pretrained, double real_finetuned) {
  const double gain = real_finetuned - pretrained;
  if (gain == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (synthetic_finetuned - pretrained) / gain;
}

std::string_view to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::pretrain_aug: return "pretrain_aug";
    case ScenarioId::finetune_replace: return "finetune_replace";
    case ScenarioId::finetune_aug: return "finetune_aug";
  }
  return "pretrain_aug";
}

ScenarioId parse_scenario_id(std::string_view text) {
  for (auto id : {ScenarioId::pretrain_aug, ScenarioId::finetune_replace, ScenarioId::finetune_aug}) {
    if (to_string(id) == text) return id;
  }
  throw ConfigError(fmt::format("unknown scenario '{}'", text));
}

const EvalReport& ScenarioReport::arm(std::string_view name) const {
  for (const auto& [arm_name, report] : arms) {
    if (arm_name == name) return report;
  }
  throw DataError(fmt::format("scenario report has no arm '{}'", name));
}

namespace {

MetricSet per_metric(const EvalReport& a, const EvalReport& b, double (*f)(double, double)) {
  return {f(a.precision, b.precision), f(a.recall, b.recall), f(a.ndcg3, b.ndcg3), f(a.ndcg5, b.ndcg5)};
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t max_parallel, Fn&& body) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(max_parallel, 1, std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct UserSplit {
  std::vector<Sample> train;
  std::vector<Sample> train_limited;
  std::vector<Sample> test;
  std::vector<Sample> synth_train;
};

}  // namespace

ScenarioReport run_scenario(ScenarioId id, const Dataset& real_population,
                            const Dataset& real_individual, const Dataset& synth,
                            const ScenarioOptions& options) {
  const auto& vocab = real_population.vocabularies;
  if (!vocab.same_event_space(real_individual.vocabularies) ||
      !vocab.same_event_space(synth.vocabularies)) {
    throw DataError("run_scenario: datasets use different vocabularies");
  }
  options.split.check_fractions();
  const FeatureLayout layout = make_layout(options.predictor, vocab);
  const PredictorConfig& cfg = options.predictor;

  std::vector<Sample> population_samples;
  for (const auto& seq : real_population.sequences) {
    auto s = make_samples(seq, layout);
    population_samples.insert(population_samples.end(), s.begin(), s.end());
  }
  if (population_samples.empty()) throw DataError("run_scenario: population has no trainable contexts");

  // Per-user splits; the test contexts may reach back into the train/valid part.
  const auto& users = real_individual.sequences;
  if (users.empty()) throw DataError("run_scenario: no individual users");
  std::vector<UserSplit> splits(users.size());
  for (std::size_t u = 0; u < users.size(); ++u) {
    const auto parts = split_chronological(users[u], options.split);
    const std::size_t test_begin = parts.train.events.size() + parts.valid.events.size();
    splits[u].test = make_samples(users[u], layout, test_begin);
    splits[u].train = make_samples(parts.train, layout);
    BehaviorSequence limited = parts.train;
    if (limited.events.size() > options.limited_real_events) limited.events.resize(options.limited_real_events);
    splits[u].train_limited = make_samples(limited, layout);
    if (id != ScenarioId::pretrain_aug) {
      const auto* s = synth.find(users[u].user_id);
      if (s == nullptr || s->events.empty()) {
        throw DataError(fmt::format("run_scenario: no synthetic data for user '{}'", users[u].user_id));
      }
      splits[u].synth_train = make_samples(*s, layout);
    }
  }

  ScenarioReport report;
  report.id = id;
  report.users = users.size();
  const auto zero = PredictorModel::zeros(layout);

  std::vector<std::vector<Sample>> pre_sets{population_samples};
  const PredictorModel pretrained = train(pre_sets, cfg, &zero);

  std::vector<EvalReport> pre_eval(users.size());
  if (id == ScenarioId::pretrain_aug) {
    std::vector<Sample> synth_samples;
    for (const auto& seq : synth.sequences) {
      auto s = make_samples(seq, layout);
      synth_samples.insert(synth_samples.end(), s.begin(), s.end());
    }
    if (synth_samples.empty()) throw DataError("run_scenario: synthetic data has no trainable contexts");
    std::vector<std::vector<Sample>> aug_sets{population_samples, synth_samples};
    const PredictorModel augmented = train(aug_sets, cfg, &zero);
    std::vector<EvalReport> aug_eval(users.size());
    for (std::size_t u = 0; u < users.size(); ++u) {
      pre_eval[u] = evaluate(pretrained, splits[u].test);
      aug_eval[u] = evaluate(augmented, splits[u].test);
    }
    const auto a = mean_report(pre_eval);
    const auto b = mean_report(aug_eval);
    report.arms = {{"pretrained", a}, {"pretrained_augmented", b}};
    report.improvement = per_metric(b, a, &improvement_rate);
    return report;
  }

  std::vector<EvalReport> arm_a(users.size());
  std::vector<EvalReport> arm_b(users.size());
  parallel_for(users.size(), options.max_parallel, [&](std::size_t u) {
    pre_eval[u] = evaluate(pretrained, splits[u].test);
    const auto& split = splits[u];
    if (id == ScenarioId::finetune_replace) {
      if (split.train.empty() || split.synth_train.empty()) {
        throw DataError(fmt::format("user '{}' lacks trainable contexts", users[u].user_id));
      }
      std::vector<std::vector<Sample>> real_set{split.train};
      std::vector<std::vector<Sample>> synth_set{split.synth_train};
      arm_a[u] = evaluate(train(real_set, cfg, &pretrained), split.test);
      arm_b[u] = evaluate(train(synth_set, cfg, &pretrained), split.test);
    } else {
      if (split.train_limited.empty() || split.synth_train.empty()) {
        throw DataError(fmt::format("user '{}' lacks trainable contexts", users[u].user_id));
      }
      std::vector<std::vector<Sample>> limited{split.train_limited};
      std::vector<std::vector<Sample>> augmented{split.train_limited, split.synth_train};
      arm_a[u] = evaluate(train(limited, cfg, &pretrained), split.test);
      arm_b[u] = evaluate(train(augmented, cfg, &pretrained), split.test);
    }
  });

  const auto pre = mean_report(pre_eval);
  const auto a = mean_report(arm_a);
  const auto b = mean_report(arm_b);
  if (id == ScenarioId::finetune_replace) {
    report.arms = {{"pretrained", pre}, {"finetuned_real", a}, {"finetuned_synthetic", b}};
    report.replacement = MetricSet{replacement_rate(b.precision, pre.precision, a.precision),
                                   replacement_rate(b.recall, pre.recall, a.recall),
                                   replacement_rate(b.ndcg3, pre.ndcg3, a.ndcg3),
                                   replacement_rate(b.ndcg5, pre.ndcg5, a.ndcg5)};
    report.improvement = per_metric(b, a, &improvement_rate);
  } else {
    report.arms = {{"pretrained", pre}, {"finetuned_limited_real", a}, {"finetuned_augmented", b}};
    report.improvement = per_metric(b, a, &improvement_rate);
  }
  return report;
}

}  // namespace behsynth
