#include "doctest.h"

#include <cmath>

#include "behsynth/downstream.hpp"
#include "helpers.hpp"

using namespace behsynth;
using testing::make_sequence;

namespace {

FeatureLayout layout_for(int intents = 6, int locations = 4) {
  PredictorConfig cfg;
  auto v = testing::small_vocab(locations, intents);
  return make_layout(cfg, v);
}

std::vector<Sample> random_samples(Rng& rng, const FeatureLayout& layout, std::size_t n) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<BehaviorEvent> hist;
    for (int h = 0; h < layout.history_length; ++h) {
      hist.push_back({0, 0, h, static_cast<int>(rng.below(static_cast<std::uint64_t>(layout.location_count))),
                      static_cast<int>(rng.below(static_cast<std::uint64_t>(layout.intent_count)))});
    }
    out.push_back({featurize(hist, static_cast<int>(rng.below(7)), static_cast<int>(rng.below(96)), layout),
                   static_cast<int>(rng.below(static_cast<std::uint64_t>(layout.intent_count)))});
  }
  return out;
}

}  // namespace

TEST_CASE("featurize activates one coordinate per block") {
  const auto layout = layout_for();
  const std::vector<BehaviorEvent> hist{{0, 0, 1, 2, 3}, {0, 0, 2, 1, 5}};
  const auto x = featurize(hist, 4, 50, layout);
  CHECK(x.size() == static_cast<std::size_t>(layout.history_length) + 4);
  CHECK(std::is_sorted(x.begin(), x.end()));
  CHECK(x == featurize(hist, 4, 50, layout));
  CHECK(x.front() == 4);
  CHECK(x.back() == layout.bias_index());
  CHECK(std::count(x.begin(), x.end(), layout.intent_offset(0) + 3) == 1);
  CHECK(std::count(x.begin(), x.end(), layout.intent_offset(1) + 5) == 1);
  CHECK(std::count(x.begin(), x.end(), layout.location_offset() + 1) == 1);

  // Changing only the weekday moves exactly one coordinate.
  const auto y = featurize(hist, 5, 50, layout);
  std::vector<std::uint32_t> diff;
  std::set_symmetric_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(diff));
  CHECK(diff.size() == 2);
  CHECK_THROWS_AS((void)featurize(std::vector<BehaviorEvent>{hist[0]}, 0, 0, layout), DataError);
}

TEST_CASE("make_samples skips targets without enough history") {
  const auto layout = layout_for();
  std::vector<BehaviorEvent> ev;
  for (int i = 0; i < 10; ++i) ev.push_back({0, 0, i, 1, i % 6});
  const auto seq = make_sequence("u", ev);
  const auto all = make_samples(seq, layout);
  CHECK(all.size() == 8);
  CHECK(all.front().label == 2);
  CHECK(make_samples(seq, layout, 7).size() == 3);
  CHECK(make_samples(seq, layout, 0, 3).size() == 1);
}

TEST_CASE("analytic gradient matches finite differences") {
  const auto layout = layout_for();
  Rng rng(14);
  const auto samples = random_samples(rng, layout, 40);
  auto model = PredictorModel::zeros(layout);
  for (auto& w : model.weights) w = 0.5 * rng.normal();
  const auto lg = loss_and_gradient(model, samples);
  CHECK(lg.loss == doctest::Approx(mean_loss(model, samples)));
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < model.weights.size(); i += 7) {
    auto plus = model, minus = model;
    plus.weights[i] += h;
    minus.weights[i] -= h;
    const double numeric = (mean_loss(plus, samples) - mean_loss(minus, samples)) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(lg.gradient[i]), 1e-8});
    worst = std::max(worst, std::abs(numeric - lg.gradient[i]) / denom);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("training drives a single-class loss to zero and never increases the loss") {
  const auto layout = layout_for();
  Rng rng(3);
  auto samples = random_samples(rng, layout, 60);
  PredictorConfig cfg;
  const auto zero = PredictorModel::zeros(layout);

  SUBCASE("single class") {
    for (auto& s : samples) s.label = 2;
    std::vector<std::vector<Sample>> sets{samples};
    const auto m = train(sets, cfg, &zero);
    CHECK(mean_loss(m, samples) < 0.01);
    CHECK(m.provenance == TrainingProvenance::pretrained);
  }
  SUBCASE("monotone loss at defaults") {
    std::vector<std::vector<Sample>> sets{samples};
    TrainingTrace trace;
    (void)train(sets, cfg, &zero, &trace);
    REQUIRE(trace.epoch_losses.size() == static_cast<std::size_t>(cfg.epochs));
    for (std::size_t i = 1; i < trace.epoch_losses.size(); ++i) {
      CHECK(trace.epoch_losses[i] <= trace.epoch_losses[i - 1] + 1e-12);
    }
  }
  SUBCASE("finetuning uses the finetune schedule") {
    std::vector<std::vector<Sample>> sets{samples};
    const auto pre = train(sets, cfg, &zero);
    TrainingTrace trace;
    const auto ft = train(sets, cfg, &pre, &trace);
    CHECK(trace.epoch_losses.size() == static_cast<std::size_t>(cfg.finetune_epochs));
    CHECK(ft.provenance == TrainingProvenance::finetuned);
  }
  std::vector<std::vector<Sample>> sets{samples};
  CHECK_THROWS_AS((void)train(sets, cfg, nullptr), DataError);
}

TEST_CASE("summed loss over datasets equals training on the pooled set") {
  const auto layout = layout_for();
  Rng rng(44);
  const auto a = random_samples(rng, layout, 30);
  const auto b = random_samples(rng, layout, 20);
  std::vector<Sample> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto zero = PredictorModel::zeros(layout);
  for (std::size_t batch : {std::size_t{0}, std::size_t{8}}) {
    PredictorConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = batch;
    cfg.seed = 5;
    std::vector<std::vector<Sample>> split{a, b};
    std::vector<std::vector<Sample>> joined{pooled};
    CHECK(train(split, cfg, &zero).weights == train(joined, cfg, &zero).weights);
  }
  const auto p = epoch_permutation(5, 2, 50);
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  CHECK(p == epoch_permutation(5, 2, 50));
  CHECK(p != epoch_permutation(5, 3, 50));
}

TEST_CASE("predict_ranking orders by score with stable ties") {
  const auto layout = layout_for(4, 2);
  auto model = PredictorModel::zeros(layout);
  const std::vector<BehaviorEvent> hist{{0, 0, 0, 0, 0}, {0, 0, 1, 0, 0}};
  const auto x = featurize(hist, 0, 0, layout);
  auto r = predict_ranking(model, x);
  REQUIRE(r.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(r[static_cast<std::size_t>(i)].intent_id == i);
  model.weight(layout.bias_index(), 2) = 1.0;
  r = predict_ranking(model, x);
  CHECK(r[0].intent_id == 2);
  CHECK(r[1].intent_id == 0);
  double total = 0.0;
  for (const auto& e : r) total += e.score;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("macro precision/recall and NDCG") {
  const std::vector<int> truths{0, 0, 1, 1}, preds{0, 1, 1, 1};
  CHECK(macro_precision(preds, truths, 2) == doctest::Approx(5.0 / 6.0));
  CHECK(macro_recall(preds, truths, 2) == doctest::Approx(0.75));
  // Classes outside the observed set still count in the denominator.
  CHECK(macro_precision(preds, truths, 4) == doctest::Approx(5.0 / 12.0));

  const std::vector<RankedIntent> ranking{{4, 0.5}, {1, 0.3}, {2, 0.1}, {0, 0.05}, {3, 0.05}};
  CHECK(ndcg_at_k(ranking, 4, 3) == 1.0);
  CHECK(std::abs(ndcg_at_k(ranking, 1, 3) - 0.6309) < 1e-4);
  CHECK(ndcg_at_k(ranking, 2, 3) == doctest::Approx(0.5));
  CHECK(ndcg_at_k(ranking, 0, 3) == 0.0);
  CHECK(ndcg_at_k(ranking, 0, 5) == doctest::Approx(1.0 / std::log2(5.0)));
  double prev = 2.0;
  for (const auto& r : ranking) {
    const double g = ndcg_at_k(ranking, r.intent_id, 5);
    CHECK(g <= prev);
    prev = g;
  }
}

TEST_CASE("table arithmetic") {
  CHECK(std::abs(100.0 * replacement_rate(0.540, 0.447, 0.597) - 62.0) < 0.1);
  CHECK(std::abs(100.0 * improvement_rate(0.447, 0.436) - 2.5) < 0.1);
  CHECK(std::isnan(replacement_rate(0.5, 0.4, 0.4)));
  CHECK(std::isnan(improvement_rate(0.5, 0.0)));
  CHECK(parse_scenario_id("finetune_aug") == ScenarioId::finetune_aug);
  CHECK_THROWS_AS((void)parse_scenario_id("bogus"), ConfigError);
}

TEST_CASE("scenarios on simulator data") {
  SimConfig sim;
  sim.seed = 31;
  sim.weeks = 4;
  sim.routine_strength = 0.9;
  const auto all = simulate_population(sample_profiles(16, 31, sim), sim);
  SplitSpec split;
  split.population_user_count = 8;
  const auto [pop, ind] = split_population_individual(all, split, 31);
  ScenarioOptions opt;
  opt.split = split;
  opt.predictor.epochs = 120;
  opt.predictor.finetune_epochs = 60;

  SUBCASE("finetuning on the user's own training data recovers the whole gain") {
    Dataset synth = ind;
    for (auto& s : synth.sequences) s = split_chronological(s, split).train;
    const auto rep = run_scenario(ScenarioId::finetune_replace, pop, ind, synth, opt);
    REQUIRE(rep.arms.size() == 3);
    CHECK(rep.arms[0].first == "pretrained");
    CHECK(rep.arms[1].first == "finetuned_real");
    CHECK(rep.arms[2].first == "finetuned_synthetic");
    REQUIRE(rep.replacement);
    CHECK(rep.replacement->precision == doctest::Approx(1.0));
    CHECK(rep.arm("finetuned_real").precision >= rep.arm("pretrained").precision);
    CHECK_THROWS_AS((void)rep.arm("nope"), DataError);
  }
  SUBCASE("arm names of the other scenarios") {
    const auto a = run_scenario(ScenarioId::pretrain_aug, pop, ind, ind, opt);
    REQUIRE(a.arms.size() == 2);
    CHECK(a.arms[1].first == "pretrained_augmented");
    CHECK_FALSE(a.replacement);
    const auto b = run_scenario(ScenarioId::finetune_aug, pop, ind, ind, opt);
    REQUIRE(b.arms.size() == 3);
    CHECK(b.arms[1].first == "finetuned_limited_real");
    CHECK(b.arms[2].first == "finetuned_augmented");
    for (const auto& [name, r] : b.arms) {
      for (double m : {r.precision, r.recall, r.ndcg3, r.ndcg5}) {
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
      }
      CHECK(r.ndcg5 >= r.ndcg3);
    }
  }
  SUBCASE("missing synthetic users are an error") {
    Dataset synth = ind;
    synth.sequences.pop_back();
    CHECK_THROWS_AS((void)run_scenario(ScenarioId::finetune_replace, pop, ind, synth, opt), DataError);
  }
}
