#include "behsynth/cli.hpp"

#include <algorithm>
#include <charconv>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/core.h>

#include "CLI11.hpp"

#include "behsynth/fidelity.hpp"
#include "behsynth/privacy.hpp"
#include "behsynth/random.hpp"
#include "behsynth/reports.hpp"

namespace behsynth {

namespace fs = std::filesystem;

// --- Config ------------------------------------------------------------------

namespace {

// Reads the keys of one JSON object and rejects any it did not ask for.
class Section {
 public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("config: '{}' must be an object", name_));
  }

  template <typename T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(fmt::format("config: '{}.{}' has the wrong type", name_, key));
    }
    return true;
  }

  bool path(const std::string& key, const fs::path& base, fs::path& out) {
    std::string text;
    if (!get(key, text)) return false;
    out = resolve(base, text);
    return true;
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(fmt::format("config: unknown key '{}.{}'", name_, item.key()));
      }
    }
  }

  static fs::path resolve(const fs::path& base, const std::string& text) {
    fs::path p(text);
    return p.is_relative() ? base / p : p;
  }

 private:
  const Json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

constexpr std::string_view kRealFile = "real.csv";
constexpr std::string_view kAuditFile = "audit.jsonl";
constexpr std::string_view kSummaryFile = "summary.txt";

std::string synth_file(int run) { return fmt::format("synth_run{}.csv", run); }
std::string scenario_file(ScenarioId id) { return fmt::format("scenario_{}.txt", to_string(id)); }

}  // namespace

void RunConfig::check() const {
  (void)require_seed();
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  if (simulated_users < 2) throw ConfigError("simulation.users must be >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("privacy.delta must lie in (0,1)");
  if (k_list.empty()) throw ConfigError("privacy.k_list must not be empty");
  split.check_fractions();
  policy.check();
  predictor.check();
  sim.check();
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required (config 'seed' or --seed)");
  return *seed;
}

fs::path RunConfig::input_path() const { return input ? *input : output_dir / kRealFile; }

std::vector<fs::path> RunConfig::synthetic_paths() const {
  if (!synthetic.empty()) return synthetic;
  std::vector<fs::path> out;
  for (int r = 0; r < runs; ++r) out.push_back(output_dir / synth_file(r));
  return out;
}

RunConfig run_config_from_json(const Json& j, const fs::path& base) {
  RunConfig cfg;
  Section top(j, "config");
  std::uint64_t seed = 0;
  if (top.get("seed", seed)) cfg.seed = seed;
  top.path("output_dir", base, cfg.output_dir);
  fs::path p;
  if (top.path("input", base, p)) cfg.input = p;
  if (top.path("profiles", base, p)) cfg.profiles = p;
  std::vector<std::string> synth;
  if (top.get("synthetic", synth)) {
    for (const auto& s : synth) cfg.synthetic.push_back(Section::resolve(base, s));
  }
  top.get("strict", cfg.strict);

  if (const Json* s = top.child("simulation")) {
    Section sec(*s, "simulation");
    sec.get("users", cfg.simulated_users);
    sec.get("weeks", cfg.sim.weeks);
    sec.get("routine_strength", cfg.sim.routine_strength);
    sec.get("events_per_day_min", cfg.sim.events_per_day_min);
    sec.get("events_per_day_max", cfg.sim.events_per_day_max);
    if (sec.path("archetypes_file", base, p)) cfg.archetypes_file = p;
    sec.finish();
  }
  if (const Json* s = top.child("split")) {
    Section sec(*s, "split");
    sec.get("train_fraction", cfg.split.train_fraction);
    sec.get("valid_fraction", cfg.split.valid_fraction);
    sec.get("test_fraction", cfg.split.test_fraction);
    sec.get("population_users", cfg.split.population_user_count);
    sec.finish();
  }
  if (const Json* s = top.child("generation")) {
    Section sec(*s, "generation");
    sec.get("seed_window_days", cfg.policy.seed_window_days);
    sec.get("min_lines", cfg.policy.min_lines);
    sec.get("requested_lines", cfg.policy.requested_lines);
    sec.get("max_attempts_per_segment", cfg.policy.max_attempts_per_segment);
    sec.get("target_weeks", cfg.policy.target_weeks);
    sec.get("condition_on_previous", cfg.policy.condition_on_previous);
    sec.get("runs", cfg.runs);
    sec.get("max_parallel", cfg.max_parallel);
    sec.finish();
  }
  if (const Json* s = top.child("backend")) {
    Section sec(*s, "backend");
    std::string kind;
    if (sec.get("kind", kind)) cfg.backend.kind = parse_backend_kind(kind);
    sec.get("endpoint_url", cfg.backend.endpoint_url);
    sec.get("model", cfg.backend.model_name);
    sec.get("api_key_env", cfg.backend.api_key_env_var);
    sec.get("temperature", cfg.backend.temperature);
    long long ms = 0;
    if (sec.get("timeout_ms", ms)) cfg.backend.request_timeout = std::chrono::milliseconds(ms);
    sec.get("max_inflight", cfg.backend.max_inflight);
    sec.get("transport_retries", cfg.backend.transport_retries);
    if (sec.get("retry_backoff_ms", ms)) cfg.backend.retry_backoff = std::chrono::milliseconds(ms);
    sec.path("replay_path", base, cfg.backend.replay_path);
    sec.finish();
  }
  if (const Json* s = top.child("predictor")) {
    Section sec(*s, "predictor");
    sec.get("history_length", cfg.predictor.history_length);
    sec.get("timeslot_buckets", cfg.predictor.timeslot_buckets);
    sec.get("learning_rate", cfg.predictor.learning_rate);
    sec.get("epochs", cfg.predictor.epochs);
    sec.get("finetune_learning_rate", cfg.predictor.finetune_learning_rate);
    sec.get("finetune_epochs", cfg.predictor.finetune_epochs);
    sec.get("batch_size", cfg.predictor.batch_size);
    sec.get("limited_real_events", cfg.limited_real_events);
    std::vector<std::string> names;
    if (sec.get("scenarios", names)) {
      cfg.scenarios.clear();
      for (const auto& n : names) cfg.scenarios.push_back(parse_scenario_id(n));
    }
    sec.finish();
  }
  if (const Json* s = top.child("privacy")) {
    Section sec(*s, "privacy");
    sec.get("k_list", cfg.k_list);
    sec.get("threshold", cfg.uniqueness_threshold);
    sec.get("delta", cfg.delta);
    std::vector<std::string> names;
    if (sec.get("classifiers", names)) {
      cfg.classifiers.clear();
      for (const auto& n : names) cfg.classifiers.push_back(parse_classifier_id(n));
    }
    sec.finish();
  }
  top.finish();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

void resolve_simulation(RunConfig& cfg) {
  if (cfg.archetypes_file) {
    try {
      cfg.sim.archetypes = load_archetypes(*cfg.archetypes_file);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    auto& table = cfg.sim.vocabularies.profile_tables["occupation"];
    table.clear();
    for (const auto& a : cfg.sim.archetypes) table.push_back({a.occupation, a.label});
  }
  if (cfg.seed) cfg.sim.seed = *cfg.seed;
  cfg.predictor.seed = derive_seed(cfg.seed.value_or(0), {0x9BED});
  cfg.backend.sim_config = cfg.sim;
}

// --- Stages ------------------------------------------------------------------

namespace {

struct Paths {
  fs::path out;
  [[nodiscard]] fs::path file(std::string_view name) const { return out / name; }
};

std::string strip_dirs(std::string text, const fs::path& path) {
  const auto full = path.string();
  const auto name = path.filename().string();
  for (auto pos = text.find(full); !full.empty() && pos != std::string::npos; pos = text.find(full, pos)) {
    text.replace(pos, full.size(), name);
    pos += name.size();
  }
  return text;
}

Dataset load_real(const RunConfig& cfg) {
  LoadOptions opts;
  opts.strict = cfg.strict;
  opts.profiles_path = cfg.profiles;
  return load_dataset(cfg.input_path(), kEventsCsvFormat, opts).dataset;
}

std::vector<Dataset> load_synthetic(const RunConfig& cfg) {
  std::vector<Dataset> out;
  LoadOptions opts;
  opts.strict = cfg.strict;
  for (const auto& p : cfg.synthetic_paths()) out.push_back(load_dataset(p, kEventsCsvFormat, opts).dataset);
  return out;
}

SplitSpec resolved_split(const RunConfig& cfg, std::size_t users) {
  SplitSpec spec = cfg.split;
  if (spec.population_user_count == 0) spec.population_user_count = std::max<std::size_t>(1, users / 2);
  return spec;
}

std::pair<Dataset, Dataset> population_split(const RunConfig& cfg, const Dataset& real) {
  return split_population_individual(real, resolved_split(cfg, real.sequences.size()),
                                     derive_seed(cfg.require_seed(), {0x5B17}));
}

void write_report(const fs::path& path, std::string_view kind, const Json& body, std::ostream& out) {
  const auto doc = render_document(kind, body);
  write_text_file(path, doc);
  out << render_table(kind, body);
}

// Simulated users carry the seed they were drawn with; recover it from the id.
std::map<std::string, std::uint64_t> simulated_user_seeds(const Dataset& real, std::uint64_t seed) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& s : real.sequences) {
    const std::string_view id = s.user_id;
    if (id.rfind("user_", 0) != 0) continue;
    std::size_t ordinal = 0;
    const auto digits = id.substr(5);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ordinal);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) continue;
    if (simulated_user_id(ordinal) != id) continue;
    out[s.user_id] = seed + ordinal;
  }
  return out;
}

// Captures every response so a run can later be replayed offline.
class RecordingBackend final : public GeneratorBackend {
 public:
  explicit RecordingBackend(GeneratorBackend& inner) : inner_(inner) {}

  std::string complete(const CompletionRequest& request) override {
    auto response = inner_.complete(request);
    std::lock_guard lock(mutex_);
    records_.push_back({request.run, request.user_id, request.segment_index, request.attempt, response});
    return response;
  }

  // Sorted so each (user, segment) queue keeps its call order across runs.
  [[nodiscard]] std::string dump() {
    std::lock_guard lock(mutex_);
    std::sort(records_.begin(), records_.end());
    std::string out;
    for (const auto& [run, user, segment, attempt, response] : records_) {
      out += replay_record_line(user, segment, response) + "\n";
    }
    return out;
  }

 private:
  GeneratorBackend& inner_;
  std::mutex mutex_;
  std::vector<std::tuple<int, std::string, int, int, std::string>> records_;
};

void stage_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto seed = cfg.require_seed();
  const auto profiles = sample_profiles(cfg.simulated_users, seed, cfg.sim);
  const auto dataset = simulate_population(profiles, cfg.sim);
  const auto path = cfg.output_dir / kRealFile;
  save_dataset(dataset, path);
  out << fmt::format("simulated {} users, {} events -> {}\n", dataset.sequences.size(),
                     dataset.event_count(), path.string());
}

void stage_generate(const RunConfig& cfg, const std::optional<fs::path>& record_replay, std::ostream& out) {
  const auto seed = cfg.require_seed();
  const Dataset real = load_real(cfg);

  BackendConfig bcfg = cfg.backend;
  if (bcfg.kind == BackendKind::simulator) bcfg.user_seeds = simulated_user_seeds(real, seed);
  auto backend = make_backend(bcfg);
  std::optional<RecordingBackend> recorder;
  GeneratorBackend* active = backend.get();
  if (record_replay) active = &recorder.emplace(*backend);

  std::vector<UserSeed> users;
  for (const auto& s : real.sequences) {
    users.push_back({s.user_id, s.profile, seed_window(s, cfg.policy.seed_window_days)});
  }

  AuditLog audit(cfg.output_dir / kAuditFile);
  GenerationSummary summary;
  summary.backend = std::string(to_string(cfg.backend.kind));
  for (int run = 0; run < cfg.runs; ++run) {
    GenerationContext ctx{&real.vocabularies, cfg.policy, run, &audit};
    const auto records = generate_population(*active, users, ctx, cfg.max_parallel);
    Dataset synth{real.vocabularies, {}, SplitTag::unsplit};
    GenerationRun info;
    info.run = run;
    info.users = records.size();
    info.pass1 = pass_at_1(records);
    for (const auto& r : records) {
      info.total_attempts += static_cast<std::size_t>(r.attempts);
      if (!r.failed_segments.empty()) ++info.failed_users;
      if (r.final_sequence) {
        auto seq = *r.final_sequence;
        seq.provenance = Provenance::synthetic;
        info.synthetic_events += seq.events.size();
        synth.sequences.push_back(std::move(seq));
      }
    }
    if (synth.sequences.empty()) throw DataError(fmt::format("run {}: every user failed generation", run));
    const auto path = cfg.output_dir / synth_file(run);
    save_dataset(synth, path);
    info.output = path.filename().string();
    summary.runs.push_back(info);
    out << fmt::format("run {}: Pass@1 = {:.4f}\n", run, info.pass1);
  }
  if (record_replay) write_text_file(*record_replay, recorder->dump());
  write_report(cfg.output_dir / "generation.txt", "generation", to_json(summary), out);
}

void stage_validate(const RunConfig& cfg, const fs::path& dataset_path, std::ostream& out) {
  LoadOptions opts;
  opts.strict = false;
  opts.profiles_path = dataset_path == cfg.input_path() ? cfg.profiles : std::nullopt;
  const auto loaded = load_dataset(dataset_path, kEventsCsvFormat, opts);
  ValidationSummary v;
  v.dataset = dataset_path.filename().string();
  v.users = loaded.dataset.sequences.size();
  v.events = loaded.dataset.event_count();
  v.vocab_inferred = loaded.vocab_inferred;
  for (const auto& d : loaded.diagnostics) {
    auto msg = strip_dirs(d, dataset_path);
    // Dropped duplicates are repaired on load; every other note is a defect.
    if (msg.find("duplicate timestamp") != std::string::npos) {
      v.diagnostics.push_back(std::move(msg));
    } else {
      v.problems.push_back(std::move(msg));
    }
  }
  for (const auto& p : validate_dataset(loaded.dataset)) v.problems.push_back(strip_dirs(p, dataset_path));
  write_report(cfg.output_dir / "validation.txt", "validation", to_json(v), out);
  if (!v.valid()) {
    throw DataError(fmt::format("{}: {} problem(s) found, first: {}", v.dataset, v.problems.size(),
                                v.problems.front()));
  }
}

void stage_fidelity(const RunConfig& cfg, std::ostream& out) {
  const Dataset real = load_real(cfg);
  const auto synth = load_synthetic(cfg);
  auto report = fidelity_report(real, synth.front(), {});
  const auto gen_path = cfg.output_dir / "generation.txt";
  if (fs::exists(gen_path)) {
    const auto block = extract_json_block(read_text_file(gen_path));
    const auto& runs = block.at("body").at("runs");
    if (!runs.empty() && runs.front().at("pass1").is_number()) {
      report.pass1 = runs.front().at("pass1").get<double>();
    }
  }
  write_report(cfg.output_dir / "fidelity.txt", "fidelity", to_json(report), out);
}

// Per-user runs in run order; a user missing from any run is skipped.
std::map<std::string, std::vector<BehaviorSequence>> runs_by_user(const std::vector<Dataset>& runs) {
  std::map<std::string, std::vector<BehaviorSequence>> out;
  for (const auto& s : runs.front().sequences) {
    std::vector<BehaviorSequence> seqs;
    for (const auto& d : runs) {
      const auto* found = d.find(s.user_id);
      if (found == nullptr) break;
      seqs.push_back(*found);
    }
    if (seqs.size() == runs.size()) out.emplace(s.user_id, std::move(seqs));
  }
  return out;
}

void stage_privacy(const RunConfig& cfg, std::ostream& out) {
  const auto seed = cfg.require_seed();
  const Dataset real = load_real(cfg);
  const auto synth = load_synthetic(cfg);
  if (synth.size() < 2) throw ConfigError("privacy audit needs at least 2 generation runs");
  const auto [population, individual] = population_split(cfg, real);

  PrivacyReport report;
  report.runs = static_cast<int>(synth.size());
  report.uniqueness =
      uniqueness_audit(synth.front().sequences, real.sequences, cfg.k_list, cfg.uniqueness_threshold);

  // Members are the individual users (their real data is in the audited set);
  // nonmembers are the held-out population users.
  const auto per_user = runs_by_user(synth);
  const auto& member_real = individual.sequences;
  std::vector<FeatureRow> members, nonmembers;
  std::vector<UserOverlapSamples> eps_samples;
  for (const auto& s : individual.sequences) {
    auto it = per_user.find(s.user_id);
    if (it == per_user.end()) continue;
    members.push_back(mia_features(it->second, member_real));
    eps_samples.push_back(membership_overlap_samples(it->second, s.user_id, member_real));
  }
  for (const auto& s : population.sequences) {
    auto it = per_user.find(s.user_id);
    if (it == per_user.end()) continue;
    nonmembers.push_back(mia_features(it->second, member_real));
  }
  report.mia_members = members.size();
  report.mia_nonmembers = nonmembers.size();
  for (auto id : cfg.classifiers) {
    report.mia.push_back(mia_attack(members, nonmembers, id, derive_seed(seed, {0x3141})));
  }
  report.epsilon = epsilon_audit(eps_samples, cfg.delta);
  write_report(cfg.output_dir / "privacy.txt", "privacy", to_json(report), out);
}

void stage_evaluate(const RunConfig& cfg, const std::vector<ScenarioId>& scenarios, std::ostream& out) {
  const Dataset real = load_real(cfg);
  const auto synth = load_synthetic(cfg);
  const auto [population, individual] = population_split(cfg, real);
  ScenarioOptions options;
  options.predictor = cfg.predictor;
  options.split = resolved_split(cfg, real.sequences.size());
  options.limited_real_events = cfg.limited_real_events;
  options.max_parallel = cfg.max_parallel;
  for (auto id : scenarios) {
    const auto report = run_scenario(id, population, individual, synth.front(), options);
    write_report(cfg.output_dir / scenario_file(id), "scenario", to_json(report), out);
    out << "\n";
  }
}

void stage_report(const RunConfig& cfg, std::ostream& out) {
  std::vector<std::pair<std::string, Json>> sections;
  std::vector<fs::path> files{cfg.output_dir / "validation.txt", cfg.output_dir / "generation.txt",
                              cfg.output_dir / "fidelity.txt", cfg.output_dir / "privacy.txt"};
  for (auto id : cfg.scenarios) files.push_back(cfg.output_dir / scenario_file(id));
  for (const auto& f : files) {
    if (!fs::exists(f)) continue;
    auto block = extract_json_block(read_text_file(f));
    sections.emplace_back(block.at("kind").get<std::string>(), std::move(block.at("body")));
  }
  if (sections.empty()) {
    throw DataError(fmt::format("no stage reports found in {}", cfg.output_dir.string()));
  }
  const auto doc = render_summary(sections);
  write_text_file(cfg.output_dir / kSummaryFile, doc);
  out << doc;
}

}  // namespace

// --- Command line --------------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Profile-conditioned synthetic behaviour data: generation and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir, input, profiles, backend, replay, endpoint, model, api_key_env, archetypes;
  std::vector<std::string> synthetic;
  std::optional<int> runs, target_weeks, weeks;
  std::optional<std::size_t> max_parallel, max_inflight, population_users;
  std::optional<double> routine_strength;
  bool lenient = false;

  app.add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Global seed (required unless set in the config)");
  app.add_option("-o,--out", out_dir, "Output directory");
  app.add_option("--input", input, "Real dataset (events CSV)");
  app.add_option("--profiles", profiles, "Profile sidecar for the real dataset");
  app.add_option("--synthetic", synthetic, "Synthetic dataset(s), one per run");
  app.add_option("--backend", backend, "Generator backend: remote_chat | simulator | replay");
  app.add_option("--replay", replay, "Replay file for the replay backend");
  app.add_option("--endpoint", endpoint, "Chat-completion endpoint URL");
  app.add_option("--model", model, "Remote model name");
  app.add_option("--api-key-env", api_key_env, "Name of the environment variable holding the API key");
  app.add_option("--max-inflight", max_inflight, "Concurrent remote requests");
  app.add_option("--runs", runs, "Generation runs");
  app.add_option("--target-weeks", target_weeks, "Weeks generated per user");
  app.add_option("--max-parallel", max_parallel, "Worker threads");
  app.add_option("--population-users", population_users, "Users in the population split");
  app.add_option("--weeks", weeks, "Simulated weeks per user");
  app.add_option("--routine-strength", routine_strength, "Simulator routine strength in [0,1]");
  app.add_option("--archetypes", archetypes, "Archetype table (JSON)");
  app.add_flag("--lenient", lenient, "Skip invalid records instead of failing");

  auto* simulate = app.add_subcommand("simulate", "Simulate a real-like dataset");
  std::optional<std::size_t> users;
  simulate->add_option("--users", users, "Number of simulated users");

  auto* generate = app.add_subcommand("generate", "Generate synthetic sequences");
  std::string record_replay;
  generate->add_option("--record-replay", record_replay, "Write every response to a replay file");

  auto* validate = app.add_subcommand("validate", "Validate a dataset");
  std::string validate_path;
  validate->add_option("--dataset", validate_path, "Dataset to check (default: the real input)");

  auto* fidelity = app.add_subcommand("fidelity", "Compare synthetic with real data");

  auto* privacy = app.add_subcommand("privacy", "Uniqueness, membership inference and privacy budget");
  std::vector<std::string> classifiers;
  std::optional<double> delta, threshold;
  privacy->add_option("--classifier", classifiers, "lr | svm | knn | rf (repeatable)");
  privacy->add_option("--delta", delta, "Target delta");
  privacy->add_option("--threshold", threshold, "Uniqueness threshold");

  auto* evaluate = app.add_subcommand("evaluate", "Downstream intent prediction scenarios");
  std::vector<std::string> scenario_names;
  evaluate->add_option("--scenario", scenario_names, "pretrain_aug | finetune_replace | finetune_aug");

  auto* report = app.add_subcommand("report", "Merge stage reports into one summary");
  bool run_stages = false;
  report->add_flag("--run-stages", run_stages, "Run every stage first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!input.empty()) cfg.input = input;
    if (!profiles.empty()) cfg.profiles = profiles;
    if (!synthetic.empty()) cfg.synthetic.assign(synthetic.begin(), synthetic.end());
    if (!backend.empty()) cfg.backend.kind = parse_backend_kind(backend);
    if (!replay.empty()) cfg.backend.replay_path = replay;
    if (!endpoint.empty()) cfg.backend.endpoint_url = endpoint;
    if (!model.empty()) cfg.backend.model_name = model;
    if (!api_key_env.empty()) cfg.backend.api_key_env_var = api_key_env;
    if (max_inflight) cfg.backend.max_inflight = *max_inflight;
    if (runs) cfg.runs = *runs;
    if (target_weeks) cfg.policy.target_weeks = *target_weeks;
    if (max_parallel) cfg.max_parallel = *max_parallel;
    if (population_users) cfg.split.population_user_count = *population_users;
    if (weeks) cfg.sim.weeks = *weeks;
    if (routine_strength) cfg.sim.routine_strength = *routine_strength;
    if (!archetypes.empty()) cfg.archetypes_file = archetypes;
    if (lenient) cfg.strict = false;
    if (users) cfg.simulated_users = *users;
    if (delta) cfg.delta = *delta;
    if (threshold) cfg.uniqueness_threshold = *threshold;
    if (!classifiers.empty()) {
      cfg.classifiers.clear();
      for (const auto& c : classifiers) cfg.classifiers.push_back(parse_classifier_id(c));
    }
    if (!scenario_names.empty()) {
      cfg.scenarios.clear();
      for (const auto& s : scenario_names) cfg.scenarios.push_back(parse_scenario_id(s));
    }
    resolve_simulation(cfg);
    cfg.check();
    fs::create_directories(cfg.output_dir);

    if (simulate->parsed()) {
      stage_simulate(cfg, out);
    } else if (generate->parsed()) {
      std::optional<fs::path> record;
      if (!record_replay.empty()) record = fs::path(record_replay);
      stage_generate(cfg, record, out);
    } else if (validate->parsed()) {
      stage_validate(cfg, validate_path.empty() ? cfg.input_path() : fs::path(validate_path), out);
    } else if (fidelity->parsed()) {
      stage_fidelity(cfg, out);
    } else if (privacy->parsed()) {
      stage_privacy(cfg, out);
    } else if (evaluate->parsed()) {
      stage_evaluate(cfg, cfg.scenarios, out);
    } else if (report->parsed()) {
      if (run_stages) {
        std::ostringstream sink;
        if (!cfg.input) stage_simulate(cfg, sink);
        stage_validate(cfg, cfg.input_path(), sink);
        if (cfg.synthetic.empty()) stage_generate(cfg, std::nullopt, sink);
        stage_fidelity(cfg, sink);
        stage_privacy(cfg, sink);
        stage_evaluate(cfg, cfg.scenarios, sink);
      }
      stage_report(cfg, out);
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace behsynth
