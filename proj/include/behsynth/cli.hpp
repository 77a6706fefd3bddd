#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "behsynth/backends.hpp"
#include "behsynth/classifiers.hpp"
#include "behsynth/dataio.hpp"
#include "behsynth/downstream.hpp"
#include "behsynth/json_io.hpp"
#include "behsynth/prompt.hpp"
#include "behsynth/simgen.hpp"

namespace behsynth {

/// Everything a pipeline run needs. Loaded from one JSON file; command-line
/// flags override individual fields. Relative paths in the file resolve
/// against the file's directory.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "out";
  /// Real dataset; defaults to <output_dir>/real.csv.
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> profiles;
  /// Synthetic datasets, one per run; default <output_dir>/synth_run<r>.csv.
  std::vector<std::filesystem::path> synthetic;
  bool strict = true;

  std::size_t simulated_users = 24;
  std::optional<std::filesystem::path> archetypes_file;
  SimConfig sim;

  SplitSpec split;
  GenerationPolicy policy;
  int runs = 3;
  std::size_t max_parallel = 4;
  BackendConfig backend;

  PredictorConfig predictor;
  std::size_t limited_real_events = 105;
  std::vector<ScenarioId> scenarios{ScenarioId::pretrain_aug, ScenarioId::finetune_replace,
                                    ScenarioId::finetune_aug};

  std::vector<int> k_list{1, 3, 5};
  double uniqueness_threshold = 0.3;
  double delta = 1e-5;
  std::vector<ClassifierId> classifiers{std::begin(kAllClassifiers), std::end(kAllClassifiers)};

  /// Throws ConfigError for a missing seed or inconsistent settings.
  void check() const;
  [[nodiscard]] std::uint64_t require_seed() const;
  [[nodiscard]] std::filesystem::path input_path() const;
  [[nodiscard]] std::vector<std::filesystem::path> synthetic_paths() const;
};

/// Unknown keys and mistyped values raise ConfigError.
[[nodiscard]] RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

/// Applies the archetype file (if any) and rebuilds the occupation table from
/// the archetypes.
void resolve_simulation(RunConfig& cfg);

/// Entry point; returns the process exit status (0 ok, 2 config, 3 data,
/// 4 backend, 1 anything else).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace behsynth
