#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "clayid/inverse.hpp"

namespace clayid {

/// Ablation stage settings (reduced epochs and grid keep the study at
/// desk scale; the selection machinery is identical to the main run).
struct AblationSettings {
  std::vector<double> fractions{0.75, 0.5, 0.25, 0.10, 0.05};
  int repeats = 10;
  int epochs = 2000;
  int grid_levels = 50;
};

/// Whole-run configuration. Every constant of the published tables
/// (impact cases, baseline material, factorial levels, grid bounds,
/// reference depths) lives here rather than in code, so deviations are
/// auditable from the config file alone.
struct PipelineConfig {
  std::uint64_t seed = 42;
  int jobs = 0;
  std::filesystem::path fixtures_dir = "fixtures";
  std::filesystem::path out_dir = "out";

  std::vector<ImpactCase> cases;
  MaterialParams material;
  SolverConfig solver;

  double screen_threshold = 0.1;

  TrainConfig train;
  bool train_grid = true;
  std::vector<int> fallback_hidden{50, 50};  ///< architecture when grid off

  GridSpec grid;
  std::array<double, 3> refs{16.0, 25.0, 19.0};
  SelectConfig select_cfg;
  AblationSettings ablation_cfg;

  void validate() const;
};

PipelineConfig default_config();
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& cfg);
void save_config(const PipelineConfig& cfg, const std::filesystem::path& path);

/// FNV-1a fingerprint of the canonical config serialization; embedded in
/// every JSON output and recorded in stage manifests so that stages fed
/// with outputs of a different configuration can refuse to run.
std::string config_hash(const PipelineConfig& cfg);

// Stage commands. Each writes its outputs plus a
// <stage>.manifest.json into cfg.out_dir; on failure, partially written
// files keep a .partial suffix. ConfigError signals a bad configuration
// or mixed-config inputs; any other failure surfaces as StageError.

void cmd_simulate(const PipelineConfig& cfg, int case_id);
void cmd_doe(const PipelineConfig& cfg, const std::string& design);
void cmd_screen(const PipelineConfig& cfg, const std::filesystem::path& dataset);
void cmd_train(const PipelineConfig& cfg, const std::filesystem::path& dataset);
void cmd_invert(const PipelineConfig& cfg, const std::filesystem::path& models_dir);
void cmd_validate(const PipelineConfig& cfg,
                  const std::filesystem::path& inverse_json);
void cmd_ablate(const PipelineConfig& cfg, const std::filesystem::path& dataset);

/// Runs doe(oat) -> screen -> doe(factorial) -> train -> invert ->
/// validate and writes a final summary naming the optimal (B, n, C) and
/// the baseline-vs-optimized mean relative error.
void cmd_pipeline(const PipelineConfig& cfg, std::ostream& summary);

/// Re-derives the frozen lumped-solver constants; maintenance utility.
void cmd_calibrate(const PipelineConfig& cfg, std::ostream& out);

}  // namespace clayid
