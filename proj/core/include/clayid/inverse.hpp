#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "clayid/dataset.hpp"
#include "clayid/mlp.hpp"
#include "clayid/solver.hpp"

namespace clayid {

/// Linear (B, n, C) candidate grid specification.
struct GridSpec {
  std::array<double, 3> mins{59.5, 0.0725, 0.0625};
  std::array<double, 3> maxs{952.0, 1.16, 1.0};
  int levels = 100;
  std::size_t cap = 8'000'000;  ///< refuse grids larger than this

  void validate() const;
};

/// Lazy enumeration of the levels^3 candidates in lexicographic
/// (i, j, k) order; points are affine in their indices.
class CandidateGrid {
 public:
  explicit CandidateGrid(const GridSpec& spec);

  std::size_t size() const { return total_; }
  double step(int axis) const { return step_[axis]; }

  std::array<int, 3> indices_of(std::size_t linear) const;
  std::array<double, 3> params_at(int i, int j, int k) const;
  std::array<double, 3> params_at(std::size_t linear) const;

  const GridSpec& spec() const { return spec_; }

 private:
  GridSpec spec_;
  std::array<double, 3> step_{};
  std::size_t total_ = 0;
};

/// Mean absolute depth mismatch in mm:
///   (|r1 - k1| + |r2 - k2| + |r3 - k3|) / 3
/// The published form repeats the case-2 term where the case-3 one is
/// clearly intended; this uses k3 in the third term.
double objective(double k1, double k2, double k3,
                 const std::array<double, 3>& refs);

/// One scored grid point.
struct Candidate {
  std::array<int, 3> idx{};
  std::array<double, 3> params{};     ///< (B, n, C)
  std::array<double, 3> predicted{};  ///< surrogate depth per case [mm]
  double score = 0.0;                 ///< objective value [mm]
};

struct SweepConfig {
  std::size_t chunk = 16384;
  int jobs = 0;
};

/// Evaluates every candidate through the three per-case surrogates.
/// Chunks are computed in parallel but delivered to the sink in
/// ascending index order, so consumers see a deterministic stream.
void sweep(const std::array<const MlpModel*, 3>& models, const GridSpec& spec,
           const std::array<double, 3>& refs, const SweepConfig& cfg,
           const std::function<void(std::span<const Candidate>)>& sink);

/// Materialized sweep, for small grids and oracle comparisons.
std::vector<Candidate> sweep_all(const std::array<const MlpModel*, 3>& models,
                                 const GridSpec& spec,
                                 const std::array<double, 3>& refs,
                                 const SweepConfig& cfg = {});

struct SelectConfig {
  double per_case_cap = 0.10;  ///< per-case error bound
  double common_cap = 0.11;    ///< bound on the mean error over cases
  int top_k = 10;
  /// When false (default) errors are relative to the reference depth;
  /// when true they are absolute in mm.
  bool absolute_mm = false;
};

struct InverseResult {
  GridSpec grid;
  std::array<double, 3> refs{};
  SelectConfig select_cfg;
  /// Candidates under the per-case cap, sorted by that case's error.
  std::array<std::vector<Candidate>, 3> per_case;
  /// Candidates qualifying in all cases with mean error under the
  /// common cap, sorted by score.
  std::vector<Candidate> common;
  /// The top_k lowest-score members of common.
  std::vector<Candidate> top_k;
};

/// Filters an already-scored candidate stream. Deterministic: ties break
/// on the lexicographic grid index.
InverseResult select(std::span<const Candidate> stream, const GridSpec& spec,
                     const std::array<double, 3>& refs, const SelectConfig& cfg);

/// Sweep + select fused, streaming chunk by chunk so the full grid is
/// never materialized. Equal to select(sweep_all(...)) for any chunking.
InverseResult run_inverse(const std::array<const MlpModel*, 3>& models,
                          const GridSpec& spec, const std::array<double, 3>& refs,
                          const SelectConfig& select_cfg,
                          const SweepConfig& sweep_cfg = {});

/// Solver re-evaluation of one candidate (or of the baseline parameters).
struct ValidationRow {
  Candidate candidate;
  std::array<double, 3> solver_depths_mm{};
  std::array<double, 3> ann_abs_err_mm{};   ///< |surrogate - solver|
  std::array<double, 3> rel_err_vs_ref{};   ///< |solver - ref| / ref
  double mean_rel_err = 0.0;
  std::string error;  ///< non-empty when the solver failed

  bool ok() const { return error.empty(); }
};

struct ValidationReport {
  std::vector<ValidationRow> rows;   ///< one per top-k candidate
  std::size_t best_index = 0;        ///< argmin mean_rel_err among ok rows
  ValidationRow baseline;            ///< the unoptimized defaults, for contrast
};

/// Runs the forward solver for every top-k set and for the baseline
/// material, and picks the candidate with the smallest mean relative
/// error against the reference depths.
ValidationReport validate(const InverseResult& result,
                          std::span<const ImpactCase> cases,
                          const MaterialParams& base, const SolverConfig& solver,
                          int jobs = 0);

/// Reduced-training-set study configuration.
struct AblationConfig {
  std::vector<double> fractions{0.75, 0.5, 0.25, 0.10, 0.05};
  int repeats = 10;
  std::uint64_t seed = 0;
  TrainConfig train;
  std::array<std::vector<LayerSpec>, 3> archs;  ///< per-case architecture
  GridSpec grid;
  SelectConfig select_cfg;
  SweepConfig sweep_cfg;
};

struct AblationRepeat {
  double fraction = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;  ///< 1 - mean |surrogate - solver| / solver
  std::string error;      ///< non-empty when this repeat failed

  bool ok() const { return error.empty(); }
};

struct AblationReport {
  std::vector<AblationRepeat> runs;
  std::map<double, double> mean_accuracy;  ///< fraction -> mean over ok runs
};

/// For every fraction and repeat: subsample the training set, retrain the
/// per-case surrogates, rerun sweep/select/validate, and record the
/// prediction accuracy. Failed repeats are recorded, not fatal.
AblationReport ablation(const SampleSet& data, std::span<const ImpactCase> cases,
                        const MaterialParams& base, const SolverConfig& solver,
                        const std::array<double, 3>& refs,
                        const AblationConfig& cfg);

void write_inverse_json(std::ostream& out, const InverseResult& result,
                        const std::string& config_hash = {});
InverseResult read_inverse_json(const std::filesystem::path& path);
void write_common_csv(std::ostream& out, const InverseResult& result);
void write_validation_json(std::ostream& out, const ValidationReport& report,
                           const std::array<double, 3>& refs,
                           const std::string& config_hash = {});
void write_ablation_json(std::ostream& out, const AblationReport& report,
                         const std::string& config_hash = {});
void write_ablation_csv(std::ostream& out, const AblationReport& report);

}  // namespace clayid
