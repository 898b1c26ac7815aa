#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "clayid/constitutive.hpp"
#include "clayid/solver.hpp"

namespace clayid {

/// One (parameter set -> depth per case) record.
struct SampleRow {
  int run_id = 0;
  MaterialParams params;
  std::map<int, double> depths;  ///< case id -> indentation depth [mm]
};

enum class Provenance {
  fixture_a1,
  fixture_b1,
  generated_oat,
  generated_factorial,
  generated_subset,
};

std::string to_string(Provenance p);

struct SampleSet {
  std::vector<SampleRow> rows;
  Provenance provenance = Provenance::generated_oat;

  /// Throws if run ids repeat or a row is missing one of the given cases.
  void validate(const std::vector<int>& case_ids = {1, 2, 3}) const;

  /// Depth column for one case, in row order.
  std::vector<double> depth_column(int case_id) const;
};

/// Loads a bundled fixture by name. Known names:
///   "table_a1"      - 33-run one-at-a-time screening set
///   "table_b1_ann"  - ten best parameter sets with surrogate depths
///   "table_b1_fem"  - same sets with their simulated depths
/// Throws UnknownFixtureError otherwise.
SampleSet load_fixture(const std::string& name,
                       const std::filesystem::path& fixtures_dir);

/// Ten best parameter sets with both depth maps, as published.
struct TableB1Row {
  int run_id = 0;
  double B = 0.0, n = 0.0, C = 0.0;
  std::array<double, 3> ann_depths_mm{};
  std::array<double, 3> fem_depths_mm{};
};
std::vector<TableB1Row> load_table_b1(const std::filesystem::path& fixtures_dir);

/// Impact cases from fixtures/cases.csv.
std::vector<ImpactCase> load_cases(const std::filesystem::path& fixtures_dir);

/// Baseline material from fixtures/defaults.csv.
MaterialParams load_defaults(const std::filesystem::path& fixtures_dir);

/// One-at-a-time screening design: for each of the eight screened
/// parameters (A1, A2, B, n, C, eps_dot_ref, ISE, m — canonical sweep
/// order) the variants x1/4, x1/2, x2, x4 with everything else at the
/// baseline, then the all-baseline set last. 33 parameter sets.
std::vector<MaterialParams> gen_oat_design(const MaterialParams& defaults);

/// Full 5^3 factorial over (B, n, C) at levels x1/4, x1/2, x1, x2, x4 of
/// the baseline, in lexicographic (B, n, C) order. 125 parameter sets.
std::vector<MaterialParams> gen_factorial_design(const MaterialParams& defaults);

/// Uniform sampling of round(fraction * N) rows without replacement,
/// deterministic under the seed; surviving rows keep their original
/// relative order. Throws EmptyResultError when the rounded count is 0.
SampleSet subsample(const SampleSet& set, double fraction, std::uint64_t seed);

/// Canonical CSV serialization (see csv.hpp for the dialect). Numbers are
/// written with 6 significant digits; the header row is fixed and doubles
/// as the schema version.
std::string sample_set_to_csv(const SampleSet& set);
void save_sample_set(const SampleSet& set, const std::filesystem::path& path);
SampleSet load_sample_set(const std::filesystem::path& path,
                          Provenance provenance);
SampleSet sample_set_from_csv(const std::string& text, Provenance provenance);

/// Builds a SampleSet from a batch solver run; failed runs are skipped.
SampleSet sample_set_from_batch(std::span<const ImpactCase> cases,
                                std::span<const MaterialParams> mats,
                                std::span<const BatchRun> runs,
                                Provenance provenance);

}  // namespace clayid
