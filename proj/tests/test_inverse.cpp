#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "clayid/errors.hpp"
#include "clayid/inverse.hpp"
#include "clayid/rng.hpp"

using namespace clayid;

namespace {

/// Hand-built affine surrogate: depth = b + w . (B, n, C).
MlpModel affine_model(std::array<double, 3> w, double b) {
  MlpModel m;
  m.layers = {{1, Activation::linear}};
  m.weights = {{w[0], w[1], w[2]}};
  m.biases = {{b}};
  return m;
}

/// Surrogate predicting one constant everywhere.
MlpModel constant_model(double value) { return affine_model({0, 0, 0}, value); }

GridSpec default_grid(int levels = 100) {
  GridSpec spec;
  spec.levels = levels;
  return spec;
}

}  // namespace

TEST_CASE("grid corners reproduce the bounds") {
  const CandidateGrid grid(default_grid());
  const auto lo = grid.params_at(0, 0, 0);
  CHECK(lo[0] == 59.5);
  CHECK(lo[1] == 0.0725);
  CHECK(lo[2] == 0.0625);
  const auto hi = grid.params_at(99, 99, 99);
  CHECK(hi[0] == doctest::Approx(952.0).epsilon(1e-12));
  CHECK(hi[1] == doctest::Approx(1.16).epsilon(1e-12));
  CHECK(hi[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the published optimum sits on a grid node") {
  const CandidateGrid grid(default_grid());
  const auto p = grid.params_at(3, 9, 44);
  CHECK(std::abs(p[0] - 86.545) <= 1e-2);
  CHECK(std::abs(p[1] - 0.171) <= 1e-3);
  CHECK(std::abs(p[2] - 0.4792) <= 1e-3);
}

TEST_CASE("grid points are exactly affine in their indices") {
  const CandidateGrid grid(default_grid(37));
  SplitMix64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const int i = static_cast<int>(rng.below(37));
    const int j = static_cast<int>(rng.below(37));
    const int k = static_cast<int>(rng.below(37));
    const auto p = grid.params_at(i, j, k);
    CHECK(p[0] == grid.spec().mins[0] + i * grid.step(0));
    CHECK(p[1] == grid.spec().mins[1] + j * grid.step(1));
    CHECK(p[2] == grid.spec().mins[2] + k * grid.step(2));
  }
  // Linear enumeration is lexicographic (i, j, k).
  const auto idx = grid.indices_of(2 * 37 * 37 + 5 * 37 + 11);
  CHECK(idx == std::array<int, 3>{2, 5, 11});
}

TEST_CASE("grid validation enforces bounds, levels and the cap") {
  GridSpec bad = default_grid();
  bad.mins[1] = bad.maxs[1];
  CHECK_THROWS_AS(bad.validate(), InvalidParameterError);

  bad = default_grid();
  bad.levels = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidParameterError);

  bad = default_grid(250);  // 15.6M > default cap of 8M
  CHECK_THROWS_AS(bad.validate(), GridOverflowError);
}

TEST_CASE("objective is the mean absolute depth mismatch") {
  const std::array<double, 3> refs = {16.0, 25.0, 19.0};
  CHECK(objective(16.0, 25.0, 19.0, refs) == 0.0);
  CHECK(objective(15.0, 24.0, 18.0, refs) == doctest::Approx(1.0).epsilon(1e-15));
  // Published row-1 simulated depths against the standard references.
  CHECK(objective(16.183, 24.463, 18.636, refs) ==
        doctest::Approx(0.3613333333333333).epsilon(1e-12));
}

TEST_CASE("objective is permutation-symmetric, non-negative, zero iff exact") {
  SplitMix64 rng(9);
  for (int t = 0; t < 100; ++t) {
    const double k1 = rng.uniform(5, 50), k2 = rng.uniform(5, 50),
                 k3 = rng.uniform(5, 50);
    const std::array<double, 3> refs = {rng.uniform(5, 50), rng.uniform(5, 50),
                                        rng.uniform(5, 50)};
    const double f = objective(k1, k2, k3, refs);
    CHECK(f >= 0.0);
    // Permuting (prediction, reference) pairs together leaves f unchanged.
    CHECK(objective(k2, k3, k1, {refs[1], refs[2], refs[0]}) ==
          doctest::Approx(f).epsilon(1e-15));
    CHECK(objective(k3, k1, k2, {refs[2], refs[0], refs[1]}) ==
          doctest::Approx(f).epsilon(1e-15));
  }
  CHECK(objective(7.0, 8.0, 9.0, {7.0, 8.0, 9.0}) == 0.0);
  CHECK(objective(7.0, 8.0, 9.0 + 1e-9, {7.0, 8.0, 9.0}) > 0.0);
}

TEST_CASE("a tiny sweep matches brute-force enumeration exactly") {
  GridSpec spec;
  spec.mins = {100.0, 0.1, 0.1};
  spec.maxs = {200.0, 0.5, 0.9};
  spec.levels = 2;
  const std::array<double, 3> refs = {16.0, 25.0, 19.0};

  const MlpModel m1 = affine_model({0.05, 2.0, 1.0}, 3.0);
  const MlpModel m2 = affine_model({0.10, -1.0, 2.0}, 10.0);
  const MlpModel m3 = affine_model({0.02, 5.0, -1.0}, 15.0);
  const std::array<const MlpModel*, 3> models = {&m1, &m2, &m3};

  const auto swept = sweep_all(models, spec, refs);
  REQUIRE(swept.size() == 8);

  std::size_t linear = 0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k, ++linear) {
        const double b = spec.mins[0] + i * (spec.maxs[0] - spec.mins[0]);
        const double n = spec.mins[1] + j * (spec.maxs[1] - spec.mins[1]);
        const double c = spec.mins[2] + k * (spec.maxs[2] - spec.mins[2]);
        const Candidate& got = swept[linear];
        CHECK(got.idx == std::array<int, 3>{i, j, k});
        CHECK(got.params[0] == b);
        CHECK(got.params[1] == n);
        CHECK(got.params[2] == c);
        for (int q = 0; q < 3; ++q) {
          const MlpModel& m = *models[q];
          const double expect =
              m.biases[0][0] + m.weights[0][0] * b + m.weights[0][1] * n +
              m.weights[0][2] * c;
          CHECK(got.predicted[q] == doctest::Approx(expect).epsilon(1e-15));
        }
        CHECK(got.score == doctest::Approx(objective(got.predicted[0],
                                                     got.predicted[1],
                                                     got.predicted[2], refs))
                               .epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("constant surrogates at the references score zero everywhere") {
  const MlpModel m1 = constant_model(16.0);
  const MlpModel m2 = constant_model(25.0);
  const MlpModel m3 = constant_model(19.0);
  const auto swept = sweep_all({&m1, &m2, &m3}, default_grid(5), {16, 25, 19});
  for (const Candidate& c : swept) CHECK(c.score == 0.0);
  CHECK(swept.size() == 125);
}

TEST_CASE("select filters per-case, intersects, and ranks by score") {
  // Surrogates linear in B only; references hit at distinct B values per
  // case so the intersection is a narrow B band.
  const MlpModel m1 = affine_model({0.02, 0.0, 0.0}, 10.0);  // 16 at B=300
  const MlpModel m2 = affine_model({0.03, 0.0, 0.0}, 16.0);  // 25 at B=300
  const MlpModel m3 = affine_model({0.025, 0.0, 0.0}, 11.5); // 19 at B=300
  const std::array<const MlpModel*, 3> models = {&m1, &m2, &m3};
  const std::array<double, 3> refs = {16.0, 25.0, 19.0};
  const GridSpec spec = default_grid(50);

  SelectConfig cfg;
  cfg.top_k = 5;
  const InverseResult result = run_inverse(models, spec, refs, cfg);

  REQUIRE_FALSE(result.common.empty());
  for (int k = 0; k < 3; ++k) {
    REQUIRE_FALSE(result.per_case[k].empty());
    for (const Candidate& c : result.per_case[k]) {
      CHECK(std::abs(c.predicted[k] - refs[k]) / refs[k] < cfg.per_case_cap);
    }
    for (std::size_t i = 1; i < result.per_case[k].size(); ++i) {
      const double e0 =
          std::abs(result.per_case[k][i - 1].predicted[k] - refs[k]) / refs[k];
      const double e1 =
          std::abs(result.per_case[k][i].predicted[k] - refs[k]) / refs[k];
      CHECK(e0 <= e1);
    }
  }
  for (const Candidate& c : result.common) {
    double mean = 0.0;
    for (int k = 0; k < 3; ++k) {
      mean += std::abs(c.predicted[k] - refs[k]) / refs[k];
    }
    CHECK(mean / 3.0 < cfg.common_cap);
  }
  REQUIRE(result.top_k.size() == 5);
  for (std::size_t i = 1; i < result.top_k.size(); ++i) {
    CHECK(result.top_k[i - 1].score <= result.top_k[i].score);
  }
  // The common members are score-sorted and top_k is its prefix.
  for (std::size_t i = 0; i < result.top_k.size(); ++i) {
    CHECK(result.top_k[i].idx == result.common[i].idx);
  }
}

TEST_CASE("selection is invariant to sweep chunking and parallelism") {
  const MlpModel m1 = affine_model({0.02, 1.0, 0.5}, 8.0);
  const MlpModel m2 = affine_model({0.03, 0.5, 1.5}, 12.0);
  const MlpModel m3 = affine_model({0.025, 1.5, -0.5}, 10.0);
  const std::array<const MlpModel*, 3> models = {&m1, &m2, &m3};
  const std::array<double, 3> refs = {16.0, 25.0, 19.0};
  const GridSpec spec = default_grid(17);
  SelectConfig cfg;
  cfg.per_case_cap = 0.5;
  cfg.common_cap = 0.5;

  SweepConfig serial;
  serial.chunk = 0;
  serial.jobs = 1;
  SweepConfig chunked;
  chunked.chunk = 7;
  chunked.jobs = 4;

  const InverseResult a = run_inverse(models, spec, refs, cfg, serial);
  const InverseResult b = run_inverse(models, spec, refs, cfg, chunked);
  const InverseResult c =
      select(sweep_all(models, spec, refs, chunked), spec, refs, cfg);

  REQUIRE(a.common.size() == b.common.size());
  REQUIRE(a.common.size() == c.common.size());
  for (std::size_t i = 0; i < a.common.size(); ++i) {
    CHECK(a.common[i].idx == b.common[i].idx);
    CHECK(a.common[i].score == b.common[i].score);
    CHECK(a.common[i].idx == c.common[i].idx);
  }
  for (int k = 0; k < 3; ++k) {
    REQUIRE(a.per_case[k].size() == b.per_case[k].size());
  }
}

TEST_CASE("degenerate caps behave as specified") {
  const MlpModel m1 = constant_model(16.0);
  const MlpModel m2 = constant_model(25.0);
  const MlpModel m3 = constant_model(19.0);
  const std::array<const MlpModel*, 3> models = {&m1, &m2, &m3};
  const std::array<double, 3> refs = {16.0, 25.0, 19.0};

  SUBCASE("cap saturation keeps the whole grid") {
    SelectConfig cfg;
    cfg.per_case_cap = 1.0;
    cfg.common_cap = 1.0;
    const InverseResult r = run_inverse(models, default_grid(5), refs, cfg);
    CHECK(r.common.size() == 125);
  }

  SUBCASE("an unreachable reference empties the selection") {
    const MlpModel far = constant_model(500.0);
    SelectConfig cfg;
    CHECK_THROWS_AS(
        run_inverse({&far, &far, &far}, default_grid(5), refs, cfg),
        EmptySelectionError);
  }

  SUBCASE("a zero cap is empty even for exact matches") {
    SelectConfig cfg;
    cfg.common_cap = 1e-300;
    cfg.per_case_cap = 1e-300;
    CHECK_THROWS_AS(run_inverse(models, default_grid(5), refs, cfg),
                    EmptySelectionError);
  }
}

TEST_CASE("validate re-runs the solver and picks the best candidate") {
  const auto cases = standard_cases();
  const MaterialParams base = MaterialParams::rp_clay_defaults();
  const SolverConfig solver;

  // Build two candidates: the baseline triple and a harder variant.
  InverseResult result;
  result.refs = {14.0, 19.2, 16.5};  // near the baseline's own depths
  Candidate good;
  good.idx = {0, 0, 0};
  good.params = {base.jc.B, base.jc.n, base.jc.C};
  for (int k = 0; k < 3; ++k) {
    MaterialParams mat = base;
    good.predicted[k] = simulate(cases[k], mat, solver).depth_mm;
  }
  Candidate hard;
  hard.idx = {1, 0, 0};
  hard.params = {base.jc.B * 3.0, base.jc.n, base.jc.C};
  hard.predicted = {9.0, 12.0, 10.0};
  result.top_k = {good, hard};

  const ValidationReport report = validate(result, cases, base, solver);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.best_index == 0);

  // The candidate whose surrogate equals the solver has zero abs error.
  for (int k = 0; k < 3; ++k) {
    CHECK(report.rows[0].ann_abs_err_mm[k] == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(report.rows[1].mean_rel_err > report.rows[0].mean_rel_err);

  // The baseline row equals the good candidate here by construction.
  CHECK(report.baseline.solver_depths_mm[0] ==
        doctest::Approx(report.rows[0].solver_depths_mm[0]));
}

TEST_CASE("the identity ablation reproduces the main pipeline accuracy") {
  // Tiny synthetic main run: constant surrogate targets produced by
  // affine models trained on nothing; keep it cheap but end-to-end.
  const auto cases = standard_cases();
  const MaterialParams base = MaterialParams::rp_clay_defaults();
  const SolverConfig solver;

  // Factorial data from the real solver, trimmed grid for speed.
  const auto mats = gen_factorial_design(base);
  const auto runs = simulate_batch(cases, mats, solver, 0);
  const SampleSet data =
      sample_set_from_batch(cases, mats, runs, Provenance::generated_factorial);

  const std::array<double, 3> refs = {
      simulate(cases[0], base, solver).depth_mm,
      simulate(cases[1], base, solver).depth_mm,
      simulate(cases[2], base, solver).depth_mm};

  AblationConfig cfg;
  cfg.fractions = {1.0};
  cfg.repeats = 1;
  cfg.seed = 31;
  cfg.train.epochs = 400;
  cfg.train.seed = 31;
  const std::vector<LayerSpec> arch = {{16, Activation::relu},
                                       {1, Activation::linear}};
  cfg.archs = {arch, arch, arch};
  cfg.grid.levels = 12;
  cfg.select_cfg.per_case_cap = 0.10;
  cfg.select_cfg.common_cap = 0.11;
  cfg.select_cfg.top_k = 5;

  const AblationReport report = ablation(data, cases, base, solver, refs, cfg);
  REQUIRE(report.runs.size() == 1);
  REQUIRE(report.runs[0].ok());
  CHECK(report.mean_accuracy.at(1.0) == report.runs[0].accuracy);
  CHECK(report.runs[0].accuracy > 0.5);

  // Identity subsample + the same seeds is exactly the main pipeline:
  // rerun the pieces by hand and compare.
  std::array<MlpModel, 3> models;
  for (int c = 0; c < 3; ++c) {
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(report.runs[0].seed, static_cast<std::uint64_t>(c));
    models[c] = train(case_data(subsample(data, 1.0, report.runs[0].seed), c + 1),
                      cfg.archs[c], tc)
                    .model;
  }
  const InverseResult inverse =
      run_inverse({&models[0], &models[1], &models[2]}, cfg.grid, refs,
                  cfg.select_cfg, cfg.sweep_cfg);
  const ValidationReport validation =
      validate(inverse, cases, base, solver, 0);
  double err_sum = 0.0;
  std::size_t count = 0;
  for (const ValidationRow& row : validation.rows) {
    for (int k = 0; k < 3; ++k) {
      err_sum += row.ann_abs_err_mm[k] / row.solver_depths_mm[k];
      ++count;
    }
  }
  CHECK(report.runs[0].accuracy ==
        doctest::Approx(1.0 - err_sum / count).epsilon(1e-12));
}

TEST_CASE("ablation records failed repeats without aborting") {
  const auto cases = standard_cases();
  const MaterialParams base = MaterialParams::rp_clay_defaults();

  SampleSet tiny;
  for (int i = 0; i < 6; ++i) {
    SampleRow row;
    row.run_id = i + 1;
    row.params = base;
    row.params.jc.B = 100.0 + i * 50.0;
    for (int c : {1, 2, 3}) row.depths[c] = 10.0 + i;
    tiny.rows.push_back(row);
  }

  AblationConfig cfg;
  cfg.fractions = {0.5};  // 3 rows: below the training minimum of 5
  cfg.repeats = 2;
  cfg.seed = 8;
  cfg.train.epochs = 10;
  const std::vector<LayerSpec> arch = {{4, Activation::relu},
                                       {1, Activation::linear}};
  cfg.archs = {arch, arch, arch};
  cfg.grid.levels = 3;

  const AblationReport report =
      ablation(tiny, cases, base, SolverConfig{}, {16, 25, 19}, cfg);
  REQUIRE(report.runs.size() == 2);
  for (const AblationRepeat& run : report.runs) {
    CHECK_FALSE(run.ok());
    CHECK_FALSE(run.error.empty());
  }
  CHECK(report.mean_accuracy.count(0.5) == 0);
}
