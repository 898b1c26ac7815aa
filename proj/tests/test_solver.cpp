#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "clayid/dataset.hpp"
#include "clayid/errors.hpp"
#include "clayid/rng.hpp"
#include "clayid/solver.hpp"

using namespace clayid;

namespace {

/// Independent energy oracle: trapezoidal integral of the recorded
/// force over displacement.
double plastic_work(const SimResult& result) {
  double work = 0.0;
  for (std::size_t i = 1; i < result.series.size(); ++i) {
    const TimeSample& a = result.series[i - 1];
    const TimeSample& b = result.series[i];
    work += 0.5 * (a.force + b.force) * (b.displacement - a.displacement);
  }
  return work;
}

double kinetic_energy(const ImpactCase& c) {
  const double m = c.mass_g * 1e-3;
  return 0.5 * m * c.v0 * c.v0;
}

}  // namespace

TEST_CASE("zero impact velocity gives zero depth") {
  ImpactCase c = standard_cases()[0];
  c.v0 = 0.0;
  const SimResult r = simulate(c, MaterialParams::rp_clay_defaults(), SolverConfig{});
  CHECK(r.depth_mm == 0.0);
  CHECK_FALSE(r.eroded);
}

TEST_CASE("baseline depths stay within 20% of the reference simulation depths") {
  // Calibration gate for the frozen strain_shape_k / inertia_coeff.
  const std::array<double, 3> targets = {13.600, 19.700, 16.033};
  const auto cases = standard_cases();
  for (int i = 0; i < 3; ++i) {
    const double depth =
        simulate(cases[i], MaterialParams::rp_clay_defaults(), SolverConfig{}).depth_mm;
    CHECK(std::abs(depth - targets[i]) / targets[i] < 0.20);
  }
}

TEST_CASE("case 1 golden depth with energy-balance cross-check") {
  const SimResult r = simulate(standard_cases()[0],
                               MaterialParams::rp_clay_defaults(), SolverConfig{});
  // Frozen from the first calibrated run of this solver.
  CHECK(r.depth_mm == doctest::Approx(13.960725).epsilon(1e-5));
  CHECK(r.depth_mm > 0.0);
  CHECK(std::isfinite(r.depth_mm));

  const double work = plastic_work(r);
  const double ke = kinetic_energy(standard_cases()[0]);
  CHECK(std::abs(work - ke) / ke < 0.01);
}

TEST_CASE("energy balance holds within 1% for all standard cases") {
  for (const ImpactCase& c : standard_cases()) {
    const SimResult r = simulate(c, MaterialParams::rp_clay_defaults(), SolverConfig{});
    CHECK(std::abs(plastic_work(r) - kinetic_energy(c)) / kinetic_energy(c) < 0.01);
  }
}

TEST_CASE("halving dt changes depth by less than 0.5%") {
  const ImpactCase c = standard_cases()[1];
  SolverConfig cfg;
  const double d1 = simulate(c, MaterialParams::rp_clay_defaults(), cfg).depth_mm;
  cfg.dt /= 2.0;
  const double d2 = simulate(c, MaterialParams::rp_clay_defaults(), cfg).depth_mm;
  CHECK(std::abs(d1 - d2) / d1 < 0.005);
}

TEST_CASE("doubling B strictly reduces depth") {
  const ImpactCase c = standard_cases()[0];
  MaterialParams mat = MaterialParams::rp_clay_defaults();
  const double base = simulate(c, mat, SolverConfig{}).depth_mm;
  mat.jc.B *= 2.0;
  CHECK(simulate(c, mat, SolverConfig{}).depth_mm < base);
}

TEST_CASE("depth is monotone in B, C, v0 and mass") {
  SplitMix64 rng(77);
  SolverConfig cfg;
  cfg.t_max = 60e-3;
  for (int i = 0; i < 12; ++i) {
    MaterialParams mat = MaterialParams::rp_clay_defaults();
    mat.jc.B = rng.uniform(59.5, 952.0);
    mat.jc.n = rng.uniform(0.0725, 1.16);
    mat.jc.C = rng.uniform(0.0625, 1.0);
    ImpactCase c = standard_cases()[i % 3];
    c.v0 = rng.uniform(2.0, 7.0);

    const double base = simulate(c, mat, cfg).depth_mm;

    MaterialParams harder = mat;
    harder.jc.B *= rng.uniform(1.2, 2.0);
    CHECK(simulate(c, harder, cfg).depth_mm <= base);

    MaterialParams rate_harder = mat;
    rate_harder.jc.C = std::min(1.0, mat.jc.C * rng.uniform(1.2, 2.0));
    CHECK(simulate(c, rate_harder, cfg).depth_mm <= base);

    ImpactCase faster = c;
    faster.v0 *= rng.uniform(1.1, 1.5);
    CHECK(simulate(faster, mat, cfg).depth_mm >= base);

    ImpactCase heavier = c;
    heavier.mass_g *= rng.uniform(1.1, 1.5);
    CHECK(simulate(heavier, mat, cfg).depth_mm >= base);
  }
}

TEST_CASE("displacement series is monotone until arrest and deterministic") {
  const SimResult a = simulate(standard_cases()[2],
                               MaterialParams::rp_clay_defaults(), SolverConfig{});
  const SimResult b = simulate(standard_cases()[2],
                               MaterialParams::rp_clay_defaults(), SolverConfig{});
  REQUIRE(a.series.size() == b.series.size());
  CHECK(std::memcmp(&a.depth_mm, &b.depth_mm, sizeof(double)) == 0);
  for (std::size_t i = 1; i < a.series.size(); ++i) {
    if (a.series[i].velocity <= 0.0) break;
    CHECK(a.series[i].displacement >= a.series[i - 1].displacement);
    CHECK(a.series[i].displacement == b.series[i].displacement);
  }
}

TEST_CASE("enabling the EOS confinement term perturbs depth by under 3%") {
  const ImpactCase c = standard_cases()[1];
  SolverConfig cfg;
  const double off = simulate(c, MaterialParams::rp_clay_defaults(), cfg).depth_mm;
  cfg.eos_confinement = true;
  const double on = simulate(c, MaterialParams::rp_clay_defaults(), cfg).depth_mm;
  CHECK(std::abs(on - off) / off < 0.03);
  CHECK(on <= off);  // confinement only adds resistance
}

TEST_CASE("erosion flag fires when the strain cap is reached") {
  MaterialParams mat = MaterialParams::rp_clay_defaults();
  mat.ise = 0.05;  // cap reached almost immediately
  const SimResult r = simulate(standard_cases()[1], mat, SolverConfig{});
  CHECK(r.eroded);
}

TEST_CASE("unphysically weak material raises a non-termination error") {
  MaterialParams mat = MaterialParams::rp_clay_defaults();
  mat.jc.A = 0.0;
  mat.jc.B = 1e-6;
  SolverConfig cfg;
  cfg.t_max = 0.010;
  cfg.inertia_coeff = 0.0;
  CHECK_THROWS_AS(simulate(standard_cases()[0], mat, cfg), NonTerminationError);
}

TEST_CASE("non-finite state raises an instability error") {
  ImpactCase c = standard_cases()[0];
  c.v0 = 1e160;  // v^2 overflows in the inertial term
  CHECK_THROWS_AS(simulate(c, MaterialParams::rp_clay_defaults(), SolverConfig{}),
                  InstabilityError);
}

TEST_CASE("config invariants are enforced") {
  SolverConfig cfg;
  cfg.t_max = 0.005;
  CHECK_THROWS_AS(simulate(standard_cases()[0], MaterialParams::rp_clay_defaults(), cfg),
                  InvalidParameterError);
  cfg = SolverConfig{};
  cfg.dt = 0.0;
  CHECK_THROWS_AS(simulate(standard_cases()[0], MaterialParams::rp_clay_defaults(), cfg),
                  InvalidParameterError);
}

TEST_CASE("simulate_batch evaluates the cartesian product deterministically") {
  const auto cases = standard_cases();
  std::vector<MaterialParams> mats(2, MaterialParams::rp_clay_defaults());
  mats[1].jc.B *= 2.0;

  SUBCASE("degenerate 1 x 1 batch equals simulate") {
    const auto runs = simulate_batch({cases.data(), 1}, {mats.data(), 1},
                                     SolverConfig{}, 2);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].result.depth_mm ==
          simulate(cases[0], mats[0], SolverConfig{}).depth_mm);
  }

  SUBCASE("3 cases x 2 materials gives 6 rows in declared order") {
    const auto runs = simulate_batch(cases, mats, SolverConfig{}, 2);
    REQUIRE(runs.size() == 6);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      CHECK(runs[i].mat_index == i / 3);
      CHECK(runs[i].case_index == i % 3);
      CHECK(runs[i].ok());
    }
  }

  SUBCASE("empty inputs are rejected") {
    CHECK_THROWS_AS(simulate_batch({cases.data(), 0}, mats, SolverConfig{}),
                    InvalidParameterError);
  }
}

TEST_CASE("the full screening design smokes through the solver") {
  const auto cases = standard_cases();
  const auto mats = gen_oat_design(MaterialParams::rp_clay_defaults());
  const auto runs = simulate_batch(cases, mats, SolverConfig{}, 0);
  REQUIRE(runs.size() == 99);
  for (const BatchRun& run : runs) {
    REQUIRE(run.ok());
    CHECK(std::isfinite(run.result.depth_mm));
    CHECK(run.result.depth_mm > 0.0);
  }

  std::ostringstream csv_out;
  write_batch_csv(csv_out, cases, mats, runs);
  const std::string text = csv_out.str();
  CHECK(text.starts_with("run_id,case_id,a1_gpa,"));
  CHECK(std::count(text.begin(), text.end(), '\n') == 100);  // header + 99 rows
}

TEST_CASE("a batch aggregates per-run failures without aborting") {
  auto cases = standard_cases();
  cases[1].v0 = 1e160;  // this case alone becomes unstable
  const std::vector<MaterialParams> mats(1, MaterialParams::rp_clay_defaults());
  const auto runs = simulate_batch(cases, mats, SolverConfig{});
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].ok());
  CHECK_FALSE(runs[1].ok());
  CHECK(runs[2].ok());
}
