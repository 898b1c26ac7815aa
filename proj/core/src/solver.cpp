#include "clayid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "clayid/csv.hpp"
#include "clayid/errors.hpp"
#include "clayid/parallel.hpp"
#include "clayid/units.hpp"

namespace clayid {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidParameterError(std::string("invalid parameter: ") + what);
}

/// Projected contact area of a spherical cap at depth h, saturating at
/// the full nose circle once h reaches the nose radius.
double contact_area(double h, double nose_radius) {
  if (h <= 0.0) return 0.0;
  if (h >= nose_radius) return std::numbers::pi * nose_radius * nose_radius;
  return std::numbers::pi * h * (2.0 * nose_radius - h);
}

}  // namespace

void ImpactCase::validate() const {
  require(diameter_mm > 0.0, "diameter must be > 0");
  require(mass_g > 0.0, "mass must be > 0");
  require(v0 >= 0.0, "v0 must be >= 0");
  require(ref_depth_mm > 0.0, "ref_depth must be > 0");
}

std::array<ImpactCase, 3> standard_cases() {
  return {ImpactCase{1, 44.5, 1000.0, 4.47, 16.0, 0.0},
          ImpactCase{2, 44.5, 1000.0, 6.26, 25.0, 3.0},
          ImpactCase{3, 63.5, 1043.0, 6.26, 19.0, 2.0}};
}

void SolverConfig::validate() const {
  require(dt > 0.0, "dt must be > 0");
  require(t_max >= 0.010, "t_max must be >= 0.010 s");
  require(stop_velocity >= 0.0, "stop_velocity must be >= 0");
  require(strain_shape_k > 0.0, "strain_shape_k must be > 0");
  require(inertia_coeff >= 0.0, "inertia_coeff must be >= 0");
  require(constraint_factor > 0.0, "constraint_factor must be > 0");
}

SimResult simulate(const ImpactCase& impact, const MaterialParams& mat,
                   const SolverConfig& cfg) {
  impact.validate();
  mat.validate();
  cfg.validate();

  const double diameter = impact.diameter_mm * units::mmToM;
  const double nose_radius = 0.5 * diameter;
  const double mass = impact.mass_g * units::gToKg;

  double h = 0.0;
  double v = impact.v0;
  double t = 0.0;

  SimResult result;
  result.series.push_back({0.0, 0.0, v, 0.0});

  while (v > cfg.stop_velocity && t < cfg.t_max) {
    const double area = contact_area(h, nose_radius);
    const double eps = cfg.strain_shape_k * h / diameter;
    const double eps_dot = std::max(v / diameter, mat.jc.eps_dot_ref);

    const Strength strength =
        effective_strength(mat, FlowState{eps, eps_dot, mat.jc.T0});
    if (strength.eroded) result.eroded = true;

    double force = cfg.constraint_factor * strength.post_erosion_kpa() *
                       units::kPaToPa * area +
                   cfg.inertia_coeff * mat.eos.rho0 * v * v * area;
    if (cfg.eos_confinement) {
      force += eos_pressure(mat.eos,
                            EosState{cfg.eos_mu_coeff * h / diameter, 0.0}) *
               area;
    }
    force = std::max(force, 0.0);

    // Semi-implicit Euler: the position update uses the new velocity,
    // which keeps the discrete work sum close to the kinetic energy drop.
    v -= force / mass * cfg.dt;
    h += v * cfg.dt;
    t += cfg.dt;

    if (!std::isfinite(h) || !std::isfinite(v)) {
      throw InstabilityError("non-finite state at t = " + std::to_string(t));
    }
    result.series.push_back({t, h, v, force});
  }

  if (t >= cfg.t_max && v > 0.1 * impact.v0) {
    throw NonTerminationError(
        "indenter still moving at t_max; material too weak or dt too coarse");
  }

  result.depth_mm = h * units::mToMm;
  return result;
}

std::vector<BatchRun> simulate_batch(std::span<const ImpactCase> cases,
                                     std::span<const MaterialParams> mats,
                                     const SolverConfig& cfg, int jobs) {
  if (cases.empty() || mats.empty()) {
    throw InvalidParameterError("simulate_batch: empty inputs");
  }

  std::vector<BatchRun> runs(cases.size() * mats.size());
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    const std::size_t mat_index = i / cases.size();
    const std::size_t case_index = i % cases.size();
    BatchRun& run = runs[i];
    run.mat_index = mat_index;
    run.case_index = case_index;
    try {
      run.result = simulate(cases[case_index], mats[mat_index], cfg);
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  });
  return runs;
}

void write_batch_csv(std::ostream& out, std::span<const ImpactCase> cases,
                     std::span<const MaterialParams> mats,
                     std::span<const BatchRun> runs) {
  csv::Table table;
  table.header = {"run_id", "case_id", "a1_gpa", "a2_gpa", "a3_gpa", "b0",
                  "b1", "rho0_kgm3", "a_kpa", "b_kpa", "n", "c", "m",
                  "eps_dot_ref_s", "ise", "depth_mm", "eroded"};
  for (const BatchRun& run : runs) {
    const MaterialParams& mat = mats[run.mat_index];
    std::vector<std::string> row;
    row.push_back(std::to_string(run.mat_index + 1));
    row.push_back(std::to_string(cases[run.case_index].id));
    for (double v : {mat.eos.A1, mat.eos.A2, mat.eos.A3, mat.eos.B0,
                     mat.eos.B1, mat.eos.rho0, mat.jc.A, mat.jc.B, mat.jc.n,
                     mat.jc.C, mat.jc.m, mat.jc.eps_dot_ref, mat.ise}) {
      row.push_back(csv::format_number(v));
    }
    row.push_back(run.ok() ? csv::format_number(run.result.depth_mm) : "nan");
    row.push_back(run.ok() && run.result.eroded ? "1" : "0");
    table.rows.push_back(std::move(row));
  }
  out << csv::to_string(table);
}

CalibrationResult calibrate_resistance(const MaterialParams& mat,
                                       std::span<const ImpactCase> cases,
                                       std::span<const double> target_depths_mm,
                                       const SolverConfig& base) {
  if (cases.size() != target_depths_mm.size() || cases.empty()) {
    throw InvalidParameterError("calibrate_resistance: size mismatch");
  }

  CalibrationResult best;
  best.worst_rel_error = std::numeric_limits<double>::infinity();

  auto evaluate = [&](double k, double ci) {
    SolverConfig cfg = base;
    cfg.strain_shape_k = k;
    cfg.inertia_coeff = ci;
    std::array<double, 3> depths{};
    double worst = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const double d = simulate(cases[i], mat, cfg).depth_mm;
      depths[i] = d;
      worst = std::max(worst,
                       std::abs(d - target_depths_mm[i]) / target_depths_mm[i]);
    }
    if (worst < best.worst_rel_error) {
      best = {k, ci, depths, worst};
    }
  };

  // Coarse scan, then one refinement around the best cell.
  for (double k = 0.1; k <= 3.0 + 1e-12; k += 0.05) {
    for (double ci = 0.0; ci <= 4.0 + 1e-12; ci += 0.1) {
      evaluate(k, ci);
    }
  }
  const double k0 = best.strain_shape_k;
  const double ci0 = best.inertia_coeff;
  for (double k = std::max(0.02, k0 - 0.06); k <= k0 + 0.06 + 1e-12; k += 0.01) {
    for (double ci = std::max(0.0, ci0 - 0.12); ci <= ci0 + 0.12 + 1e-12;
         ci += 0.02) {
      evaluate(k, ci);
    }
  }
  return best;
}

}  // namespace clayid
