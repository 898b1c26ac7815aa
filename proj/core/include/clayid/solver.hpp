#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "clayid/constitutive.hpp"

namespace clayid {

/// One drop-test configuration: a rigid spherical-nosed indenter of the
/// given diameter and mass striking the clay at v0.
struct ImpactCase {
  int id = 0;                ///< case label (1|2|3)
  double diameter_mm = 0.0;  ///< indenter nose diameter [mm]
  double mass_g = 0.0;       ///< indenter mass [g]
  double v0 = 0.0;           ///< impact velocity [m/s]
  double ref_depth_mm = 0.0; ///< reference indentation depth [mm]
  double ref_tol_mm = 0.0;   ///< reference tolerance [mm]

  void validate() const;
};

/// The three standard drop-test cases:
///   1: 44.5 mm, 1000 g, 4.47 m/s, 16.0 mm
///   2: 44.5 mm, 1000 g, 6.26 m/s, 25.0 +- 3.0 mm
///   3: 63.5 mm, 1043 g, 6.26 m/s, 19.0 +- 2.0 mm
std::array<ImpactCase, 3> standard_cases();

/// Fixed-step explicit integration settings for the lumped indentation
/// model. strain_shape_k and inertia_coeff were calibrated once against
/// the baseline-parameter reference depths (see calibrate_resistance)
/// and are frozen here.
struct SolverConfig {
  double dt = 1e-6;                 ///< time step [s]
  // 30 ms covers the arrest of the weakest corner of the training
  // factorial (~25 ms) with margin.
  double t_max = 30e-3;             ///< simulation horizon [s]
  double strain_shape_k = 0.45;     ///< geometric strain factor [-]
  double inertia_coeff = 2.16;      ///< dynamic-pressure coefficient [-]
  double constraint_factor = 3.0;   ///< indentation constraint factor [-]
  bool eos_confinement = false;     ///< enable the EOS pressure term
  double eos_mu_coeff = 1e-5;       ///< effective compressibility per h/D [-]
  double stop_velocity = 0.0;       ///< cutoff velocity [m/s]

  void validate() const;
};

/// One recorded integration sample (SI units).
struct TimeSample {
  double t = 0.0;             ///< time [s]
  double displacement = 0.0;  ///< indenter displacement [m]
  double velocity = 0.0;      ///< indenter velocity [m/s]
  double force = 0.0;         ///< contact force [N]
};

struct SimResult {
  double depth_mm = 0.0;          ///< final indentation depth [mm]
  std::vector<TimeSample> series; ///< per-step trajectory
  bool eroded = false;            ///< erosion strain cap was reached
};

/// Integrates m*dv/dt = -F(h, v) from (h=0, v=v0) until the indenter
/// arrests. The resistance is
///   F = constraint_factor * sigma(eps(h), eps_dot(v)) * A(h)
///       + inertia_coeff * rho0 * v^2 * A(h)   [+ optional EOS term]
/// with A(h) the projected spherical-cap contact area, eps = k*h/D and
/// eps_dot = v/D floored at the reference rate. F is clamped >= 0, so the
/// arrest depth is the plastic (permanent) depth; rebound is ignored.
/// Throws NonTerminationError when t_max is reached with v > 10% of v0
/// and InstabilityError if the state becomes non-finite.
SimResult simulate(const ImpactCase& impact, const MaterialParams& mat,
                   const SolverConfig& cfg);

/// One row of a batch run; a failed run records its error instead of
/// aborting the remaining runs.
struct BatchRun {
  std::size_t mat_index = 0;
  std::size_t case_index = 0;
  SimResult result;
  std::string error;

  bool ok() const { return error.empty(); }
};

/// Cartesian product of cases x materials, evaluated (possibly in
/// parallel) and returned in deterministic (mat_index, case_index) order.
std::vector<BatchRun> simulate_batch(std::span<const ImpactCase> cases,
                                     std::span<const MaterialParams> mats,
                                     const SolverConfig& cfg, int jobs = 0);

/// Writes batch results as CSV with columns
/// run_id,case_id,<13 material parameter columns>,depth_mm,eroded.
void write_batch_csv(std::ostream& out, std::span<const ImpactCase> cases,
                     std::span<const MaterialParams> mats,
                     std::span<const BatchRun> runs);

/// Grid-scans (strain_shape_k, inertia_coeff) so that the baseline
/// material reproduces the given target depths; returns the pair with the
/// smallest worst-case relative depth error. Used once to freeze the
/// SolverConfig defaults.
struct CalibrationResult {
  double strain_shape_k = 0.0;
  double inertia_coeff = 0.0;
  std::array<double, 3> depths_mm{};
  double worst_rel_error = 0.0;
};
CalibrationResult calibrate_resistance(const MaterialParams& mat,
                                       std::span<const ImpactCase> cases,
                                       std::span<const double> target_depths_mm,
                                       const SolverConfig& base);

}  // namespace clayid
