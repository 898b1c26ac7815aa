#include "clayid/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clayid/errors.hpp"
#include "clayid/units.hpp"

namespace clayid {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidParameterError(std::string("invalid parameter: ") + what);
}

void validate_flow(const FlowState& s) {
  require(s.eps_p >= 0.0, "eps_p must be >= 0");
  require(s.eps_dot >= 0.0, "eps_dot must be >= 0");
}

}  // namespace

void JcParams::validate() const {
  require(A >= 0.0, "A must be >= 0");
  require(B > 0.0, "B must be > 0");
  require(n > 0.0, "n must be > 0");
  require(C >= 0.0, "C must be >= 0");
  require(m > 0.0, "m must be > 0");
  require(eps_dot_ref > 0.0, "eps_dot_ref must be > 0");
  require(Tm > T0, "Tm must exceed T0");
}

void EosParams::validate() const {
  require(A1 > 0.0, "A1 must be > 0");
  require(rho0 > 0.0, "rho0 must be > 0");
}

void MaterialParams::validate() const {
  jc.validate();
  eos.validate();
  require(ise > 0.0, "ise must be > 0");
}

double jc_flow_stress(const JcParams& p, const FlowState& s) {
  p.validate();
  validate_flow(s);
  if (s.T > p.Tm) throw DomainError("temperature above melting point");

  const double hardening = p.A + p.B * std::pow(s.eps_p, p.n);

  // Rate bracket floored at 1: the sources never exercise sub-reference
  // rates, and ln(eps_dot/eps_dot_ref) < 0 would drive the stress negative.
  const double rate_ratio = std::max(s.eps_dot, p.eps_dot_ref) / p.eps_dot_ref;
  const double rate = 1.0 + p.C * std::log(rate_ratio);

  const double homologous = (s.T - p.T0) / (p.Tm - p.T0);
  const double thermal = homologous <= 0.0 ? 1.0 : 1.0 - std::pow(homologous, p.m);

  return hardening * rate * thermal;
}

double eos_pressure(const EosParams& p, const EosState& s) {
  p.validate();
  if (!(s.mu > -1.0)) throw InvalidParameterError("mu must be > -1");

  const double a1 = p.A1 * units::GPaToPa;
  const double a2 = p.A2 * units::GPaToPa;
  const double a3 = p.A3 * units::GPaToPa;
  const double mu = s.mu;

  if (mu > 0.0) {
    return a1 * mu + a2 * mu * mu + a3 * mu * mu * mu +
           (p.B0 + p.B1 * mu) * p.rho0 * s.e;
  }
  return a1 * mu + a2 * mu * mu + p.B0 * p.rho0 * s.e;
}

Strength effective_strength(const MaterialParams& mat, const FlowState& s) {
  mat.validate();
  validate_flow(s);

  FlowState capped = s;
  capped.eps_p = std::min(s.eps_p, mat.ise);

  Strength out;
  out.stress_kpa = jc_flow_stress(mat.jc, capped);
  out.eroded = s.eps_p >= mat.ise;
  return out;
}

}  // namespace clayid
