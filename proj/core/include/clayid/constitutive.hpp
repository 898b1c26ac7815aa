#pragma once

namespace clayid {

/// Johnson-Cook flow stress parameters. Stresses are stored in kPa, the
/// units of the source tables for this clay.
struct JcParams {
  double A = 0.01;            ///< initial yield stress [kPa]
  double B = 238.0;           ///< hardening constant [kPa]
  double n = 0.29;            ///< hardening exponent [-]
  double C = 0.25;            ///< strain-rate constant [-]
  double m = 0.502;           ///< thermal softening exponent [-]
  double eps_dot_ref = 0.118; ///< reference strain rate [1/s]
  // The sources never state the clay's reference or melting temperature;
  // these defaults are inert because the whole pipeline runs isothermally
  // at T = T0.
  double T0 = 296.15;         ///< reference temperature [K]
  double Tm = 329.15;         ///< melting temperature [K]

  void validate() const;
};

/// Polynomial equation-of-state parameters (stiffness in GPa).
struct EosParams {
  double A1 = 2.804;    ///< linear stiffness [GPa]
  double A2 = 40.7;     ///< quadratic stiffness [GPa]
  double A3 = -36.0;    ///< cubic stiffness [GPa]
  double B0 = 1.7;      ///< energy coupling [-]
  double B1 = 1.7;      ///< energy coupling, compression only [-]
  // Zero-pressure density is not published for this clay; 1600 kg/m^3 is
  // a typical literature value and a documented deviation.
  double rho0 = 1600.0; ///< zero-pressure density [kg/m^3]

  void validate() const;
};

/// Full material parameter set: deviatoric strength (J-C), hydrostatic
/// response (EOS), and the erosion cap.
struct MaterialParams {
  JcParams jc;
  EosParams eos;
  double ise = 5.0;  ///< instantaneous erosion strain [-]

  void validate() const;

  /// Baseline parameter set for Roma Plastilina No. 1.
  static MaterialParams rp_clay_defaults() { return MaterialParams{}; }
};

/// Deviatoric loading state of a material point.
struct FlowState {
  double eps_p = 0.0;    ///< effective plastic strain [-]
  double eps_dot = 0.0;  ///< effective plastic strain rate [1/s]
  double T = 296.15;     ///< current temperature [K]
};

/// Hydrostatic state: compressibility mu = rho/rho0 - 1 and specific
/// internal energy.
struct EosState {
  double mu = 0.0;  ///< compressibility [-], > -1
  double e = 0.0;   ///< internal energy per unit mass [J/kg]
};

/// Johnson-Cook flow stress in kPa:
///   sigma = (A + B*eps_p^n) * (1 + C*ln(eps_dot/eps_dot_ref))
///           * [1 - ((T-T0)/(Tm-T0))^m]
/// The rate bracket is clamped to >= 1 for sub-reference strain rates
/// (the log term would otherwise blow up at quasi-static rates), and the
/// thermal bracket is 1 for T <= T0.
/// Throws InvalidParameterError on violated invariants and DomainError
/// for T above the melting point.
double jc_flow_stress(const JcParams& p, const FlowState& s);

/// Polynomial EOS pressure in Pa:
///   mu > 0:  A1*mu + A2*mu^2 + A3*mu^3 + (B0 + B1*mu)*rho0*e
///   mu <= 0: A1*mu + A2*mu^2 + B0*rho0*e
/// The tension branch keeps the published +A2*mu^2 term verbatim even
/// though its sign under tension is physically unusual.
double eos_pressure(const EosParams& p, const EosState& s);

/// Flow stress with the erosion cap applied.
struct Strength {
  double stress_kpa = 0.0;  ///< J-C stress at eps_p clamped to ise [kPa]
  bool eroded = false;      ///< eps_p reached the erosion strain

  /// Strength contribution once erosion removes the material point.
  double post_erosion_kpa() const { return eroded ? 0.0 : stress_kpa; }
};

/// Evaluates jc_flow_stress with eps_p clamped to min(eps_p, ise) and
/// flags the point eroded when eps_p >= ise.
Strength effective_strength(const MaterialParams& mat, const FlowState& s);

}  // namespace clayid
