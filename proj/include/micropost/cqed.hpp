#ifndef MICROPOST_CQED_HPP
#define MICROPOST_CQED_HPP

#include <cmath>
#include <limits>
#include <string>

#include "micropost/constants.hpp"
#include "micropost/errors.hpp"

namespace micropost {

// Quantum-dot exciton coupled to the cavity mode.  All rates in 1/s.
struct EmitterSpec {
  double gamma0 = 0.0;             // free-space spontaneous emission rate
  double gamma_h = 0.0;            // homogeneous linewidth (Hz)
  double intensity_fraction = 1.0; // eps|E|^2 at the dot over the field maximum
  double n_h = 1.0;                // host refractive index
  double occupation = 1.0;         // mean exciton occupation under pumping
};

inline void require_valid(const EmitterSpec& e) {
  if (!(e.gamma0 > 0.0)) throw ValidationError("emitter: gamma0 must be positive");
  if (!(e.gamma_h >= 0.0)) throw ValidationError("emitter: gamma_h must be nonnegative");
  if (!(e.intensity_fraction > 0.0 && e.intensity_fraction <= 1.0))
    throw ValidationError("emitter: intensity_fraction must be in (0, 1]");
  if (!(e.n_h >= 1.0)) throw ValidationError("emitter: n_h must be >= 1");
  if (!(e.occupation >= 0.0 && e.occupation <= 1.0))
    throw ValidationError("emitter: occupation must be in [0, 1]");
}

// Free-space spontaneous emission rate of a dipole mu (C m) at angular
// frequency omega.
inline double free_space_rate(double mu, double omega) {
  return omega * omega * omega * mu * mu / (3.0 * pi * eps0 * hbar * c0 * c0 * c0);
}

inline double dipole_from_rate(double gamma0, double omega) {
  return std::sqrt(3.0 * pi * eps0 * hbar * c0 * c0 * c0 * gamma0 / (omega * omega * omega));
}

// Characteristic volume in the resonant coupling-rate form
// g0 = (gamma0/2) sqrt(V0/V).
inline double mode_volume_scale(double gamma0, double lambda, double n_h) {
  return 3.0 * c0 * lambda * lambda / (2.0 * pi * gamma0 * n_h * n_h);
}

inline double vacuum_rabi(double gamma0, double v, double lambda, double n_h) {
  if (!(v > 0.0)) throw ValidationError("vacuum_rabi: mode volume must be positive");
  return 0.5 * gamma0 * std::sqrt(mode_volume_scale(gamma0, lambda, n_h) / v);
}

// Same coupling rate directly from the dipole matrix element:
// g0 = (mu/hbar) sqrt(hbar omega / (2 eps0 n^2 V)).
inline double vacuum_rabi_from_dipole(double mu, double omega, double v, double n_h) {
  if (!(v > 0.0)) throw ValidationError("vacuum_rabi: mode volume must be positive");
  return mu / hbar * std::sqrt(hbar * omega / (2.0 * eps0 * n_h * n_h * v));
}

// Cavity field decay rate kappa = omega/2Q = pi c/(lambda Q).
inline double cavity_decay(double lambda, double q) {
  if (!(q > 0.0)) throw ValidationError("cavity_decay: Q must be positive");
  return pi * c0 / (lambda * q);
}

inline double photon_lifetime(double lambda, double q) {
  return q * lambda / (2.0 * pi * c0);
}

struct PurcellFactors {
  double f0 = 0.0;  // enhancement over free space, emitter at the field maximum
  double f = 0.0;   // enhancement over the bulk host, f = f0/n_h
};

inline PurcellFactors purcell(double q, double lambda, double v, double n_h) {
  if (!(v > 0.0)) throw ValidationError("purcell: mode volume must be positive");
  PurcellFactors p;
  p.f0 = 3.0 * q * lambda * lambda * lambda /
         (4.0 * pi * pi * v * n_h * n_h);
  p.f = p.f0 / n_h;
  return p;
}

// Lorentzian-overlap reduction of the Purcell factor for a broadened emitter.
inline double purcell_linewidth(double f_zero, double df_cavity, double df_emitter) {
  if (!(df_cavity > 0.0)) throw ValidationError("purcell_linewidth: cavity linewidth must be positive");
  if (df_emitter < 0.0) throw ValidationError("purcell_linewidth: emitter linewidth must be nonnegative");
  return f_zero * df_cavity / (df_cavity + df_emitter);
}

inline double beta_factor(double f) {
  if (f < 0.0) throw ValidationError("beta_factor: Purcell factor must be nonnegative");
  return f / (1.0 + f);
}

enum class Regime { strong, weak };

struct RegimeResult {
  Regime regime = Regime::weak;
  bool boundary = false;  // a tie g == kappa or g == gamma; classified weak
};

// Strong coupling needs the coupling rate to beat both decay channels.
inline RegimeResult classify_regime(double g, double kappa, double gamma) {
  if (!(g > 0.0 && kappa > 0.0 && gamma > 0.0))
    throw ValidationError("classify_regime: rates must be positive");
  RegimeResult r;
  if (g > kappa && g > gamma)
    r.regime = Regime::strong;
  else
    r.boundary = (g == kappa || g == gamma);
  return r;
}

struct MinQResult {
  bool attainable = false;
  double q_min = 0.0;       // meaningful only when attainable
  double g0 = 0.0;
  double emitter_gate = 0.0; // pi * gamma_h, the Q-independent requirement
};

// Smallest Q for which kappa drops below g0.  If the emitter linewidth alone
// (pi gamma_h >= g0) already forbids strong coupling, no Q helps.
inline MinQResult min_q_for_strong_coupling(double lambda, double v, double gamma0,
                                            double gamma_h, double n_h) {
  MinQResult r;
  r.g0 = vacuum_rabi(gamma0, v, lambda, n_h);
  r.emitter_gate = pi * gamma_h;
  if (r.emitter_gate >= r.g0) return r;
  r.attainable = true;
  r.q_min = pi * c0 / (lambda * r.g0);
  return r;
}

struct LasingResult {
  double n_sp = 0.0;     // mean spontaneously emitted photon number in the mode
  double tau_ph = 0.0;   // photon lifetime Q/omega
  double tau_sp = 0.0;   // cavity-enhanced spontaneous emission lifetime
  bool lasing = false;   // n_sp >= 1
};

// Single-emitter lasing threshold: with the cavity-enhanced emission rate
// F * (bulk rate) feeding the mode, n_sp = N_A (gamma0 n_h) (Q/omega) F^2/(1+F).
inline LasingResult lasing_threshold(double q, double lambda, double gamma0, double n_h,
                                     double f, double occupation) {
  if (f < 0.0) throw ValidationError("lasing_threshold: Purcell factor must be nonnegative");
  LasingResult r;
  const double omega = 2.0 * pi * c0 / lambda;
  r.tau_ph = q / omega;
  r.tau_sp = f > 0.0 ? 1.0 / (f * gamma0 * n_h) : std::numeric_limits<double>::infinity();
  r.n_sp = occupation * (gamma0 * n_h) * (q / omega) * f * f / (1.0 + f);
  r.lasing = r.n_sp >= 1.0;
  return r;
}

struct CqedReport {
  double lambda = 0.0;
  double q = 0.0;
  double v = 0.0;          // m^3
  double v_rel = 0.0;      // in units of (lambda/n_h)^3
  double g0 = 0.0;
  double g = 0.0;          // after emitter placement
  double kappa = 0.0;
  double gamma_gate = 0.0; // pi * gamma_h
  double f0 = 0.0;
  double f = 0.0;
  double f_eff = 0.0;      // linewidth-reduced Purcell factor
  double beta = 0.0;
  double tau_ph = 0.0;
  double tau_sp = 0.0;
  double n_sp = 0.0;
  Regime regime = Regime::weak;
  bool boundary = false;
  bool lasing = false;
  MinQResult min_q;
};

inline CqedReport cqed_report(double q, double v, double lambda, const EmitterSpec& e) {
  require_valid(e);
  if (!(q > 0.0) || !(v > 0.0) || !(lambda > 0.0))
    throw ValidationError("cqed_report: Q, V and lambda must be positive");
  CqedReport r;
  r.lambda = lambda;
  r.q = q;
  r.v = v;
  const double lv = lambda / e.n_h;
  r.v_rel = v / (lv * lv * lv);
  r.g0 = vacuum_rabi(e.gamma0, v, lambda, e.n_h);
  r.g = r.g0 * std::sqrt(e.intensity_fraction);
  r.kappa = cavity_decay(lambda, q);
  r.gamma_gate = pi * e.gamma_h;
  const PurcellFactors pf = purcell(q, lambda, v, e.n_h);
  r.f0 = pf.f0;
  r.f = pf.f;
  const double f_cav = c0 / lambda / q;
  r.f_eff = purcell_linewidth(r.f, f_cav, e.gamma_h);
  r.beta = beta_factor(r.f);
  const RegimeResult rr =
      classify_regime(r.g, r.kappa, r.gamma_gate > 0.0 ? r.gamma_gate : r.kappa);
  r.regime = rr.regime;
  r.boundary = rr.boundary;
  const LasingResult las = lasing_threshold(q, lambda, e.gamma0, e.n_h, r.f, e.occupation);
  r.tau_ph = las.tau_ph;
  r.tau_sp = las.tau_sp;
  r.n_sp = las.n_sp;
  r.lasing = las.lasing;
  r.min_q = min_q_for_strong_coupling(lambda, v, e.gamma0, e.gamma_h, e.n_h);
  return r;
}

inline const char* regime_name(Regime r) {
  return r == Regime::strong ? "strong" : "weak";
}

}  // namespace micropost

#endif
