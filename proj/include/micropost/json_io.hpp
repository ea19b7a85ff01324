#ifndef MICROPOST_JSON_IO_HPP
#define MICROPOST_JSON_IO_HPP

#include <cstdio>
#include <string>

#include "json.hpp"
#include "micropost/errors.hpp"
#include "micropost/geometry.hpp"
#include "micropost/pipeline.hpp"

namespace micropost {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Config lengths are quoted in nm, like every number in the source material.
// A value that converts to more than a millimetre was almost certainly
// written in metres already.
inline double nm_to_m(double nm, const std::string& key) {
  const double m = nm * 1e-9;
  if (m > 1e-3)
    throw ValidationError("config: " + key + " = " + std::to_string(nm) +
                          " nm is over a millimetre; value looks like metres");
  return m;
}

inline void reject_unknown_keys(const json& j, const char* const* allowed,
                                std::size_t n, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (std::size_t k = 0; k < n && !ok; ++k) ok = it.key() == allowed[k];
    if (!ok)
      throw ValidationError("config: unknown key \"" + it.key() + "\" in " +
                            where);
  }
}

namespace detail {

inline double need_num(const json& j, const std::string& key,
                       const std::string& where) {
  if (!j.contains(key))
    throw ValidationError("config: missing key \"" + key + "\" in " + where);
  if (!j.at(key).is_number())
    throw ValidationError("config: key \"" + key + "\" in " + where +
                          " must be a number");
  return j.at(key).get<double>();
}

inline double opt_num(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw ValidationError("config: key \"" + key + "\" must be a number");
  return j.at(key).get<double>();
}

inline int as_count(double v, const std::string& key) {
  const int n = static_cast<int>(v);
  if (static_cast<double>(n) != v || n < 0)
    throw ValidationError("config: " + key + " must be a whole count");
  return n;
}

}  // namespace detail

inline StructureSpec structure_from_json(const json& j) {
  static const char* keys[] = {"diameter_nm", "period_nm", "low_thickness_nm",
                               "spacer_nm",   "n_high",    "n_low",
                               "n_ambient",   "pairs_top", "pairs_bottom",
                               "substrate"};
  if (!j.is_object())
    throw ValidationError("config: structure block must be an object");
  reject_unknown_keys(j, keys, std::size(keys), "structure");
  StructureSpec s;
  s.diameter = nm_to_m(detail::need_num(j, "diameter_nm", "structure"),
                       "diameter_nm");
  s.period = nm_to_m(detail::need_num(j, "period_nm", "structure"),
                     "period_nm");
  s.low_thickness =
      nm_to_m(detail::need_num(j, "low_thickness_nm", "structure"),
              "low_thickness_nm");
  s.spacer = nm_to_m(detail::need_num(j, "spacer_nm", "structure"),
                     "spacer_nm");
  s.n_high = detail::need_num(j, "n_high", "structure");
  s.n_low = detail::need_num(j, "n_low", "structure");
  s.n_ambient = detail::opt_num(j, "n_ambient", s.n_ambient);
  s.pairs_top = detail::as_count(detail::need_num(j, "pairs_top", "structure"),
                                 "pairs_top");
  s.pairs_bottom = detail::as_count(
      detail::need_num(j, "pairs_bottom", "structure"), "pairs_bottom");
  if (j.contains("substrate")) {
    if (!j.at("substrate").is_boolean())
      throw ValidationError("config: substrate must be true or false");
    s.substrate = j.at("substrate").get<bool>();
  }
  require_valid(s);
  return s;
}

inline ResonanceOptions resonance_options_from_json(const json& j) {
  static const char* keys[] = {
      "dr_nm",         "dz_nm",         "pad_r_nm",       "pad_z_nm",
      "absorber_cells", "courant",      "f_center_hz",    "sigma_f_hz",
      "window_lo",     "window_hi",     "settle_cycles",  "locate_cycles",
      "measure_cycles", "partition_margin_cells"};
  ResonanceOptions o;
  if (j.is_null()) return o;
  if (!j.is_object())
    throw ValidationError("config: sim block must be an object");
  reject_unknown_keys(j, keys, std::size(keys), "sim");
  if (j.contains("dr_nm"))
    o.grid.dr = nm_to_m(detail::need_num(j, "dr_nm", "sim"), "dr_nm");
  if (j.contains("dz_nm"))
    o.grid.dz = nm_to_m(detail::need_num(j, "dz_nm", "sim"), "dz_nm");
  if (j.contains("pad_r_nm"))
    o.grid.pad_r = nm_to_m(detail::need_num(j, "pad_r_nm", "sim"), "pad_r_nm");
  if (j.contains("pad_z_nm"))
    o.grid.pad_z = nm_to_m(detail::need_num(j, "pad_z_nm", "sim"), "pad_z_nm");
  if (j.contains("absorber_cells"))
    o.grid.absorber_cells = detail::as_count(
        detail::need_num(j, "absorber_cells", "sim"), "absorber_cells");
  o.courant = detail::opt_num(j, "courant", o.courant);
  o.f_center = detail::opt_num(j, "f_center_hz", o.f_center);
  o.sigma_f = detail::opt_num(j, "sigma_f_hz", o.sigma_f);
  o.window_lo = detail::opt_num(j, "window_lo", o.window_lo);
  o.window_hi = detail::opt_num(j, "window_hi", o.window_hi);
  o.settle_cycles = detail::opt_num(j, "settle_cycles", o.settle_cycles);
  o.locate_cycles = detail::opt_num(j, "locate_cycles", o.locate_cycles);
  o.measure_cycles = detail::opt_num(j, "measure_cycles", o.measure_cycles);
  if (j.contains("partition_margin_cells"))
    o.partition_margin_cells =
        detail::as_count(detail::need_num(j, "partition_margin_cells", "sim"),
                         "partition_margin_cells");
  return o;
}

inline ojson to_json(const ResonanceResult& r) {
  ojson o;
  o["f_hz"] = r.f;
  o["lambda_nm"] = r.lambda * 1e9;
  o["q"] = r.q;
  o["q_a"] = r.q_a;
  o["q_b"] = r.q_b;
  o["v_m3"] = r.v_m3;
  o["v_norm"] = r.v_norm;
  o["q_over_v"] = r.v_norm > 0.0 ? r.q / r.v_norm : 0.0;
  return o;
}

inline ojson to_json(const BandEdges& g) {
  ojson o;
  o["has_gap"] = g.has_gap;
  o["f_low_hz"] = g.f_low;
  o["f_high_hz"] = g.f_high;
  o["lambda_low_nm"] = g.lambda_low() * 1e9;
  o["lambda_high_nm"] = g.lambda_high() * 1e9;
  o["a_over_lambda_low"] = g.a_over_lambda_low();
  o["a_over_lambda_high"] = g.a_over_lambda_high();
  o["method"] = g.method;
  return o;
}

inline ojson to_json(const CqedReport& r) {
  ojson o;
  o["lambda_nm"] = r.lambda * 1e9;
  o["q"] = r.q;
  o["v_m3"] = r.v;
  o["v_norm"] = r.v_rel;
  o["g0_ghz"] = r.g0 * 1e-9;
  o["g_ghz"] = r.g * 1e-9;
  o["kappa_ghz"] = r.kappa * 1e-9;
  o["gamma_gate_ghz"] = r.gamma_gate * 1e-9;
  o["purcell_f0"] = r.f0;
  o["purcell_f"] = r.f;
  o["purcell_f_eff"] = r.f_eff;
  o["beta"] = r.beta;
  o["tau_ph_ps"] = r.tau_ph * 1e12;
  o["tau_sp_ps"] = r.tau_sp * 1e12;
  o["n_sp"] = r.n_sp;
  o["regime"] = regime_name(r.regime);
  o["boundary"] = r.boundary;
  o["lasing"] = r.lasing;
  o["q_min_strong"] = r.min_q.attainable ? r.min_q.q_min : 0.0;
  o["strong_attainable"] = r.min_q.attainable;
  return o;
}

// Canonical number formatting shared by every CSV writer; %.17g round-trips
// doubles exactly, which is what makes rewrites byte-identical.
inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace micropost

#endif
