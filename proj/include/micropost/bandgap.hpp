#ifndef MICROPOST_BANDGAP_HPP
#define MICROPOST_BANDGAP_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "micropost/constants.hpp"
#include "micropost/errors.hpp"
#include "micropost/fdtd.hpp"
#include "micropost/geometry.hpp"
#include "micropost/signal.hpp"

namespace micropost {

// First stop band of the axial mirror stack, for one post diameter.
// diameter is +infinity for the planar (transfer-matrix) limit.
struct BandEdges {
  bool has_gap = false;
  double f_low = 0.0;   // Hz
  double f_high = 0.0;  // Hz
  double period = 0.0;  // m, mirror period the edges were computed for
  double diameter = std::numeric_limits<double>::infinity();
  std::string method;   // "transfer-matrix" or "bloch-fdtd"

  double lambda_low() const { return c0 / f_high; }   // short-wavelength edge
  double lambda_high() const { return c0 / f_low; }
  double a_over_lambda_low() const { return period * f_low / c0; }
  double a_over_lambda_high() const { return period * f_high / c0; }
  double f_mid() const { return 0.5 * (f_low + f_high); }
};

// Half trace of the normal-incidence unit-cell transfer matrix.  Real for
// lossless media; |value| > 1 means evanescent Bloch wave (inside a gap).
inline double bloch_half_trace(double n_h, double n_l, double t, double a, double f) {
  const double dh = a - t;
  const double ph = 2.0 * pi * n_h * dh * f / c0;
  const double pl = 2.0 * pi * n_l * t * f / c0;
  const double rho = n_h / n_l;
  return std::cos(ph) * std::cos(pl) -
         0.5 * (rho + 1.0 / rho) * std::sin(ph) * std::sin(pl);
}

// Edges of the first stop band of the infinite planar stack.  The first gap
// opens where the half trace crosses -1, i.e. at the zone edge k_z = pi/a.
inline BandEdges planar_gap_edges(double n_h, double n_l, double t, double a) {
  if (!(n_h > 0.0) || !(n_l >= 1.0) || n_h < n_l)
    throw ValidationError("planar_gap_edges: need n_h >= n_l >= 1");
  if (!(t > 0.0) || !(t < a))
    throw ValidationError("planar_gap_edges: need 0 < t < a");

  BandEdges out;
  out.period = a;
  out.method = "transfer-matrix";

  const double optical = n_h * (a - t) + n_l * t;  // one-period optical path
  const double f_half = c0 / (2.0 * optical);      // half-wave frequency, gap center region
  if (n_h == n_l) {
    // Uniform medium: zero-width gap at the half-wave point.
    out.has_gap = false;
    out.f_low = out.f_high = f_half;
    return out;
  }

  auto trace = [&](double f) { return bloch_half_trace(n_h, n_l, t, a, f); };

  // Bracket the band by scanning, then bisect each -1 crossing.
  const double df = f_half * 1e-3;
  double f_in = 0.0;
  for (double f = df; f < 2.4 * f_half; f += df) {
    if (trace(f) < -1.0) {
      f_in = f;
      break;
    }
  }
  if (f_in == 0.0) throw AnalysisError("planar_gap_edges: no stop band found");

  auto bisect = [&](double lo, double hi) {
    // Invariant: trace(lo)+1 and trace(hi)+1 have opposite signs.
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((trace(lo) + 1.0) * (trace(mid) + 1.0) <= 0.0)
        hi = mid;
      else
        lo = mid;
      if ((hi - lo) < 1e-6 * lo) break;
    }
    return 0.5 * (lo + hi);
  };

  out.f_low = bisect(f_in - df, f_in);
  double f_out = 0.0;
  for (double f = f_in; f < 3.0 * f_half; f += df) {
    if (trace(f) >= -1.0) {
      f_out = f;
      break;
    }
  }
  if (f_out == 0.0) throw AnalysisError("planar_gap_edges: upper edge not found");
  out.f_high = bisect(f_out - df, f_out);
  out.has_gap = true;
  return out;
}

// Numerical knobs for the finite-diameter band-edge run.  Defaults resolve
// the quarter-wave stacks of interest to well under a percent; -1 placements
// mean generic interior sites away from the cell's symmetry planes.
struct BlochOptions {
  double dr = 0.0;          // 0: picked from the diameter
  double dz_target = 5e-9;  // snapped so the period is a whole cell count
  double pad_r = 0.5e-6;    // air between post wall and absorber
  int absorber_cells = 10;
  double courant = 0.5;
  long settle_steps = 30000;     // transient drain before the record
  long record_steps = 1L << 18;  // ring-down samples fed to the spectrum
  double window_frac = 0.25;     // accept peaks within planar band +- this
  double min_rel_amplitude = 0.02;
  double quiet_rel = 1e-9;  // ring-down below this of the drive: no mode
  double profile_frac = 0.75;  // radial extent of the drive/readout profile
  int src_j = -1, probe_j = -1;
  Component src_component = Component::ephi;
};

// First-gap edges of the fundamental-branch guided mode of the finite post,
// at the zone edge k_z = pi/a: one mirror period with a Bloch wrap in z and
// an absorber in r, rung down with an m = 1 pulse covering the planar band.
// Guided zone-edge modes ring indefinitely; the fundamental pair's lines
// bracket the gap.  Higher transverse branches can place states inside that
// gap on wide posts, so each line is projected back onto the radial probe
// bank and classified by its radial node count: the two surviving zero-node
// lines are the fundamental pair.  Fewer than two zero-node lines means the
// structure no longer guides at this diameter.
inline BandEdges bloch_band_edges(double n_h, double n_l, double t, double a,
                                  double diameter, const BlochOptions& opt = {}) {
  if (!std::isfinite(diameter) || !(diameter > 0.0))
    throw ValidationError("bloch_band_edges: need a finite positive diameter");
  const BandEdges planar = planar_gap_edges(n_h, n_l, t, a);

  const double R = 0.5 * diameter;
  const int nzc = std::max(8, static_cast<int>(std::lround(a / opt.dz_target)));
  const double dz = a / nzc;
  const double dr =
      opt.dr > 0.0 ? opt.dr : std::min(10e-9, std::max(4e-9, R / 20.0));
  const int n_post = std::max(2, static_cast<int>(std::lround(R / dr)));
  const int nr = n_post + static_cast<int>(std::lround(opt.pad_r / dr)) +
                 opt.absorber_cells;

  // Unit cell [0, a) with the low-index layer centered, so the wrap row sits
  // in uniform high-index material.  Sites are volume-averaged: z span by the
  // periodic stack profile, r span by the area fraction inside the post.
  const double eh = n_h * n_h, el = n_l * n_l;
  const double z1 = 0.5 * (a - t), z2 = z1 + t;
  auto cum = [&](double z) {  // integral of the stack profile over [0, z]
    double s = eh * std::min(z, z1);
    if (z > z1) s += el * (std::min(z, z2) - z1);
    if (z > z2) s += eh * (z - z2);
    return s;
  };
  auto eps_z_avg = [&](double za, double zb) {
    const double len = zb - za;
    const double lo = za - a * std::floor(za / a);
    const double hi = lo + len;
    const double s =
        hi <= a ? cum(hi) - cum(lo) : cum(a) - cum(lo) + cum(hi - a);
    return s / len;
  };
  auto post_frac = [&](double ra, double rb) {
    if (rb <= R) return 1.0;
    if (ra >= R) return 0.0;
    return (R * R - ra * ra) / (rb * rb - ra * ra);
  };

  MaterialGrid g;
  g.nr = nr;
  g.nz = nzc;
  g.dr = dr;
  g.dz = dz;
  g.z_min = 0.0;
  g.absorber_cells = opt.absorber_cells;
  g.eps_er = Array2D<double>(nr, nzc + 1, 1.0);
  g.eps_ephi = Array2D<double>(nr + 1, nzc + 1, 1.0);
  g.eps_ez = Array2D<double>(nr + 1, nzc, 1.0);
  for (int i = 0; i < nr; ++i) {
    const double fr = post_frac(i * dr, (i + 1) * dr);
    if (fr == 0.0) break;
    for (int j = 0; j <= nzc; ++j)
      g.eps_er(i, j) =
          1.0 + fr * (eps_z_avg((j - 0.5) * dz, (j + 0.5) * dz) - 1.0);
  }
  for (int i = 0; i <= nr; ++i) {
    const double fr = post_frac(std::max(0.0, (i - 0.5) * dr), (i + 0.5) * dr);
    if (fr == 0.0) break;
    for (int j = 0; j <= nzc; ++j)
      g.eps_ephi(i, j) =
          1.0 + fr * (eps_z_avg((j - 0.5) * dz, (j + 0.5) * dz) - 1.0);
    for (int j = 0; j < nzc; ++j)
      g.eps_ez(i, j) = 1.0 + fr * (eps_z_avg(j * dz, (j + 1) * dz) - 1.0);
  }

  SimParams p;
  p.m = 1;
  p.courant = opt.courant;
  p.absorber.cells = opt.absorber_cells;
  p.absorb_r = true;
  p.absorb_z = false;
  p.bloch = true;
  p.bloch_k = pi / a;
  Simulation sim(g, p);

  const double f_lo_w = (1.0 - opt.window_frac) * planar.f_low;
  const double f_hi_w = (1.0 + opt.window_frac) * planar.f_high;
  const int j_src = opt.src_j >= 0 ? opt.src_j
                                   : static_cast<int>(std::lround(0.3 * nzc));
  const int j_prb = opt.probe_j >= 0
                        ? opt.probe_j
                        : static_cast<int>(std::lround(0.7 * nzc));

  // Raised-cosine profile over the core, as a quadrature of point sites.
  const int K = std::min(12, std::max(3, n_post / 2));
  std::vector<int> ki(K);
  std::vector<double> kw(K);
  std::vector<int> pids(K);
  for (int k = 0; k < K; ++k) {
    const double r = (k + 0.5) / K * opt.profile_frac * R;
    ki[k] = std::max(1, static_cast<int>(std::lround(r / dr)));
    const double u = std::cos(0.5 * pi * (k + 0.5) / K);
    kw[k] = u * u;
    SourceSpec src;
    src.component = opt.src_component;
    src.i = ki[k];
    src.j = j_src;
    src.amplitude = kw[k];
    src.f_center = 0.5 * (f_lo_w + f_hi_w);
    src.sigma_f = 0.25 * (f_hi_w - f_lo_w);
    sim.add_source(src);
    pids[k] = sim.add_probe(Component::ephi, ki[k], j_prb, 1);
  }
  const double sigma_t = 1.0 / (2.0 * pi * 0.25 * (f_hi_w - f_lo_w));
  const long off_steps =
      static_cast<long>(std::ceil(8.0 * sigma_t / sim.dt())) + 1;
  sim.run(off_steps + opt.settle_steps + opt.record_steps);

  std::vector<cdouble> rec(sim.probe(pids[0]).size(), cdouble{0.0, 0.0});
  for (int k = 0; k < K; ++k) {
    const auto& s = sim.probe(pids[k]);
    for (std::size_t n = 0; n < rec.size(); ++n) rec[n] += kw[k] * s[n];
  }

  BandEdges out;
  out.period = a;
  out.diameter = diameter;
  out.method = "bloch-fdtd";

  const std::size_t tail0 = rec.size() - opt.record_steps;
  double a_drive = 0.0, a_ring = 0.0;
  for (std::size_t k = 0; k < tail0; ++k)
    a_drive = std::max(a_drive, std::abs(rec[k]));
  for (std::size_t k = tail0; k < rec.size(); ++k)
    a_ring = std::max(a_ring, std::abs(rec[k]));
  if (a_ring < opt.quiet_rel * a_drive) return out;  // nothing persists

  SpectrumOptions so;
  so.min_rel_amplitude = opt.min_rel_amplitude;
  const std::vector<cdouble> tail(rec.begin() + tail0, rec.end());
  std::vector<Peak> lines;
  for (const Peak& pk : spectrum(tail, sim.dt(), so))
    if (pk.freq >= f_lo_w && pk.freq <= f_hi_w) lines.push_back(pk);

  // Windowed projection of the probe bank at one line's (signed) frequency,
  // classified by the number of radial sign changes of the mode profile.
  auto radial_nodes = [&](double f_signed) {
    const cdouble rho = std::polar(1.0, -2.0 * pi * f_signed * sim.dt());
    const std::size_t L = opt.record_steps;
    std::vector<cdouble> v(K);
    for (int k = 0; k < K; ++k) {
      const auto& s = sim.probe(pids[k]);
      cdouble rot{1.0, 0.0}, acc{0.0, 0.0};
      for (std::size_t n = 0; n < L; ++n) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * pi * n / (L - 1));
        acc += s[tail0 + n] * rot * w;
        rot *= rho;
      }
      v[k] = acc;
    }
    std::size_t km = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
      if (std::abs(v[k]) > std::abs(v[km])) km = k;
    const double amax = std::abs(v[km]);
    if (amax == 0.0) return K;
    const cdouble dir = std::conj(v[km]) / amax;
    int changes = 0, last = 0;
    for (int k = 0; k < K; ++k) {
      const double x = (v[k] * dir).real();
      if (std::abs(x) < 0.05 * amax) continue;  // too faint to trust a sign
      const int sgn = x > 0.0 ? 1 : -1;
      if (last != 0 && sgn != last) ++changes;
      last = sgn;
    }
    return changes;
  };

  std::vector<Peak> fund;
  for (const Peak& pk : lines)
    if (radial_nodes(pk.f_signed) == 0) fund.push_back(pk);
  if (fund.size() < 2) return out;
  std::sort(fund.begin(), fund.end(),
            [](const Peak& x, const Peak& y) { return x.amplitude > y.amplitude; });
  out.f_low = std::min(fund[0].freq, fund[1].freq);
  out.f_high = std::max(fund[0].freq, fund[1].freq);
  out.has_gap = true;
  return out;
}

// Strict interior test; edges themselves do not count.
inline bool gap_contains(const BandEdges& g, double f) {
  return g.has_gap && f > g.f_low && f < g.f_high;
}

// Position of f relative to the gap center, in units of the gap width.
inline double gap_detuning(const BandEdges& g, double f) {
  if (!g.has_gap) throw AnalysisError("gap_detuning: empty gap");
  return (f - g.f_mid()) / (g.f_high - g.f_low);
}

}  // namespace micropost

#endif
