#ifndef MICROPOST_ANALYSIS_HPP
#define MICROPOST_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "micropost/array2d.hpp"
#include "micropost/constants.hpp"
#include "micropost/errors.hpp"
#include "micropost/fdtd.hpp"
#include "micropost/fft.hpp"
#include "micropost/geometry.hpp"
#include "micropost/signal.hpp"

namespace micropost {

// Complex field amplitudes at one frequency, on the staggered sites the
// engine uses: er (nr, nz+1), ephi (nr+1, nz+1), ez (nr+1, nz).
struct ModeSnapshot {
  int m = 1;
  double f = 0.0;  // Hz, the frequency the snapshot was demodulated at
  Array2D<cdouble> er, ephi, ez;
};

struct ModeVolume {
  double v_m3 = 0.0;
  double v_norm = 0.0;  // in units of (lambda / n_h)^3
  int i_peak = 0, j_peak = 0;  // cell holding the normalizing maximum
};

// V = integral(eps |E|^2 dV) / max(eps |E|^2) over the physical region, with
// both taken for the real field at its azimuth/phase peak.  At a point the
// squared field is (S + Re[P e^{2i phi}]) / 2 with S = sum eps |c|^2 and
// P = sum eps c^2 over the components, so the peak is (S + |P|) / 2; a
// circularly polarized axis field (er, i er) then scores eps |er|^2, matching
// its uniform rotating magnitude, while a phase-aligned standing field scores
// the full eps S.  The azimuth integral contributes pi (2 pi when m = 0)
// times S.  Quantities are sampled at cell centers; the absorbing layers are
// excluded.
inline ModeVolume mode_volume(const ModeSnapshot& snap, const MaterialGrid& g,
                              double n_h) {
  const int nr = g.nr, nz = g.nz;
  if (nr < 2 || nz < 2) throw ValidationError("mode volume: empty grid");
  if (!(snap.f > 0.0) || !std::isfinite(snap.f))
    throw ValidationError("mode volume: snapshot frequency must be positive");
  if (!(n_h > 0.0)) throw ValidationError("mode volume: n_h must be positive");
  if (snap.er.n0() != nr || snap.er.n1() != nz + 1 ||
      snap.ephi.n0() != nr + 1 || snap.ephi.n1() != nz + 1 ||
      snap.ez.n0() != nr + 1 || snap.ez.n1() != nz)
    throw ValidationError("mode volume: snapshot does not match the grid");

  const int a = g.absorber_cells;
  const int i_hi = nr - a, j_lo = a, j_hi = nz - a;
  if (i_hi < 1 || j_hi - j_lo < 1)
    throw ValidationError("mode volume: absorber leaves no interior");

  double num = 0.0, den = 0.0;
  int ip = 0, jp = 0;
  for (int i = 0; i < i_hi; ++i) {
    for (int j = j_lo; j < j_hi; ++j) {
      const cdouble er = 0.5 * (snap.er(i, j) + snap.er(i, j + 1));
      const double eer = 0.5 * (g.eps_er(i, j) + g.eps_er(i, j + 1));
      const cdouble ep = 0.25 * (snap.ephi(i, j) + snap.ephi(i + 1, j) +
                                 snap.ephi(i, j + 1) + snap.ephi(i + 1, j + 1));
      const double eep = 0.25 * (g.eps_ephi(i, j) + g.eps_ephi(i + 1, j) +
                                 g.eps_ephi(i, j + 1) + g.eps_ephi(i + 1, j + 1));
      const cdouble ez = 0.5 * (snap.ez(i, j) + snap.ez(i + 1, j));
      const double eez = 0.5 * (g.eps_ez(i, j) + g.eps_ez(i + 1, j));

      const double s = eer * std::norm(er) + eep * std::norm(ep) +
                       eez * std::norm(ez);
      const cdouble p = eer * er * er + eep * ep * ep + eez * ez * ez;
      const double peak = 0.5 * (s + std::abs(p));
      num += s * g.r_half(i);
      if (peak > den) { den = peak; ip = i; jp = j; }
    }
  }
  if (den <= 0.0) throw AnalysisError("mode volume: snapshot is identically zero");

  const double measure = snap.m == 0 ? 2.0 * pi : pi;
  ModeVolume v;
  v.v_m3 = measure * num * g.dr * g.dz / den;
  const double unit = c0 / snap.f / n_h;
  v.v_norm = v.v_m3 / (unit * unit * unit);
  v.i_peak = ip;
  v.j_peak = jp;
  return v;
}

struct LossPartition {
  double q_a = 0.0;  // loss through the top plane only
  double q_b = 0.0;  // bottom plus lateral loss; infinite when none leaves there
  double q = 0.0;    // 1/q = 1/q_a + 1/q_b
  double p_top = 0.0, p_rest = 0.0, u_mean = 0.0;
};

// Q_x = omega <U> / <P_x> from synchronous flux and stored-energy records.
// The averages need at least 20 optical cycles to wash out the cycle ripple;
// a negative mean means the plane sits in reactive return flow and must move.
inline LossPartition loss_partition(const std::vector<FluxSample>& flux,
                                    const std::vector<double>& energy,
                                    double f0) {
  if (!(f0 > 0.0) || !std::isfinite(f0))
    throw ValidationError("loss partition: f0 must be positive");
  if (flux.size() < 2 || flux.size() != energy.size())
    throw ValidationError("loss partition: need matching flux and energy records");
  const double span = flux.back().t - flux.front().t;
  if (span < 20.0 / f0)
    throw AnalysisError("loss partition: record shorter than 20 optical cycles");

  double pa = 0.0, pb = 0.0, u = 0.0;
  for (std::size_t k = 0; k < flux.size(); ++k) {
    pa += flux[k].top;
    pb += flux[k].bottom + flux[k].side;
    u += energy[k];
  }
  const double n = static_cast<double>(flux.size());
  pa /= n; pb /= n; u /= n;
  if (pa < 0.0 || pb < 0.0)
    throw PlacementError("loss partition: negative mean flux; plane is in the near field");
  if (!(u > 0.0)) throw AnalysisError("loss partition: no stored energy");

  const double w = 2.0 * pi * f0;
  const double inf = std::numeric_limits<double>::infinity();
  LossPartition out;
  out.p_top = pa;
  out.p_rest = pb;
  out.u_mean = u;
  out.q_a = pa > 0.0 ? w * u / pa : inf;
  out.q_b = pb > 0.0 ? w * u / pb : inf;
  const double inv = (pa + pb) / (w * u);
  out.q = inv > 0.0 ? 1.0 / inv : inf;
  return out;
}

struct FarFieldOptions {
  double plane_lambdas = 8.0;  // span of the zero-padded transform plane
  int n_theta = 91;
  int ring_samples = 64;  // azimuthal quadrature points per polar angle
  int max_n = 8192;       // cap on the transform edge
};

struct RadiationPattern {
  std::vector<double> theta_deg;  // ascending; 90 deg is the post axis
  std::vector<double> intensity;  // peak-normalized
  double pixels_per_radius = 0.0; // light-cone radius in k-space pixels
  double power = 0.0;             // propagating power, arbitrary units
};

namespace detail {

// In-place 2-D FFT of an n x n row-major array.
inline void fft2(std::vector<cdouble>& a, int n) {
  std::vector<cdouble> line(n);
  for (int r = 0; r < n; ++r) {
    std::copy(a.begin() + static_cast<std::ptrdiff_t>(r) * n,
              a.begin() + static_cast<std::ptrdiff_t>(r + 1) * n, line.begin());
    fft_radix2(line, -1);
    std::copy(line.begin(), line.end(),
              a.begin() + static_cast<std::ptrdiff_t>(r) * n);
  }
  for (int col = 0; col < n; ++col) {
    for (int r = 0; r < n; ++r) line[r] = a[static_cast<std::size_t>(r) * n + col];
    fft_radix2(line, -1);
    for (int r = 0; r < n; ++r) a[static_cast<std::size_t>(r) * n + col] = line[r];
  }
}

// Linear interpolation of a radial profile sampled at (i + off) * dr.
inline cdouble radial_interp(const std::vector<cdouble>& v, double u) {
  if (u <= 0.0) return v.front();
  const double fi = std::floor(u);
  const std::size_t i = static_cast<std::size_t>(fi);
  if (i + 1 >= v.size()) return {0.0, 0.0};
  const double t = u - fi;
  return (1.0 - t) * v[i] + t * v[i + 1];
}

}  // namespace detail

// Angular power pattern of the field crossing a horizontal plane, from the
// plane-wave spectrum of the transverse field.  The radial profiles are
// rebuilt as Cartesian E_x, E_y maps (er at (i + 1/2) dr, ephi at i dr,
// azimuthal dependence e^{i m phi}), transformed, and read on rings
// k_par = k0 cos(theta); each propagating wave carries weight cos^2(theta_axis)
// into the intensity and cos(theta_axis) into the power sum.  Power is
// normalized so enlarging the plane leaves it fixed.
inline RadiationPattern far_field(const std::vector<cdouble>& er,
                                  const std::vector<cdouble>& ephi,
                                  double dr, int m, double f0,
                                  const FarFieldOptions& opt = {}) {
  if (!(dr > 0.0) || !(f0 > 0.0) || !std::isfinite(f0))
    throw ValidationError("far field: dr and f0 must be positive");
  if (er.size() < 2 || ephi.size() < 2)
    throw ValidationError("far field: need at least two radial samples");
  if (opt.n_theta < 5 || opt.ring_samples < 8 || !(opt.plane_lambdas > 0.0))
    throw ValidationError("far field: bad options");

  const double lambda = c0 / f0;
  const double k0 = 2.0 * pi / lambda;
  std::size_t need = next_pow2(static_cast<std::size_t>(
      std::ceil(opt.plane_lambdas * lambda / dr)));
  const int n = static_cast<int>(
      std::min<std::size_t>(need, static_cast<std::size_t>(opt.max_n)));
  const double ppl = n * dr / lambda;  // light-cone radius in pixels
  if (ppl < 4.0)
    throw ResolutionError("far field: fewer than 4 pixels per light-cone radius; "
                          "enlarge the plane or refine dr");

  std::vector<cdouble> ex(static_cast<std::size_t>(n) * n);
  std::vector<cdouble> ey(static_cast<std::size_t>(n) * n);
  for (int ix = 0; ix < n; ++ix) {
    const double x = (ix - 0.5 * n + 0.5) * dr;
    for (int iy = 0; iy < n; ++iy) {
      const double y = (iy - 0.5 * n + 0.5) * dr;
      const double rho = std::hypot(x, y);
      const cdouble vr = detail::radial_interp(er, rho / dr - 0.5);
      const cdouble vp = detail::radial_interp(ephi, rho / dr);
      if (vr == cdouble{} && vp == cdouble{}) continue;
      const double phi = std::atan2(y, x);
      const double cp = std::cos(phi), sp = std::sin(phi);
      const cdouble az = std::polar(1.0, m * phi);
      const std::size_t at = static_cast<std::size_t>(ix) * n + iy;
      ex[at] = (vr * cp - vp * sp) * az;
      ey[at] = (vr * sp + vp * cp) * az;
    }
  }
  detail::fft2(ex, n);
  detail::fft2(ey, n);

  const double dk = 2.0 * pi / (n * dr);
  auto spec2 = [&](int px, int py) {
    const std::size_t at =
        static_cast<std::size_t>(((px % n) + n) % n) * n + ((py % n) + n) % n;
    return std::norm(ex[at]) + std::norm(ey[at]);
  };

  RadiationPattern out;
  out.pixels_per_radius = ppl;
  out.theta_deg.resize(opt.n_theta);
  out.intensity.assign(opt.n_theta, 0.0);
  for (int it = 0; it < opt.n_theta; ++it) {
    const double tp = 90.0 * it / (opt.n_theta - 1);
    out.theta_deg[it] = tp;
    const double ta = (90.0 - tp) * pi / 180.0;  // angle off the axis
    const double kpar = k0 * std::sin(ta);
    double acc = 0.0;
    for (int q = 0; q < opt.ring_samples; ++q) {
      const double a = 2.0 * pi * (q + 0.5) / opt.ring_samples;
      const double px = kpar * std::cos(a) / dk, py = kpar * std::sin(a) / dk;
      const double fx = std::floor(px), fy = std::floor(py);
      const double tx = px - fx, ty = py - fy;
      const int bx = static_cast<int>(fx), by = static_cast<int>(fy);
      acc += (1.0 - tx) * (1.0 - ty) * spec2(bx, by) +
             tx * (1.0 - ty) * spec2(bx + 1, by) +
             (1.0 - tx) * ty * spec2(bx, by + 1) +
             tx * ty * spec2(bx + 1, by + 1);
    }
    const double ca = std::cos(ta);
    out.intensity[it] = acc / opt.ring_samples * ca * ca;
  }
  const double peak = *std::max_element(out.intensity.begin(), out.intensity.end());
  if (peak <= 0.0) throw AnalysisError("far field: no propagating content");
  for (double& v : out.intensity) v /= peak;

  const int half = n / 2;
  const int reach = static_cast<int>(std::ceil(ppl)) + 1;
  double power = 0.0;
  for (int px = -reach; px <= reach; ++px) {
    for (int py = -reach; py <= reach; ++py) {
      if (px < -half || px >= half || py < -half || py >= half) continue;
      const double kk = std::hypot(px * dk, py * dk);
      if (kk >= k0) continue;
      const double s = kk / k0;
      power += spec2(px, py) * std::sqrt(1.0 - s * s);
    }
  }
  out.power = power * dr * dr / (static_cast<double>(n) * n);
  return out;
}

// Full width at half maximum of a pattern peaked on the axis, in degrees.
// The pattern is symmetric about theta = 90, so the lobe is mirrored before
// the width is read.
inline double fwhm(const RadiationPattern& p) {
  const std::size_t nn = p.theta_deg.size();
  std::vector<double> th(2 * nn - 1), in(2 * nn - 1);
  for (std::size_t k = 0; k < nn; ++k) {
    th[k] = p.theta_deg[k];
    in[k] = p.intensity[k];
    th[2 * nn - 2 - k] = 180.0 - p.theta_deg[k];
    in[2 * nn - 2 - k] = p.intensity[k];
  }
  return fwhm_deg(th, in);
}

// One resolved cavity resonance.  q_a / q_b are zero until a loss partition
// has been attached; v fields are zero until a mode volume has been attached.
struct ResonanceResult {
  double f = 0.0;       // Hz
  double lambda = 0.0;  // m
  double q = 0.0;
  double q_a = 0.0;
  double q_b = 0.0;
  double v_m3 = 0.0;
  double v_norm = 0.0;  // in (lambda / n_h)^3

  bool partitioned() const { return q_a > 0.0; }
  // | 1/q - (1/q_a + 1/q_b) | relative to 1/q; small when the partition and
  // the ring-down agree.
  double partition_residual() const {
    if (!partitioned() || !(q > 0.0)) return std::numeric_limits<double>::infinity();
    const double inv = 1.0 / q_a + (std::isinf(q_b) ? 0.0 : 1.0 / q_b);
    return std::abs(1.0 - q * inv);
  }
};

}  // namespace micropost

#endif
