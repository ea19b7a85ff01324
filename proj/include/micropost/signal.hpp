#ifndef MICROPOST_SIGNAL_HPP
#define MICROPOST_SIGNAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "micropost/constants.hpp"
#include "micropost/errors.hpp"
#include "micropost/fft.hpp"

namespace micropost {

struct Peak {
  double freq = 0.0;      // Hz, magnitude of the refined peak frequency
  double f_signed = 0.0;  // Hz, signed (complex series can ring at either sign)
  double amplitude = 0.0;
};

struct SpectrumOptions {
  double min_rel_amplitude = 0.05;  // peak threshold relative to strongest peak
};

// Peaks of the windowed spectrum of a (complex) time series, strongest first.
// Frequencies are refined below the bin width by a local quadratic fit to the
// log magnitude.
inline std::vector<Peak> spectrum(const std::vector<std::complex<double>>& x, double dt,
                                  const SpectrumOptions& opt = {}) {
  if (x.size() < 4096)
    throw AnalysisError("spectrum: series shorter than 4096 samples");
  if (!(dt > 0.0)) throw AnalysisError("spectrum: nonpositive sample interval");

  const std::size_t n = x.size();
  const std::size_t nf = next_pow2(n);
  std::vector<std::complex<double>> a(nf);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * pi * i / (n - 1));
    a[i] = x[i] * w;
  }
  fft_radix2(a, -1);

  std::vector<double> mag(nf);
  double mmax = 0.0;
  for (std::size_t k = 0; k < nf; ++k) {
    mag[k] = std::abs(a[k]);
    mmax = std::max(mmax, mag[k]);
  }
  if (mmax == 0.0) return {};

  const double df = 1.0 / (dt * static_cast<double>(nf));
  auto bin_freq = [&](std::size_t k) {
    const auto ks = static_cast<long long>(k);
    const auto half = static_cast<long long>(nf / 2);
    return (ks <= half ? ks : ks - static_cast<long long>(nf)) * df;
  };

  std::vector<Peak> peaks;
  for (std::size_t k = 1; k + 1 < nf; ++k) {
    if (mag[k] < opt.min_rel_amplitude * mmax) continue;
    if (!(mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])) continue;
    // Quadratic refinement on log magnitude.
    const double l0 = std::log(mag[k - 1]), l1 = std::log(mag[k]), l2 = std::log(mag[k + 1]);
    const double den = l0 - 2.0 * l1 + l2;
    double delta = 0.0;
    if (den < -1e-300) delta = 0.5 * (l0 - l2) / den;
    delta = std::clamp(delta, -0.5, 0.5);
    Peak p;
    p.f_signed = bin_freq(k) + delta * df;
    p.freq = std::abs(p.f_signed);
    p.amplitude = std::exp(l1 - 0.25 * (l0 - l2) * delta);
    peaks.push_back(p);
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& a_, const Peak& b_) { return a_.amplitude > b_.amplitude; });
  return peaks;
}

struct QFitOptions {
  double band_frac = 0.02;    // filter full width as a fraction of f0
  double trim_frac = 0.15;    // fraction of the window dropped at each edge
  double q_cap = 1e9;         // reported when the decay is too slow to resolve
  double residual_tol = 0.25; // max rms residual relative to the fitted drop
};

struct QFit {
  double q = 0.0;
  double tau_field = 0.0;     // amplitude 1/e time
  double slope = 0.0;         // d ln|envelope| / dt
  double residual_rel = 0.0;
  bool capped = false;
};

// Quality factor from the ring-down of a probe series: band-pass around f0,
// take the single-sideband envelope, fit ln|envelope| linearly in time.
// Q = pi * f0 * tau with tau the fitted amplitude decay time.
inline QFit fit_q(const std::vector<std::complex<double>>& x, double dt, double f0,
                  const QFitOptions& opt = {}) {
  if (x.size() < 256) throw AnalysisError("fit_q: series too short");
  if (!(f0 > 0.0) || !(dt > 0.0)) throw AnalysisError("fit_q: need f0 > 0 and dt > 0");

  const std::size_t n = x.size();
  const std::size_t nf = next_pow2(n);
  std::vector<std::complex<double>> a(nf);
  std::copy(x.begin(), x.end(), a.begin());
  fft_radix2(a, -1);

  const double df = 1.0 / (dt * static_cast<double>(nf));
  const double bw = opt.band_frac * f0;
  auto band_power = [&](double fc) {
    double p = 0.0;
    for (std::size_t k = 0; k < nf; ++k) {
      const auto ks = static_cast<long long>(k);
      const double f = (ks <= static_cast<long long>(nf / 2)
                            ? ks
                            : ks - static_cast<long long>(nf)) * df;
      if (std::abs(f - fc) <= 0.5 * bw) p += std::norm(a[k]);
    }
    return p;
  };
  const double fc = band_power(f0) >= band_power(-f0) ? f0 : -f0;

  for (std::size_t k = 0; k < nf; ++k) {
    const auto ks = static_cast<long long>(k);
    const double f = (ks <= static_cast<long long>(nf / 2)
                          ? ks
                          : ks - static_cast<long long>(nf)) * df;
    if (std::abs(f - fc) > 0.5 * bw) a[k] = 0.0;
  }
  fft_radix2(a, +1);
  const double inv_nf = 1.0 / static_cast<double>(nf);

  // Trim filter ring-in plus a fixed edge fraction.
  const auto ring = static_cast<std::size_t>(std::ceil(1.0 / (bw * dt)));
  std::size_t n1 = std::max(static_cast<std::size_t>(opt.trim_frac * n), ring);
  std::size_t n2 = n - std::max(static_cast<std::size_t>(opt.trim_frac * n),
                                std::min(ring, n / 4));
  if (n2 <= n1 + 16)
    throw AnalysisError("fit_q: window too short after trimming the filter transient");

  double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = n1; i < n2; ++i) {
    const double env = std::abs(a[i]) * inv_nf;
    if (env <= 0.0) throw AnalysisError("fit_q: envelope vanished inside the fit window");
    const double t = i * dt, y = std::log(env);
    sw += 1.0; st += t; sy += y; stt += t * t; sty += t * y;
  }
  const double det = sw * stt - st * st;
  const double slope = (sw * sty - st * sy) / det;
  const double icpt = (stt * sy - st * sty) / det;

  QFit out;
  out.slope = slope;
  const double t_fit = (n2 - n1) * dt;
  const double drop = -slope * t_fit;  // fitted e-foldings over the window

  double ss = 0.0;
  for (std::size_t i = n1; i < n2; ++i) {
    const double env = std::abs(a[i]) * inv_nf;
    const double rsd = std::log(env) - (icpt + slope * i * dt);
    ss += rsd * rsd;
  }
  const double rms = std::sqrt(ss / sw);

  if (drop < 0.01) {
    // Too little net decay to resolve.  Only a genuinely flat envelope may be
    // reported as lossless-looking; growth or beating is a bad signal.
    if (drop < -0.05 && rms < 0.2 * std::abs(drop))
      throw AnalysisError("fit_q: envelope grows; contaminated or unstable signal");
    if (rms > 0.05)
      throw AnalysisError(
          "fit_q: envelope wobbles without net decay; likely several modes in "
          "the filter band, narrow it or extend the settle window");
    out.capped = true;
    out.q = opt.q_cap;
    out.tau_field = pi * f0 > 0 ? out.q / (pi * f0) : 0.0;
    out.residual_rel = rms;
    return out;
  }

  out.residual_rel = rms / drop;
  if (out.residual_rel > opt.residual_tol)
    throw AnalysisError(
        "fit_q: envelope not single-exponential (residual " +
        std::to_string(out.residual_rel) +
        "); narrow the filter band or extend the settle window");

  out.tau_field = -1.0 / slope;
  out.q = pi * f0 * out.tau_field;
  if (out.q > opt.q_cap) {
    out.q = opt.q_cap;
    out.capped = true;
  }
  return out;
}

struct RingdownOptions {
  double block_cycles = 8.0;  // Hann block span forming the envelope
  double hop_cycles = 4.0;
  double floor_rel = 20.0;    // fit only blocks this factor above the floor
  int skip_blocks = 2;        // drop leading blocks (residual transients)
  double min_drop = 0.2;      // nepers; less decay than this reports the cap
  double residual_tol = 0.15; // rms ln-envelope residual per neper of drop
  double q_cap = 1e9;
};

// Quality factor from a ring-down holding several lines: demodulate at the
// signed line frequency in short Hann blocks, giving that line's envelope
// alone, then fit ln(envelope) over the stretch that sits clear of the noise
// floor.  Q = pi |f| tau.  More selective than fit_q when fast transients or
// persistent numerical residue share the record.
inline QFit ringdown_q(const std::vector<std::complex<double>>& x, double dt,
                       double f_signed, const RingdownOptions& opt = {}) {
  const double f0 = std::abs(f_signed);
  if (!(f0 > 0.0) || !(dt > 0.0))
    throw AnalysisError("ringdown: need f0 != 0 and dt > 0");
  const auto blk = static_cast<std::size_t>(std::lround(opt.block_cycles / (f0 * dt)));
  const auto hop = static_cast<std::size_t>(std::lround(opt.hop_cycles / (f0 * dt)));
  if (blk < 16 || hop < 1 || x.size() < 3 * blk)
    throw AnalysisError("ringdown: record shorter than three envelope blocks");

  const std::size_t nb = 1 + (x.size() - blk) / hop;
  std::vector<double> env(nb), tb(nb);
  const cdouble rot0 = std::polar(1.0, -2.0 * pi * f_signed * dt);
  for (std::size_t b = 0; b < nb; ++b) {
    cdouble acc{0.0, 0.0};
    cdouble rot = std::polar(1.0, -2.0 * pi * f_signed * (b * hop) * dt);
    for (std::size_t k = 0; k < blk; ++k) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * pi * k / (blk - 1));
      acc += x[b * hop + k] * rot * w;
      rot *= rot0;
    }
    env[b] = std::abs(acc);
    tb[b] = (b * hop + 0.5 * blk) * dt;
  }

  const double fmin = *std::min_element(env.begin(), env.end());
  std::size_t hi = nb;  // one past the last block clear of the floor
  while (hi > 0 && env[hi - 1] < opt.floor_rel * fmin) --hi;
  if (hi < nb / 4) hi = nb;  // floor never cleanly reached; use everything

  // Leading blocks can hold leftover transients; retry with a later start if
  // the first fit is not a clean line.
  std::string last_err = "ringdown: fit window empty";
  for (std::size_t lo : {static_cast<std::size_t>(opt.skip_blocks), hi / 4, hi / 2}) {
    if (lo + 4 > hi) continue;
    double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t b = lo; b < hi; ++b) {
      if (env[b] <= 0.0) continue;
      const double y = std::log(env[b]);
      sw += 1.0; st += tb[b]; sy += y; stt += tb[b] * tb[b]; sty += tb[b] * y;
    }
    if (sw < 4.0) continue;
    const double det = sw * stt - st * st;
    const double slope = (sw * sty - st * sy) / det;
    const double icpt = (stt * sy - st * sty) / det;
    double ss = 0.0;
    for (std::size_t b = lo; b < hi; ++b) {
      if (env[b] <= 0.0) continue;
      const double rsd = std::log(env[b]) - (icpt + slope * tb[b]);
      ss += rsd * rsd;
    }
    const double rms = std::sqrt(ss / sw);
    const double drop = -slope * (tb[hi - 1] - tb[lo]);

    QFit out;
    out.slope = slope;
    if (drop < opt.min_drop) {
      if (rms > 0.1 && drop < 0.5 * opt.min_drop) {
        last_err = "ringdown: envelope wobbles without net decay";
        continue;
      }
      out.capped = true;
      out.q = opt.q_cap;
      out.tau_field = out.q / (pi * f0);
      out.residual_rel = rms;
      return out;
    }
    out.residual_rel = rms / drop;
    if (out.residual_rel > opt.residual_tol) {
      last_err = "ringdown: envelope not single-exponential (residual " +
                 std::to_string(out.residual_rel) + ")";
      continue;
    }
    out.tau_field = -1.0 / slope;
    out.q = pi * f0 * out.tau_field;
    if (out.q > opt.q_cap) {
      out.q = opt.q_cap;
      out.capped = true;
    }
    return out;
  }
  throw AnalysisError(last_err);
}

// Full width at half maximum of a single-lobed pattern sampled on an
// ascending angle grid (degrees).  If the peak sits on the last sample the
// lobe is treated as symmetric about it.  Multi-lobe input is rejected.
inline double fwhm_deg(const std::vector<double>& theta, const std::vector<double>& inten) {
  const std::size_t n = theta.size();
  if (n < 5 || inten.size() != n) throw AnalysisError("fwhm: need >= 5 samples");

  std::size_t p = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (inten[i] > inten[p]) p = i;
  const double imax = inten[p];
  if (!(imax > 0.0)) throw AnalysisError("fwhm: pattern is empty");
  const double half = 0.5 * imax;

  std::vector<double> rivals;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (i == p) continue;
    if (inten[i] >= half && inten[i] > inten[i - 1] && inten[i] >= inten[i + 1]) {
      // Require a genuine dip between this maximum and the main peak.
      const auto lo = std::min(i, p), hi = std::max(i, p);
      double vmin = imax;
      for (std::size_t k = lo; k <= hi; ++k) vmin = std::min(vmin, inten[k]);
      if (vmin < 0.9 * std::min(inten[i], imax)) rivals.push_back(theta[i]);
    }
  }
  if (!rivals.empty()) {
    std::string msg = "fwhm: pattern has multiple lobes at";
    for (double t : rivals) msg += " " + std::to_string(t) + " deg";
    throw AnalysisError(msg);
  }

  auto cross = [&](bool left) -> double {
    if (left) {
      for (std::size_t i = p; i-- > 0;)
        if (inten[i] < half) {
          const double f = (half - inten[i]) / (inten[i + 1] - inten[i]);
          return theta[i] + f * (theta[i + 1] - theta[i]);
        }
    } else {
      for (std::size_t i = p + 1; i < n; ++i)
        if (inten[i] < half) {
          const double f = (inten[i - 1] - half) / (inten[i - 1] - inten[i]);
          return theta[i - 1] + f * (theta[i] - theta[i - 1]);
        }
    }
    return std::nan("");
  };
  const double tl = cross(true);
  const double tr = cross(false);
  const bool has_l = !std::isnan(tl), has_r = !std::isnan(tr);
  if (has_l && has_r) return tr - tl;
  if (has_l) return 2.0 * (theta[p] - tl);  // peak at or near the upper edge
  if (has_r) return 2.0 * (tr - theta[p]);
  throw AnalysisError("fwhm: no half-maximum crossing; pattern too flat");
}

}  // namespace micropost

#endif
