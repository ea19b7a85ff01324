#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "micropost/array2d.hpp"
#include "micropost/constants.hpp"
#include "micropost/errors.hpp"
#include "micropost/signal.hpp"

using namespace micropost;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<cdouble> tone(std::size_t n, double dt, double f, double amp,
                          double tau = 0.0) {
  std::vector<cdouble> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i * dt;
    const double env = tau != 0.0 ? std::exp(-t / tau) : 1.0;
    x[i] = amp * env * std::exp(cdouble(0.0, 2.0 * pi * f * t));
  }
  return x;
}

}  // namespace

TEST_CASE("spectrum rejects bad input") {
  std::vector<cdouble> x(100, 1.0);
  CHECK_THROWS_AS(spectrum(x, 1e-15), AnalysisError);
  x.resize(4096, 1.0);
  CHECK_THROWS_AS(spectrum(x, 0.0), AnalysisError);
}

TEST_CASE("spectrum finds an off-bin complex tone to sub-bin accuracy") {
  const double dt = 1e-15;
  const std::size_t n = 8192;
  const double df = 1.0 / (dt * n);
  const double f0 = 2.37e14 + 0.3 * df;
  const auto peaks = spectrum(tone(n, dt, f0, 1.0), dt);
  REQUIRE(!peaks.empty());
  CHECK_THAT(peaks[0].freq, WithinAbs(f0, df / 20.0));
  CHECK(peaks[0].f_signed > 0.0);
}

TEST_CASE("spectrum reports a negative-frequency tone with its sign") {
  const double dt = 1e-15;
  const auto peaks = spectrum(tone(8192, dt, -2.0e14, 1.0), dt);
  REQUIRE(!peaks.empty());
  CHECK(peaks[0].f_signed < 0.0);
  CHECK_THAT(peaks[0].freq, WithinRel(2.0e14, 1e-3));
}

TEST_CASE("spectrum orders multiple tones by amplitude") {
  const double dt = 1e-15;
  const std::size_t n = 8192;
  auto x = tone(n, dt, 1.8e14, 1.0);
  const auto weak = tone(n, dt, 3.1e14, 0.3);
  for (std::size_t i = 0; i < n; ++i) x[i] += weak[i];
  const auto peaks = spectrum(x, dt);
  REQUIRE(peaks.size() == 2);
  CHECK_THAT(peaks[0].freq, WithinRel(1.8e14, 1e-3));
  CHECK_THAT(peaks[1].freq, WithinRel(3.1e14, 1e-3));
  CHECK_THAT(peaks[1].amplitude / peaks[0].amplitude, WithinRel(0.3, 0.10));
}

TEST_CASE("spectrum threshold controls which tones count as peaks") {
  const double dt = 1e-15;
  const std::size_t n = 8192;
  auto x = tone(n, dt, 1.8e14, 1.0);
  const auto tiny = tone(n, dt, 3.1e14, 0.01);
  for (std::size_t i = 0; i < n; ++i) x[i] += tiny[i];
  CHECK(spectrum(x, dt).size() == 1);
  SpectrumOptions opt;
  opt.min_rel_amplitude = 0.005;
  const auto peaks = spectrum(x, dt, opt);
  REQUIRE(peaks.size() == 2);
  CHECK_THAT(peaks[1].freq, WithinRel(3.1e14, 1e-3));
}

TEST_CASE("spectrum of a real sine has both sidebands") {
  const double dt = 1e-15;
  const std::size_t n = 8192;
  std::vector<cdouble> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * pi * 2.2e14 * i * dt);
  const auto peaks = spectrum(x, dt);
  REQUIRE(peaks.size() >= 2);
  CHECK_THAT(peaks[0].freq, WithinRel(2.2e14, 1e-3));
  CHECK_THAT(peaks[1].freq, WithinRel(2.2e14, 1e-3));
  CHECK(peaks[0].f_signed * peaks[1].f_signed < 0.0);
}

TEST_CASE("Q fit recovers a synthetic ring-down within 1 percent") {
  // Field amplitude decays as exp(-omega t / 2Q) for a mode of quality Q.
  const double f0 = 3e14, q = 5000.0;
  const double dt = 1.0 / (16.0 * f0);
  const double tau = q / (pi * f0);
  const std::size_t n = 16384;
  std::vector<cdouble> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i * dt;
    x[i] = std::exp(-t / tau) * std::sin(2.0 * pi * f0 * t);
  }
  const auto fit = fit_q(x, dt, f0);
  CHECK_FALSE(fit.capped);
  CHECK_THAT(fit.q, WithinRel(q, 0.01));
  CHECK_THAT(fit.tau_field, WithinRel(tau, 0.01));
}

TEST_CASE("Q fit works on a complex ring-down at negative signed frequency") {
  const double f0 = 3e14, q = 2000.0;
  const double dt = 1.0 / (16.0 * f0);
  const double tau = q / (pi * f0);
  const auto x = tone(16384, dt, -f0, 1.0, tau);
  const auto fit = fit_q(x, dt, f0);
  CHECK_THAT(fit.q, WithinRel(q, 0.01));
}

TEST_CASE("Q fit caps when there is nothing to decay") {
  const double f0 = 3e14;
  const double dt = 1.0 / (16.0 * f0);
  const auto fit = fit_q(tone(16384, dt, f0, 1.0), dt, f0);
  CHECK(fit.capped);
  CHECK(fit.q == QFitOptions{}.q_cap);
}

TEST_CASE("Q fit rejects a growing envelope") {
  const double f0 = 3e14;
  const double dt = 1.0 / (16.0 * f0);
  const double tau = 5000.0 / (pi * f0);
  std::vector<cdouble> x(16384);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = i * dt;
    x[i] = std::exp(+t / tau) * std::sin(2.0 * pi * f0 * t);
  }
  CHECK_THROWS_AS(fit_q(x, dt, f0), AnalysisError);
}

TEST_CASE("Q fit rejects a beating two-mode envelope") {
  const double f0 = 3e14, q = 50000.0;
  const double dt = 1.0 / (16.0 * f0);
  const double tau = q / (pi * f0);
  auto x = tone(16384, dt, f0, 1.0, tau);
  const auto second = tone(16384, dt, f0 * 1.001, 0.6, tau);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += second[i];
  CHECK_THROWS_AS(fit_q(x, dt, f0), AnalysisError);
}

TEST_CASE("Q fit input validation") {
  std::vector<cdouble> x(64, 1.0);
  CHECK_THROWS_AS(fit_q(x, 1e-15, 1e14), AnalysisError);
  x.resize(16384, 1.0);
  CHECK_THROWS_AS(fit_q(x, 1e-15, -1e14), AnalysisError);
}

TEST_CASE("FWHM of a centered Gaussian lobe") {
  std::vector<double> th, in;
  for (double t = 0.0; t <= 90.0; t += 0.5) {
    th.push_back(t);
    in.push_back(std::exp(-(t - 45.0) * (t - 45.0) / 200.0));
  }
  // sigma = 10 deg, FWHM = 2 sqrt(2 ln 2) sigma.
  CHECK_THAT(fwhm_deg(th, in), WithinAbs(23.548, 0.05));
}

TEST_CASE("FWHM of an on-axis lobe uses the mirror image") {
  std::vector<double> th, in;
  for (double t = 0.0; t <= 90.0; t += 0.5) {
    th.push_back(t);
    in.push_back(std::exp(-t * t / 200.0));
  }
  CHECK_THAT(fwhm_deg(th, in), WithinAbs(23.548, 0.05));
}

TEST_CASE("FWHM rejects a two-lobed pattern and names the rival") {
  std::vector<double> th, in;
  for (double t = 0.0; t <= 90.0; t += 1.0) {
    th.push_back(t);
    in.push_back(std::exp(-(t - 20.0) * (t - 20.0) / 50.0) +
                 0.8 * std::exp(-(t - 60.0) * (t - 60.0) / 50.0));
  }
  try {
    fwhm_deg(th, in);
    FAIL("expected an error for a two-lobed pattern");
  } catch (const AnalysisError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("lobes") != std::string::npos);
    CHECK(msg.find("60") != std::string::npos);
  }
}

TEST_CASE("FWHM rejects degenerate patterns") {
  std::vector<double> th{0, 1, 2, 3};
  std::vector<double> in{1, 1, 1, 1};
  CHECK_THROWS_AS(fwhm_deg(th, in), AnalysisError);  // too short

  th = {0, 10, 20, 30, 40, 50};
  in = {1, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(fwhm_deg(th, in), AnalysisError);  // flat, no crossing

  in = {0, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(fwhm_deg(th, in), AnalysisError);  // empty
}
