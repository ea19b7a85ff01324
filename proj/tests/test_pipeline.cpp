#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "micropost/pipeline.hpp"

using namespace micropost;

namespace {

// Quarter-wave mirrors at 1200 nm with a half-wave spacer: the planar stack
// resonates exactly at mid-gap, and the finite post only blue-shifts it.
StructureSpec toy_post(double diameter) {
  StructureSpec s;
  s.diameter = diameter;
  s.period = 300e-9;
  s.low_thickness = 200e-9;
  s.spacer = 200e-9;
  s.n_high = 3.0;
  s.n_low = 1.5;
  s.pairs_top = 4;
  s.pairs_bottom = 5;
  s.substrate = true;
  return s;
}

ResonanceOptions toy_options() {
  ResonanceOptions opt;
  opt.grid.dr = opt.grid.dz = 20e-9;
  opt.settle_cycles = 100;   // long enough for leaky band-edge light to drain
  opt.locate_cycles = 100;
  opt.measure_cycles = 200;
  opt.window_lo = 0.97;      // the resonance cannot sit below planar mid-gap
  return opt;
}

}  // namespace

TEST_CASE("a half-wave defect post rings once and yields every observable") {
  const auto spec = toy_post(1600e-9);
  const auto opt = toy_options();
  const auto run = run_resonance(spec, opt);

  REQUIRE(run.planar.has_gap);
  CHECK(gap_contains(run.planar, run.result.f));

  // Planar mid-gap is the infinite-diameter limit; confinement shifts up.
  const double f_planar = run.planar.f_mid();
  CHECK(run.result.f > f_planar);
  CHECK(run.result.f < 1.06 * f_planar);
  CHECK_THAT(run.result.lambda * run.result.f,
             Catch::Matchers::WithinRel(c0, 1e-12));

  // Decay fit: clean single exponential, far from the cap.
  CHECK(run.qfit.q > 300.0);
  CHECK(run.qfit.q < 600.0);
  CHECK(run.qfit.residual_rel < 0.10);
  CHECK_FALSE(run.qfit.capped);

  // Flux bookkeeping must tell the same story as the envelope decay.
  REQUIRE(run.result.partitioned());
  CHECK(run.result.partition_residual() < 0.08);
  CHECK(run.partition.q_a > run.qfit.q);  // top mirror is not the only drain
  CHECK(run.partition.p_top > 0.0);
  CHECK(run.partition.p_rest > 0.0);
  CHECK(run.partition.u_mean > 0.0);

  // Mode volume of a wavelength-wide post: a few cubic half-wavelengths.
  CHECK(run.result.v_norm > 2.0);
  CHECK(run.result.v_norm < 4.5);
  CHECK(run.result.v_m3 > 0.0);

  // The field maximum along the source radius sits in the spacer.
  const double zc = spacer_center_z(spec);
  int jm = 0;
  double best = 0.0;
  for (int j = 0; j <= run.grid.nz; ++j) {
    const double a = std::abs(run.snapshot.er(run.i_src, j));
    if (a > best) {
      best = a;
      jm = j;
    }
  }
  CHECK(std::abs(run.grid.z_node(jm) - zc) <= 0.75 * spec.spacer);

  // Snapshot arrays line up with the grid.
  CHECK(run.snapshot.er.n0() == run.grid.nr);
  CHECK(run.snapshot.er.n1() == run.grid.nz + 1);
  CHECK(run.snapshot.m == 1);
  CHECK(run.snapshot.f == run.result.f);

  // Emission leaves along the axis in a single lobe.
  const auto pat = far_field(run);
  REQUIRE_FALSE(pat.theta_deg.empty());
  CHECK(pat.theta_deg.back() == 90.0);
  CHECK_THAT(pat.intensity.back(), Catch::Matchers::WithinAbs(1.0, 1e-12));
  const double width = fwhm(pat);
  CHECK(width > 25.0);
  CHECK(width < 55.0);
  CHECK(pat.power > 0.0);
  CHECK(pat.pixels_per_radius >= 4.0);

  // A postage-stamp transform plane cannot resolve the pattern.
  FarFieldOptions tiny;
  tiny.plane_lambdas = 1.0;
  CHECK_THROWS_AS(far_field(run, tiny), ResolutionError);

  // Identical inputs reproduce the numbers bit for bit.
  const auto again = run_resonance(spec, opt);
  CHECK(again.result.f == run.result.f);
  CHECK(again.qfit.q == run.qfit.q);
  CHECK(again.result.v_norm == run.result.v_norm);
  CHECK(again.partition.q == run.partition.q);
}

TEST_CASE("a drive aimed below the mirror gap finds nothing to measure") {
  const auto spec = toy_post(1600e-9);
  auto opt = toy_options();
  // Exercise the explicit drive override; aim at the continuum under the gap.
  const auto planar = planar_gap_edges(spec.n_high, spec.n_low,
                                       spec.low_thickness, spec.period);
  opt.f_center = planar.f_mid();
  opt.sigma_f = 0.25 * (planar.f_high - planar.f_low);
  opt.window_lo = 0.40;
  opt.window_hi = 0.60;
  CHECK_THROWS_AS(run_resonance(spec, opt), AnalysisError);
}
