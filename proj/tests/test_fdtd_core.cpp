#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "micropost/fdtd.hpp"
#include "micropost/signal.hpp"
#include "support/grids.hpp"
#include "support/planar_fdtd.hpp"

using namespace micropost;
using Catch::Approx;

namespace {

const cdouble I{0.0, 1.0};

double max_abs(const Array2D<cdouble>& f) {
  double m = 0.0;
  for (int i = 0; i < f.n0(); ++i)
    for (int j = 0; j < f.n1(); ++j) m = std::max(m, std::abs(f(i, j)));
  return m;
}

std::vector<double> gaussian_profile(int nz, double center, double width) {
  std::vector<double> e(nz + 1, 0.0);
  for (int j = 1; j < nz; ++j) {
    const double u = (j - center) / width;
    e[j] = std::exp(-0.5 * u * u);
  }
  return e;
}

}  // namespace

TEST_CASE("time step derates the planar limit by the measured margins") {
  CHECK(courant_limit_fraction(0) == 0.88);
  CHECK(courant_limit_fraction(1) == 0.80);
  CHECK(courant_limit_fraction(2) == 0.55);
  CHECK(courant_limit_fraction(5) == Approx(1.15 / 5).epsilon(1e-15));

  const double planar = 5e-9 / (c0 * std::sqrt(2.0));
  CHECK(courant_dt(5e-9, 5e-9, 0, 0.5) == Approx(0.5 * 0.88 * planar).epsilon(1e-14));
  CHECK(courant_dt(5e-9, 5e-9, 1, 1.0) == Approx(0.80 * planar).epsilon(1e-14));
  CHECK(courant_dt(5e-9, 10e-9, 0, 1.0) ==
        Approx(0.88 / (c0 * std::sqrt(1.0 / 25e-18 + 1.0 / 100e-18))).epsilon(1e-14));
}

// An x-polarized plane wave is the m = 1 state with Er and -i Ephi equal and
// uniform in r.  Cell by cell the curl terms then cancel so that the solver
// must reproduce a one-dimensional slab-stack line exactly, including the
// on-axis update rules.  The outer wall row is driven from the line so the
// finite radius does not intrude.
TEST_CASE("azimuthal order one reduces exactly to a planar line") {
  const int nr = 24, nz = 300;
  auto eps = [](int j) {
    if (j >= 100 && j < 140) return 12.7449;
    if (j >= 140 && j < 180) return 8.6436;
    return 1.0;
  };
  MaterialGrid g = testgrid::layered(nr, nz, eps);

  SimParams p;
  p.m = 1;
  p.absorb_r = false;
  p.absorb_z = false;
  Simulation sim(g, p);

  std::vector<double> eps_nodes(nz + 1);
  for (int j = 0; j <= nz; ++j) eps_nodes[j] = eps(j);
  planar::Line line(nz, g.dz, sim.dt(), eps_nodes);
  line.e = gaussian_profile(nz, 60.0, 15.0);

  auto& er = sim.field(Component::er);
  auto& ephi = sim.field(Component::ephi);
  for (int j = 0; j <= nz; ++j) {
    for (int i = 0; i < nr; ++i) er(i, j) = line.e[j];
    for (int i = 0; i <= nr; ++i) ephi(i, j) = I * line.e[j];
  }

  for (int k = 0; k < 600; ++k) {
    line.step();
    sim.step();
    for (int j = 0; j <= nz; ++j) ephi(nr, j) = I * line.e[j];
  }

  const auto& hr = sim.field(Component::hr);
  const auto& hphi = sim.field(Component::hphi);
  double de = 0.0, dh = 0.0, he = 0.0;
  for (int j = 0; j <= nz; ++j) {
    he = std::max(he, std::abs(line.e[j]));
    for (int i = 0; i < nr; ++i) {
      de = std::max(de, std::abs(er(i, j) - line.e[j]));
      de = std::max(de, std::abs(ephi(i, j) - I * line.e[j]));
    }
  }
  double hh = 0.0;
  for (int j = 0; j < nz; ++j) {
    hh = std::max(hh, std::abs(line.h[j]));
    for (int i = 0; i < nr; ++i)
      dh = std::max(dh, std::abs(hphi(i, j) - line.h[j]));
    for (int i = 0; i < nr; ++i)
      dh = std::max(dh, std::abs(hr(i, j) + I * line.h[j]));
  }
  REQUIRE(he > 0.1);  // the pulse is still in the box
  CHECK(de <= 1e-10 * he);
  CHECK(dh <= 1e-10 * hh);
  CHECK(max_abs(sim.field(Component::ez)) <= 1e-12 * he);
  CHECK(max_abs(sim.field(Component::hz)) <= 1e-12 * he);
}

// The coaxial TEM wave scales a planar line by 1/r, which the radial update
// preserves identically.  The inner conductor is imposed by clearing the
// tangential field on its surface after each step.
TEST_CASE("axisymmetric coaxial wave tracks the planar line to a part in a million") {
  const int nr = 40, nz = 300, i0 = 8;
  MaterialGrid g = testgrid::uniform(nr, nz, 1.0);

  SimParams p;
  p.m = 0;
  p.absorb_r = false;
  p.absorb_z = false;
  Simulation sim(g, p);

  planar::Line line(nz, g.dz, sim.dt(), std::vector<double>(nz + 1, 1.0));
  line.e = gaussian_profile(nz, 150.0, 15.0);

  auto r_half = [&](int i) { return (i + 0.5) * g.dr; };
  auto& er = sim.field(Component::er);
  for (int j = 0; j <= nz; ++j)
    for (int i = i0; i < nr; ++i) er(i, j) = line.e[j] * r_half(i0) / r_half(i);

  auto& ez = sim.field(Component::ez);
  for (int k = 0; k < 1000; ++k) {
    line.step();
    sim.step();
    for (int j = 0; j < nz; ++j) ez(i0, j) = 0.0;
  }

  const auto& hphi = sim.field(Component::hphi);
  double de = 0.0, dh = 0.0, he = 0.0, hh = 0.0;
  for (int j = 0; j <= nz; ++j) he = std::max(he, std::abs(line.e[j]));
  for (int j = 0; j < nz; ++j) hh = std::max(hh, std::abs(line.h[j]));
  for (int i = i0; i < nr; ++i) {
    const double s = r_half(i) / r_half(i0);
    for (int j = 0; j <= nz; ++j)
      de = std::max(de, std::abs(er(i, j) * s - line.e[j]));
    for (int j = 0; j < nz; ++j)
      dh = std::max(dh, std::abs(hphi(i, j) * s - line.h[j]));
  }
  REQUIRE(he > 0.5);
  CHECK(de <= 1e-6 * he);
  CHECK(dh <= 1e-6 * hh);
}

TEST_CASE("Bloch wrap matches an anti-periodic line exactly") {
  const int nr = 16, nz = 200;
  MaterialGrid g = testgrid::uniform(nr, nz, 1.0);

  SimParams p;
  p.m = 1;
  p.absorb_r = false;
  p.absorb_z = false;
  p.bloch = true;
  p.bloch_k = pi / (nz * g.dz);  // zone edge: phase -1 across the span
  Simulation sim(g, p);
  REQUIRE(sim.nzn() == nz);

  // Anti-periodic slab line: index wrap flips the sign.
  std::vector<double> e(nz, 0.0), h(nz, 0.0);
  for (int j = 0; j < nz; ++j) {
    const double u = (j - 100.0) / 12.0;
    e[j] = std::exp(-0.5 * u * u);
  }

  auto& er = sim.field(Component::er);
  auto& ephi = sim.field(Component::ephi);
  for (int j = 0; j < nz; ++j) {
    for (int i = 0; i < nr; ++i) er(i, j) = e[j];
    for (int i = 0; i <= nr; ++i) ephi(i, j) = I * e[j];
  }

  const double ch = sim.dt() / (mu0 * g.dz);
  const double ce = sim.dt() / (eps0 * g.dz);
  for (int k = 0; k < 400; ++k) {
    for (int j = 0; j < nz; ++j) {
      const double up = j + 1 < nz ? e[j + 1] : -e[0];
      h[j] -= ch * (up - e[j]);
    }
    for (int j = 0; j < nz; ++j) {
      const double dn = j > 0 ? h[j - 1] : -h[nz - 1];
      e[j] -= ce * (h[j] - dn);
    }
    sim.step();
    for (int j = 0; j < nz; ++j) ephi(nr, j) = I * e[j];
  }

  double de = 0.0, he = 0.0;
  for (int j = 0; j < nz; ++j) {
    he = std::max(he, std::abs(e[j]));
    for (int i = 0; i < nr; ++i) de = std::max(de, std::abs(er(i, j) - e[j]));
  }
  REQUIRE(he > 0.2);
  CHECK(de <= 1e-9 * he);
}

TEST_CASE("runs are deterministic and concatenate exactly") {
  MaterialGrid g = testgrid::uniform(30, 60, 1.0);
  SimParams p;
  p.m = 1;
  p.absorb_r = false;
  p.absorb_z = false;

  SourceSpec s;
  s.component = Component::er;
  s.i = 3;
  s.j = 30;
  s.f_center = 2.5e14;
  s.sigma_f = 3e13;

  auto make = [&]() {
    auto sim = std::make_unique<Simulation>(g, p);
    sim->add_source(s);
    sim->add_probe(Component::er, 7, 41, 1);
    return sim;
  };

  auto a = make();
  a->run(500);
  auto b = make();
  b->run(200);
  b->run(300);
  auto c = make();
  c->run(500);

  REQUIRE(a->probe(0).size() == 500);
  CHECK(a->probe(0) == b->probe(0));
  CHECK(a->probe(0) == c->probe(0));
}

TEST_CASE("point response is reciprocal for the axisymmetric order") {
  MaterialGrid g = testgrid::uniform(40, 80, 1.0);
  SimParams p;
  p.m = 0;
  p.absorb_r = false;
  p.absorb_z = false;

  auto respond = [&](int ia, int ja, int ib, int jb) {
    Simulation sim(g, p);
    SourceSpec s;
    s.component = Component::er;
    s.i = ia;
    s.j = ja;
    s.f_center = 2.5e14;
    s.sigma_f = 4e13;
    sim.add_source(s);
    sim.add_probe(Component::er, ib, jb, 1);
    sim.run(600);
    return sim.probe(0);
  };

  // Same radius and component at both ends, so the cell weights agree and
  // the transfer must be symmetric.
  auto ab = respond(6, 25, 6, 55);
  auto ba = respond(6, 55, 6, 25);
  double d = 0.0, m = 0.0;
  for (std::size_t k = 0; k < ab.size(); ++k) {
    d = std::max(d, std::abs(ab[k] - ba[k]));
    m = std::max(m, std::abs(ab[k]));
  }
  REQUIRE(m > 0.0);
  CHECK(d <= 1e-10 * m);
}

TEST_CASE("probe spectrum of the rotating drive peaks at minus the carrier") {
  MaterialGrid g = testgrid::uniform(30, 80, 1.0);
  SimParams p;
  p.m = 1;
  p.absorb_r = false;
  p.absorb_z = false;
  Simulation sim(g, p);

  SourceSpec s;
  s.component = Component::er;
  s.i = 4;
  s.j = 40;
  s.f_center = 2e14;
  s.sigma_f = 2e13;
  sim.add_source(s);
  const int probe_id = sim.add_probe(Component::er, 8, 47, 2);

  long nsteps = static_cast<long>(s.t_off() / sim.dt()) + 4000;
  sim.run(nsteps);

  auto peaks = spectrum(sim.probe(probe_id), sim.probe_dt(probe_id));
  REQUIRE(!peaks.empty());
  CHECK(peaks[0].f_signed < 0.0);
  CHECK(peaks[0].freq == Approx(2e14).margin(2.0 * s.sigma_f));
}

TEST_CASE("metal walls pin the tangential electric field") {
  MaterialGrid g = testgrid::uniform(20, 40, 1.0);
  SimParams p;
  p.m = 1;
  p.absorb_r = false;
  p.absorb_z = false;
  Simulation sim(g, p);

  SourceSpec s;
  s.component = Component::ephi;
  s.i = 5;
  s.j = 20;
  s.f_center = 3e14;
  s.sigma_f = 5e13;
  sim.add_source(s);
  sim.run(3000);

  const auto& er = sim.field(Component::er);
  const auto& ephi = sim.field(Component::ephi);
  const auto& ez = sim.field(Component::ez);
  for (int j = 0; j <= 40; ++j) CHECK(ephi(20, j) == cdouble{0.0, 0.0});
  for (int j = 0; j < 40; ++j) CHECK(ez(20, j) == cdouble{0.0, 0.0});
  for (int i = 0; i < 20; ++i) {
    CHECK(er(i, 0) == cdouble{0.0, 0.0});
    CHECK(er(i, 40) == cdouble{0.0, 0.0});
    CHECK(ephi(i, 0) == cdouble{0.0, 0.0});
    CHECK(ephi(i, 40) == cdouble{0.0, 0.0});
  }
  // And the interior is not trivially zero.
  CHECK(max_abs(er) > 0.0);
}

TEST_CASE("exceeding the stability limit raises an instability error") {
  MaterialGrid g = testgrid::uniform(24, 24, 1.0);
  SimParams p;
  p.m = 1;
  p.courant = 1.5;
  p.absorb_r = false;
  p.absorb_z = false;
  p.check_every = 64;
  Simulation sim(g, p);
  sim.field(Component::er)(5, 5) = 1.0;
  REQUIRE_THROWS_AS(sim.run(20000), InstabilityError);
}

TEST_CASE("sources and monitors validate their placement") {
  MaterialGrid g = testgrid::uniform(20, 40, 1.0, 5e-9, 5);
  SimParams p;
  p.m = 1;
  Simulation sim(g, p);

  SourceSpec s;
  s.i = 25;
  s.j = 10;
  s.f_center = 2e14;
  s.sigma_f = 2e13;
  CHECK_THROWS_AS(sim.add_source(s), PlacementError);
  s.i = 5;
  s.sigma_f = 0.0;
  CHECK_THROWS_AS(sim.add_source(s), ValidationError);

  CHECK_THROWS_AS(sim.add_probe(Component::ez, 21, 10, 1), PlacementError);
  // Walls inside the absorber or outside the grid are rejected.
  CHECK_THROWS_AS(sim.add_flux_box(18, 10, 30, 8), PlacementError);
  CHECK_THROWS_AS(sim.add_flux_box(10, 2, 30, 8), PlacementError);
  CHECK_THROWS_AS(sim.add_flux_box(10, 30, 10, 8), PlacementError);
  CHECK(sim.add_flux_box(10, 10, 30, 8) == 0);
}
