#ifndef MICROPOST_GEOMETRY_HPP
#define MICROPOST_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "micropost/array2d.hpp"
#include "micropost/errors.hpp"

namespace micropost {

// Cylindrical micropost: distributed Bragg mirrors above and below a
// high-index spacer, everything clipped to a post of the given diameter.
// Lengths in meters.  z = 0 is the bottom of the bottom mirror.
struct StructureSpec {
  double diameter = 0.0;       // post diameter D
  double period = 0.0;         // mirror period a
  double low_thickness = 0.0;  // low-index layer thickness t (high layer is a-t)
  double spacer = 0.0;         // defect layer thickness s
  double n_high = 0.0;
  double n_low = 0.0;
  int pairs_top = 0;
  int pairs_bottom = 0;
  double n_ambient = 1.0;
  bool substrate = false;      // semi-infinite n_high half-space below z=0
};

struct Violation {
  std::string field;
  std::string message;
};

inline std::vector<Violation> validate_spec(const StructureSpec& s) {
  std::vector<Violation> v;
  if (!(s.diameter > 0.0)) v.push_back({"diameter", "post diameter must be positive"});
  if (!(s.period > 0.0)) v.push_back({"period", "mirror period must be positive"});
  if (!(s.low_thickness > 0.0 && s.low_thickness < s.period))
    v.push_back({"low_thickness", "need 0 < t < a so both mirror layers have thickness"});
  if (!(s.spacer > 0.0)) v.push_back({"spacer", "spacer thickness must be positive"});
  if (!(s.n_low >= 1.0)) v.push_back({"n_low", "refractive index below 1"});
  if (!(s.n_high > s.n_low)) v.push_back({"n_high", "need n_high > n_low"});
  if (s.pairs_top < 0) v.push_back({"pairs_top", "negative mirror pair count"});
  if (s.pairs_bottom < 0) v.push_back({"pairs_bottom", "negative mirror pair count"});
  if (!(s.n_ambient >= 1.0)) v.push_back({"n_ambient", "ambient index below 1"});
  return v;
}

inline void require_valid(const StructureSpec& s) {
  const auto v = validate_spec(s);
  if (v.empty()) return;
  std::string msg = "invalid structure:";
  for (const auto& e : v) msg += " [" + e.field + "] " + e.message + ";";
  throw ValidationError(msg);
}

inline double post_height(const StructureSpec& s) {
  return (s.pairs_bottom + s.pairs_top) * s.period + s.spacer;
}

inline double spacer_center_z(const StructureSpec& s) {
  return s.pairs_bottom * s.period + 0.5 * s.spacer;
}

// Relative permittivity of the layer stack at height z, inside the post
// radius.  Layer order from z=0 upward: [high a-t, low t] x pairs_bottom,
// spacer (high), [low t, high a-t] x pairs_top, so the spacer is a thickened
// high-index layer of the otherwise periodic crystal.
inline double layer_eps_inside(const StructureSpec& s, double z) {
  const double eh = s.n_high * s.n_high;
  const double el = s.n_low * s.n_low;
  const double zb = s.pairs_bottom * s.period;
  if (z < zb) {
    const double pos = z - std::floor(z / s.period) * s.period;
    return pos < (s.period - s.low_thickness) ? eh : el;
  }
  const double zs = zb + s.spacer;
  if (z < zs) return eh;
  const double pos = z - zs;
  const double inPair = pos - std::floor(pos / s.period) * s.period;
  return inPair < s.low_thickness ? el : eh;
}

// Point sample, any (r, z).  r >= 0.
inline double permittivity_at(const StructureSpec& s, double r, double z) {
  require_valid(s);
  if (r < 0.0) throw ValidationError("permittivity_at: negative radius");
  const double ea = s.n_ambient * s.n_ambient;
  if (z < 0.0) return s.substrate ? s.n_high * s.n_high : ea;
  if (z >= post_height(s)) return ea;
  if (r >= 0.5 * s.diameter) return ea;
  return layer_eps_inside(s, z);
}

struct GridParams {
  double dr = 5e-9;
  double dz = 5e-9;
  double pad_r = 0.3e-6;   // ambient margin between post and absorber
  double pad_z = 0.3e-6;
  int absorber_cells = 10;
};

// Staggered material grid.  nr x nz cells; node radius r_i = i*dr, node
// height z_j = z_min + j*dz.  Permittivity is sampled at the three electric
// field sites by exact volume averaging over the dual cell of each site.
struct MaterialGrid {
  int nr = 0;
  int nz = 0;
  double dr = 0.0;
  double dz = 0.0;
  double z_min = 0.0;
  int absorber_cells = 0;
  Array2D<double> eps_er;    // (nr,   nz+1) at (i+1/2, j)
  Array2D<double> eps_ephi;  // (nr+1, nz+1) at (i,     j)
  Array2D<double> eps_ez;    // (nr+1, nz)   at (i,     j+1/2)

  double r_node(int i) const { return i * dr; }
  double r_half(int i) const { return (i + 0.5) * dr; }
  double z_node(int j) const { return z_min + j * dz; }
  double z_half(int j) const { return z_min + (j + 0.5) * dz; }
  double r_max() const { return nr * dr; }
  double z_max() const { return z_min + nz * dz; }
};

namespace detail {

// Sorted z positions where the stack material changes.
inline std::vector<double> layer_boundaries(const StructureSpec& s) {
  std::vector<double> b;
  b.push_back(0.0);
  for (int k = 0; k < s.pairs_bottom; ++k) {
    b.push_back(k * s.period + (s.period - s.low_thickness));
    b.push_back((k + 1) * s.period);
  }
  const double zs = s.pairs_bottom * s.period + s.spacer;
  b.push_back(zs);
  for (int k = 0; k < s.pairs_top; ++k) {
    b.push_back(zs + k * s.period + s.low_thickness);
    b.push_back(zs + (k + 1) * s.period);
  }
  return b;
}

// Volume-averaged relative permittivity over [ra,rb] x [za,zb] (cylindrical
// shell).  Interfaces are axis-aligned, so the average splits into z slabs
// with an exact radial area fraction against the post wall.
inline double eps_volume_avg(const StructureSpec& s, const std::vector<double>& zb_list,
                             double ra, double rb, double za, double zb) {
  const double ea = s.n_ambient * s.n_ambient;
  const double eh = s.n_high * s.n_high;
  const double R = 0.5 * s.diameter;
  const double H = post_height(s);

  auto radial_mix = [&](double inside) {
    if (rb <= R) return inside;
    if (ra >= R) return ea;
    const double f = (R * R - ra * ra) / (rb * rb - ra * ra);
    return f * inside + (1.0 - f) * ea;
  };

  // Collect slab cut points inside [za, zb].
  std::vector<double> cuts{za};
  for (double zc : zb_list)
    if (zc > za && zc < zb) cuts.push_back(zc);
  if (H > za && H < zb) cuts.push_back(H);
  cuts.push_back(zb);
  std::sort(cuts.begin(), cuts.end());

  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double z1 = cuts[k], z2 = cuts[k + 1];
    if (z2 <= z1) continue;
    const double zm = 0.5 * (z1 + z2);
    double e;
    if (zm < 0.0)
      e = s.substrate ? eh : ea;
    else if (zm >= H)
      e = ea;
    else
      e = radial_mix(layer_eps_inside(s, zm));
    acc += e * (z2 - z1);
  }
  return acc / (zb - za);
}

}  // namespace detail

// Build the staggered permittivity grid for a structure.  The grid spans the
// post plus pad and absorber margins radially and on both z sides.
inline MaterialGrid rasterize(const StructureSpec& s, const GridParams& gp) {
  require_valid(s);
  if (!(gp.dr > 0.0 && gp.dz > 0.0)) throw ValidationError("rasterize: nonpositive spacing");
  if (gp.absorber_cells < 0) throw ValidationError("rasterize: negative absorber thickness");

  // Every physical layer must be resolved by at least 4 cells.
  struct Layer {
    const char* name;
    double thickness;
  };
  const Layer layers[] = {{"low-index layer (t)", s.low_thickness},
                          {"high-index layer (a-t)", s.period - s.low_thickness},
                          {"spacer (s)", s.spacer}};
  const Layer* worst = &layers[0];
  for (const auto& L : layers)
    if (L.thickness < worst->thickness) worst = &L;
  if (worst->thickness / gp.dz < 4.0 - 1e-12)
    throw ResolutionError(std::string("rasterize: ") + worst->name +
                          " spans fewer than 4 cells at this resolution");

  auto cells_for = [](double len, double d) {
    return static_cast<int>(std::ceil(len / d - 1e-9));
  };

  MaterialGrid g;
  g.dr = gp.dr;
  g.dz = gp.dz;
  g.absorber_cells = gp.absorber_cells;
  g.nr = cells_for(0.5 * s.diameter + gp.pad_r, gp.dr) + gp.absorber_cells;
  const int n_below = cells_for(gp.pad_z, gp.dz) + gp.absorber_cells;
  const int n_above = cells_for(post_height(s) + gp.pad_z, gp.dz) + gp.absorber_cells;
  g.nz = n_below + n_above;
  g.z_min = -n_below * gp.dz;

  g.eps_er = Array2D<double>(g.nr, g.nz + 1, 1.0);
  g.eps_ephi = Array2D<double>(g.nr + 1, g.nz + 1, 1.0);
  g.eps_ez = Array2D<double>(g.nr + 1, g.nz, 1.0);

  const auto zb_list = detail::layer_boundaries(s);
  const double dr = gp.dr, dz = gp.dz;

  for (int i = 0; i < g.nr; ++i)
    for (int j = 0; j <= g.nz; ++j) {
      const double zc = g.z_node(j);
      g.eps_er(i, j) = detail::eps_volume_avg(s, zb_list, i * dr, (i + 1) * dr,
                                              zc - 0.5 * dz, zc + 0.5 * dz);
    }
  for (int i = 0; i <= g.nr; ++i)
    for (int j = 0; j <= g.nz; ++j) {
      const double ra = std::max(0.0, (i - 0.5) * dr);
      const double rb = std::min(g.r_max(), (i + 0.5) * dr);
      const double zc = g.z_node(j);
      g.eps_ephi(i, j) = detail::eps_volume_avg(s, zb_list, ra, rb,
                                                zc - 0.5 * dz, zc + 0.5 * dz);
    }
  for (int i = 0; i <= g.nr; ++i)
    for (int j = 0; j < g.nz; ++j) {
      const double ra = std::max(0.0, (i - 0.5) * dr);
      const double rb = std::min(g.r_max(), (i + 0.5) * dr);
      g.eps_ez(i, j) = detail::eps_volume_avg(s, zb_list, ra, rb,
                                              g.z_node(j), g.z_node(j + 1));
    }
  return g;
}

}  // namespace micropost

#endif
