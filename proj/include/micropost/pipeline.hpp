#ifndef MICROPOST_PIPELINE_HPP
#define MICROPOST_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "micropost/analysis.hpp"
#include "micropost/bandgap.hpp"
#include "micropost/constants.hpp"
#include "micropost/errors.hpp"
#include "micropost/fdtd.hpp"
#include "micropost/geometry.hpp"
#include "micropost/signal.hpp"

namespace micropost {

struct ResonanceOptions {
  GridParams grid{10e-9, 10e-9, 0.3e-6, 0.3e-6, 10};
  double courant = 0.5;
  double f_center = 0.0;  // 0: mid-gap of the planar mirror stack
  double sigma_f = 0.0;   // 0: quarter of the planar gap width
  double window_lo = 0.70, window_hi = 1.35;  // accepted band, x f_center
  double settle_cycles = 60.0;    // drain after source turn-off
  double locate_cycles = 300.0;   // ring-down stretch that finds f0
  double measure_cycles = 700.0;  // stretch feeding the mode DFT and fluxes
  int monitor_every = 4;          // flux / energy sampling stride, steps
  int dft_every = 8;
  int partition_margin_cells = 3; // loss surfaces this far outside the post
  double min_rel_amplitude = 0.05;
  double quiet_rel = 1e-9;  // ring-down below this of the drive: no resonance
  RingdownOptions ring;
};

struct ResonanceRun {
  ResonanceResult result;
  ModeSnapshot snapshot;  // mode profile, gated DFT at the resonance
  MaterialGrid grid;
  QFit qfit;
  LossPartition partition;
  BandEdges planar;  // mirror band gap that shaped the drive
  int j_far = 0;     // snapshot row used for far-field work
  int i_src = 0, j_src = 0;
  int box_i = 0, box_j0 = 0, box_j1 = 0;  // loss partition surfaces
  long steps = 0;
};

// Excite the cavity with an in-gap pulse, let it ring, and extract every
// observable from the one run: f0 from the early ring-down spectrum, Q from
// the envelope decay, Q_a / Q_b from boxed fluxes, V from a gated DFT of the
// fields, all over the same time axis.
inline ResonanceRun run_resonance(const StructureSpec& spec,
                                  const ResonanceOptions& opt = {}) {
  require_valid(spec);
  ResonanceRun run;
  run.grid = rasterize(spec, opt.grid);
  const MaterialGrid& g = run.grid;

  run.planar = planar_gap_edges(spec.n_high, spec.n_low, spec.low_thickness,
                                spec.period);
  double f_c = opt.f_center, sig = opt.sigma_f;
  if (f_c <= 0.0) {
    if (!run.planar.has_gap)
      throw ValidationError("resonance: mirrors have no gap; set f_center");
    f_c = run.planar.f_mid();
  }
  if (sig <= 0.0) {
    if (!run.planar.has_gap)
      throw ValidationError("resonance: mirrors have no gap; set sigma_f");
    sig = 0.25 * (run.planar.f_high - run.planar.f_low);
  }

  SimParams sp;
  sp.m = 1;
  sp.courant = opt.courant;
  sp.absorber.cells = g.absorber_cells;
  Simulation sim(g, sp);
  const double dt = sim.dt();

  // Drive the in-plane field off-axis inside the spacer; it has an antinode
  // at the spacer center, so this couples to the fundamental mode.
  run.i_src = std::max(0, static_cast<int>(std::lround(
                              0.125 * spec.diameter / g.dr - 0.5)));
  run.j_src = std::clamp(static_cast<int>(std::lround(
                             (spacer_center_z(spec) - g.z_min) / g.dz)),
                         1, g.nz - 1);
  SourceSpec src;
  src.component = Component::er;
  src.i = run.i_src;
  src.j = run.j_src;
  src.f_center = f_c;
  src.sigma_f = sig;
  sim.add_source(src);

  // Analysis probes are magnetic: a soft electric source leaves a static
  // charge field that buries the ring-down line in an E record, but no H.
  const int p_hz = sim.add_probe(Component::hz, run.i_src, run.j_src, 1);
  const int p_hp = sim.add_probe(Component::hphi, run.i_src, run.j_src, 1);

  const int margin = opt.partition_margin_cells;
  run.box_i = std::min(
      static_cast<int>(std::lround(0.5 * spec.diameter / g.dr)) + margin,
      g.nr - g.absorber_cells - 2);
  run.box_j0 = std::max(
      static_cast<int>(std::lround((0.0 - g.z_min) / g.dz)) - margin, 1);
  run.box_j1 = std::min(
      static_cast<int>(std::lround((post_height(spec) - g.z_min) / g.dz)) + margin,
      g.nz - g.absorber_cells - 2);
  run.j_far = std::min(run.box_j1 + 2, g.nz - g.absorber_cells - 2);

  const long spc = static_cast<long>(std::ceil(1.0 / (f_c * dt)));
  const long n_off = static_cast<long>(std::ceil(src.t_off() / dt));
  const long n1 = n_off + static_cast<long>(std::ceil(opt.settle_cycles * spc));
  const long n2 = n1 + static_cast<long>(std::ceil(opt.locate_cycles * spc));
  const long n3 = n2 + static_cast<long>(std::ceil(opt.measure_cycles * spc));

  sim.run(n2);

  // Probe sample k was taken at step k + 1.
  auto slice = [&](int id, long a, long b) {
    const auto& s = sim.probe(id);
    return std::vector<cdouble>(s.begin() + a, s.begin() + b);
  };
  auto max_abs = [](const std::vector<cdouble>& v) {
    double m_ = 0.0;
    for (const auto& z : v) m_ = std::max(m_, std::abs(z));
    return m_;
  };

  auto ring_hz = slice(p_hz, n1, n2);
  auto ring_hp = slice(p_hp, n1, n2);
  const bool use_hz = max_abs(ring_hz) >= max_abs(ring_hp);
  const int p_use = use_hz ? p_hz : p_hp;
  const auto& ring = use_hz ? ring_hz : ring_hp;

  // A cavity line must outlive the settle stretch; leaky background decays
  // orders of magnitude faster.
  const double drive_peak = max_abs(slice(p_use, 0, n_off));
  if (max_abs(ring) < opt.quiet_rel * drive_peak)
    throw AnalysisError("resonance: nothing rings in the mirror gap");

  SpectrumOptions spo;
  spo.min_rel_amplitude = opt.min_rel_amplitude;
  auto in_window = [&](const std::vector<Peak>& pk) -> const Peak* {
    for (const auto& p : pk)
      if (p.freq >= opt.window_lo * f_c && p.freq <= opt.window_hi * f_c)
        return &p;
    return nullptr;
  };
  const auto peaks_a = spectrum(ring, dt, spo);
  const Peak* pk = in_window(peaks_a);
  if (!pk) throw AnalysisError("resonance: nothing rings in the mirror gap");
  const Peak first_pk = *pk;

  const int dft = sim.add_dft(first_pk.f_signed, (n2 + 1) * dt, n3 * dt,
                              opt.dft_every);

  std::vector<FluxSample> flux;
  std::vector<double> stored;
  long at = n2;
  while (at < n3) {
    const long step_n = std::min<long>(opt.monitor_every, n3 - at);
    sim.run(step_n);
    at += step_n;
    flux.push_back(sim.flux_now(run.box_i, run.box_j0, run.box_j1));
    // Twice the magnetic energy: equal to the mode energy once averaged over
    // cycles, and blind to the static charge the soft source left behind.
    stored.push_back(2.0 *
                     sim.magnetic_energy_in_box(run.box_i, run.box_j0, run.box_j1));
  }
  run.steps = at;

  // The line's own envelope, clear of fast transients and the numerical
  // floor, gives the decay time.
  const auto whole = slice(p_use, n1, n3);
  run.qfit = ringdown_q(whole, dt, first_pk.f_signed, opt.ring);

  // Refine f0 over the stretch where the line still dominates the record.
  double f0 = first_pk.freq;
  std::size_t n_ref = whole.size();
  if (!run.qfit.capped)
    n_ref = std::min(n_ref, static_cast<std::size_t>(
                                std::ceil(3.0 * run.qfit.tau_field / dt)));
  if (n_ref >= 4096) {
    const std::vector<cdouble> head(whole.begin(), whole.begin() + n_ref);
    const auto peaks_b = spectrum(head, dt, spo);
    if (const Peak* fine = in_window(peaks_b)) f0 = fine->freq;
  }

  // Drop flux and energy samples taken after the mode sank into the floor;
  // their ratio would be noise, not loss.
  const double u_min = *std::min_element(stored.begin(), stored.end());
  std::size_t keep = stored.size();
  while (keep > 0 && stored[keep - 1] < 30.0 * u_min) --keep;
  if (keep >= stored.size() / 4) {
    stored.resize(keep);
    flux.resize(keep);
  }

  // A snapshot is only mode-pure once the stored energy is falling freely.
  const std::size_t fifth = std::max<std::size_t>(stored.size() / 5, 1);
  double head = 0.0, tail = 0.0;
  for (std::size_t k = 0; k < fifth; ++k) head += stored[k];
  for (std::size_t k = stored.size() - fifth; k < stored.size(); ++k)
    tail += stored[k];
  if (tail > 1.05 * head)
    throw AnalysisError("resonance: energy still rising in the snapshot window");

  run.partition = loss_partition(flux, stored, f0);
  run.snapshot.m = sp.m;
  run.snapshot.f = f0;
  run.snapshot.er = sim.dft_field(dft, Component::er);
  run.snapshot.ephi = sim.dft_field(dft, Component::ephi);
  run.snapshot.ez = sim.dft_field(dft, Component::ez);
  const auto mv = mode_volume(run.snapshot, g, spec.n_high);

  run.result.f = f0;
  run.result.lambda = c0 / f0;
  run.result.q = run.qfit.q;
  run.result.q_a = run.partition.q_a;
  run.result.q_b = run.partition.q_b;
  run.result.v_m3 = mv.v_m3;
  run.result.v_norm = mv.v_norm;
  return run;
}

// Radiation pattern from the snapshot row just above the loss partition box.
inline RadiationPattern far_field(const ResonanceRun& run,
                                  const FarFieldOptions& opt = {}) {
  const int nr = run.grid.nr;
  std::vector<cdouble> er(nr), ephi(nr + 1);
  for (int i = 0; i < nr; ++i) er[i] = run.snapshot.er(i, run.j_far);
  for (int i = 0; i <= nr; ++i) ephi[i] = run.snapshot.ephi(i, run.j_far);
  return far_field(er, ephi, run.grid.dr, run.snapshot.m, run.result.f, opt);
}

}  // namespace micropost

#endif
