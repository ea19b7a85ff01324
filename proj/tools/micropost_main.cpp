#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "micropost/cqed.hpp"
#include "micropost/json_io.hpp"
#include "micropost/sweep.hpp"

namespace fs = std::filesystem;
using namespace micropost;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good())
    throw ValidationError("cannot read config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path + ": not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  detail::write_file_atomic(path, text);
}

// Complex field magnitudes as one CSV row per radial index.
std::string snapshot_csv(const Array2D<cdouble>& a) {
  std::string text;
  for (int i = 0; i < a.n0(); ++i) {
    for (int j = 0; j < a.n1(); ++j) {
      if (j) text += ',';
      text += fmt_g17(std::abs(a(i, j)));
    }
    text += '\n';
  }
  return text;
}

struct SingleRunConfig {
  StructureSpec spec;
  ResonanceOptions opt;
};

SingleRunConfig load_single_run(const std::string& path) {
  const json j = parse_json_file(path);
  static const char* keys[] = {"structure", "sim"};
  if (!j.is_object())
    throw ValidationError("config: document must be an object");
  reject_unknown_keys(j, keys, std::size(keys), "config");
  if (!j.contains("structure"))
    throw ValidationError("config: missing \"structure\" block");
  SingleRunConfig c;
  c.spec = structure_from_json(j.at("structure"));
  c.opt = resonance_options_from_json(j.contains("sim") ? j.at("sim")
                                                        : json(nullptr));
  return c;
}

int cmd_simulate(const std::string& config, const std::string& out) {
  const auto c = load_single_run(config);
  const auto run = run_resonance(c.spec, c.opt);
  ojson o = to_json(run.result);
  o["gap"] = to_json(run.planar);
  o["steps"] = run.steps;
  std::printf("%s\n", o.dump(2).c_str());
  if (!out.empty()) {
    write_text(fs::path(out) / "result.json", o.dump(2) + "\n");
    write_text(fs::path(out) / "snapshot_er.csv", snapshot_csv(run.snapshot.er));
    write_text(fs::path(out) / "snapshot_ephi.csv",
               snapshot_csv(run.snapshot.ephi));
    write_text(fs::path(out) / "snapshot_ez.csv", snapshot_csv(run.snapshot.ez));
  }
  return 0;
}

int cmd_farfield(const std::string& config, const std::string& out) {
  const auto c = load_single_run(config);
  const auto run = run_resonance(c.spec, c.opt);
  const auto pat = far_field(run);
  ojson o;
  o["lambda_nm"] = run.result.lambda * 1e9;
  o["q"] = run.result.q;
  o["fwhm_deg"] = fwhm(pat);
  o["power"] = pat.power;
  o["pixels_per_radius"] = pat.pixels_per_radius;
  std::printf("%s\n", o.dump(2).c_str());
  if (!out.empty()) {
    write_text(fs::path(out) / "farfield.json", o.dump(2) + "\n");
    std::string csv = "theta_deg,intensity\n";
    for (std::size_t k = 0; k < pat.theta_deg.size(); ++k)
      csv += fmt_g17(pat.theta_deg[k]) + "," + fmt_g17(pat.intensity[k]) + "\n";
    write_text(fs::path(out) / "pattern.csv", csv);
  }
  return 0;
}

int cmd_bandgap(const std::string& config, const std::string& out) {
  const json j = parse_json_file(config);
  static const char* keys[] = {"n_high", "n_low", "period_nm",
                               "low_thickness_nm", "diameters_nm"};
  if (!j.is_object())
    throw ValidationError("config: document must be an object");
  reject_unknown_keys(j, keys, std::size(keys), "bandgap config");
  const double nh = detail::need_num(j, "n_high", "bandgap config");
  const double nl = detail::need_num(j, "n_low", "bandgap config");
  const double a =
      nm_to_m(detail::need_num(j, "period_nm", "bandgap config"), "period_nm");
  const double t = nm_to_m(
      detail::need_num(j, "low_thickness_nm", "bandgap config"),
      "low_thickness_nm");

  std::string csv =
      "D_um,lambda_low_nm,lambda_high_nm,a_over_lambda_low,"
      "a_over_lambda_high,method\n";
  auto add = [&](const BandEdges& g, double d_um) {
    csv += (std::isfinite(d_um) ? fmt_g17(d_um) : std::string("inf")) + ",";
    csv += fmt_g17(g.lambda_low() * 1e9) + ",";
    csv += fmt_g17(g.lambda_high() * 1e9) + ",";
    csv += fmt_g17(g.a_over_lambda_low()) + ",";
    csv += fmt_g17(g.a_over_lambda_high()) + ",";
    csv += g.method + "\n";
  };

  const auto planar = planar_gap_edges(nh, nl, t, a);
  add(planar, std::numeric_limits<double>::infinity());
  if (j.contains("diameters_nm")) {
    const json& ds = j.at("diameters_nm");
    if (!ds.is_array())
      throw ValidationError("config: diameters_nm must be an array");
    for (const auto& v : ds) {
      if (!v.is_number())
        throw ValidationError("config: diameters_nm has a non-numeric value");
      const double d = nm_to_m(v.get<double>(), "diameters_nm");
      const auto g = bloch_band_edges(nh, nl, t, a, d);
      add(g, d * 1e6);
    }
  }
  std::fputs(csv.c_str(), stdout);
  if (!out.empty()) write_text(fs::path(out) / "bandgap.csv", csv);
  return 0;
}

int cmd_cqed(double q, double v_norm, double lambda_nm, double gamma0_ghz,
             double gammah_ghz, double n_high, const std::string& out) {
  EmitterSpec e;
  e.gamma0 = gamma0_ghz * 1e9;
  e.gamma_h = gammah_ghz * 1e9;
  e.n_h = n_high;
  const double lambda = lambda_nm * 1e-9;
  const double lv = lambda / n_high;
  const auto rep = cqed_report(q, v_norm * lv * lv * lv, lambda, e);
  const ojson o = to_json(rep);
  std::printf("%s\n", o.dump(2).c_str());
  if (!out.empty()) write_text(fs::path(out) / "cqed.json", o.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& out, bool dry_run,
              int workers_flag, bool resume, const std::string& emit) {
  SweepPlan plan = parse_config(read_file(config));
  if (workers_flag > 0) {
    plan.workers = workers_flag;
  } else if (const char* env = std::getenv("MICROPOST_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) plan.workers = w;
  }

  const auto points = plan_rows(plan);
  std::printf("sweep: %zu runs over %zu axes, %d workers\n", points.size(),
              plan.axes.size(), plan.workers);
  if (dry_run) {
    for (const auto& pt : points) {
      std::string line = param_hash(pt.spec, plan.sim);
      for (const auto& [k, v] : pt.params)
        line += "  " + k + "=" + fmt_g17(v);
      std::printf("%s\n", line.c_str());
    }
    return 0;
  }
  if (out.empty())
    throw ValidationError("sweep: --out directory is required");

  const auto outcome = run_sweep(
      plan, out, resume, {},
      [](const ResultRow& row, std::size_t done, std::size_t total) {
        std::string line = row.hash + " " + row.status;
        if (row.status == "ok")
          line += "  lambda=" + fmt_g17(row.res.lambda * 1e9) +
                  "nm q=" + fmt_g17(row.res.q);
        std::printf("[%zu/%zu] %s\n", done, total, line.c_str());
        std::fflush(stdout);
      });
  if (outcome.reused)
    std::printf("sweep: reused %zu finished runs\n", outcome.reused);

  if (!emit.empty()) {
    const auto files = emit_plot_data(outcome.rows, emit, out);
    std::printf("sweep: wrote %zu plot files for \"%s\"\n", files.size(),
                emit.c_str());
  }
  if (outcome.failed) {
    std::fprintf(stderr, "sweep: %zu of %zu runs did not converge\n",
                 outcome.failed, outcome.rows.size());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Micropost microcavity simulation toolkit"};
  app.require_subcommand(1);

  std::string config, out;
  bool dry_run = false, resume = false;
  int workers = 0;
  std::string emit;

  auto* sim = app.add_subcommand("simulate", "One cavity: resonance, Q, V");
  sim->add_option("--config", config, "JSON config")->required();
  sim->add_option("--out", out, "output directory");

  auto* far = app.add_subcommand("farfield", "Radiation pattern of a cavity");
  far->add_option("--config", config, "JSON config")->required();
  far->add_option("--out", out, "output directory");

  auto* band = app.add_subcommand("bandgap", "Mirror stop band vs diameter");
  band->add_option("--config", config, "JSON config")->required();
  band->add_option("--out", out, "output directory");

  auto* sw = app.add_subcommand("sweep", "Parameter sweep over cavities");
  sw->add_option("--config", config, "JSON config")->required();
  sw->add_option("--out", out, "output directory");
  sw->add_flag("--dry-run", dry_run, "print the resolved plan and stop");
  sw->add_option("--workers", workers, "parallel simulations");
  sw->add_flag("--resume", resume, "skip runs already recorded under --out");
  sw->add_option("--emit", emit, "also write plot CSVs for this figure id");

  double q = 0, v_norm = 0, lambda_nm = 0, gamma0_ghz = 0, gammah_ghz = 0;
  double n_high = 3.57;
  auto* cq = app.add_subcommand("cqed", "Coupling rates for a measured cavity");
  cq->add_option("--q", q, "quality factor")->required();
  cq->add_option("--v-norm", v_norm, "mode volume in (lambda/n_high)^3")
      ->required();
  cq->add_option("--lambda-nm", lambda_nm, "wavelength, nm")->required();
  cq->add_option("--gamma0-ghz", gamma0_ghz, "emitter free-space rate, GHz")
      ->required();
  cq->add_option("--gammah-ghz", gammah_ghz, "emitter linewidth, GHz")
      ->required();
  cq->add_option("--n-high", n_high, "host index");
  cq->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(config, out);
    if (far->parsed()) return cmd_farfield(config, out);
    if (band->parsed()) return cmd_bandgap(config, out);
    if (sw->parsed())
      return cmd_sweep(config, out, dry_run, workers, resume, emit);
    if (cq->parsed())
      return cmd_cqed(q, v_norm, lambda_nm, gamma0_ghz, gammah_ghz, n_high,
                      out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
