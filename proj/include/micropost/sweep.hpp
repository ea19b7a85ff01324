#ifndef MICROPOST_SWEEP_HPP
#define MICROPOST_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "micropost/json_io.hpp"
#include "micropost/pipeline.hpp"

namespace micropost {

// Parameters a sweep may vary, in the one canonical order every enumeration,
// hash and CSV column list uses.  Lengths are nm-suffixed both in configs and
// in result tables.
inline const std::vector<std::string>& sweepable_params() {
  static const std::vector<std::string> names = {
      "diameter_nm", "spacer_nm",  "period_nm", "low_thickness_nm",
      "n_high",      "n_low",      "pairs_top", "pairs_bottom"};
  return names;
}

struct SweepAxis {
  std::string param;
  std::vector<double> values;
};

struct SweepPlan {
  StructureSpec base;
  ResonanceOptions sim;
  std::vector<SweepAxis> axes;  // held in canonical parameter order
  int workers = 1;
};

inline void apply_param(StructureSpec& s, const std::string& name, double v) {
  if (name == "diameter_nm")
    s.diameter = nm_to_m(v, name);
  else if (name == "spacer_nm")
    s.spacer = nm_to_m(v, name);
  else if (name == "period_nm")
    s.period = nm_to_m(v, name);
  else if (name == "low_thickness_nm")
    s.low_thickness = nm_to_m(v, name);
  else if (name == "n_high")
    s.n_high = v;
  else if (name == "n_low")
    s.n_low = v;
  else if (name == "pairs_top")
    s.pairs_top = detail::as_count(v, name);
  else if (name == "pairs_bottom")
    s.pairs_bottom = detail::as_count(v, name);
  else
    throw ValidationError("sweep: \"" + name + "\" is not a sweepable parameter");
}

// One grid point: the swept values in canonical order plus the spec they
// resolve to.
struct SweepPoint {
  std::vector<std::pair<std::string, double>> params;
  StructureSpec spec;
};

inline std::vector<SweepPoint> plan_rows(const SweepPlan& plan) {
  std::vector<SweepPoint> rows;
  std::vector<std::size_t> idx(plan.axes.size(), 0);
  while (true) {
    SweepPoint pt;
    pt.spec = plan.base;
    for (std::size_t a = 0; a < plan.axes.size(); ++a) {
      const double v = plan.axes[a].values[idx[a]];
      pt.params.emplace_back(plan.axes[a].param, v);
      apply_param(pt.spec, plan.axes[a].param, v);
    }
    require_valid(pt.spec);  // a bad corner fails before anything runs
    rows.push_back(std::move(pt));
    // Odometer, last axis fastest.
    std::size_t a = plan.axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < plan.axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return rows;
    }
    if (plan.axes.empty()) return rows;
  }
}

// Stable identity of one run: every resolved structure parameter plus the
// numerical knobs that shape the answer, FNV-1a folded to 16 hex digits.
inline std::string param_hash(const StructureSpec& s,
                              const ResonanceOptions& o) {
  std::string text;
  auto put = [&](const char* k, double v) {
    text += k;
    text += '=';
    text += fmt_g17(v);
    text += ';';
  };
  put("diameter_nm", s.diameter * 1e9);
  put("period_nm", s.period * 1e9);
  put("low_thickness_nm", s.low_thickness * 1e9);
  put("spacer_nm", s.spacer * 1e9);
  put("n_high", s.n_high);
  put("n_low", s.n_low);
  put("n_ambient", s.n_ambient);
  put("pairs_top", s.pairs_top);
  put("pairs_bottom", s.pairs_bottom);
  put("substrate", s.substrate ? 1.0 : 0.0);
  put("dr_nm", o.grid.dr * 1e9);
  put("dz_nm", o.grid.dz * 1e9);
  put("pad_r_nm", o.grid.pad_r * 1e9);
  put("pad_z_nm", o.grid.pad_z * 1e9);
  put("absorber_cells", o.grid.absorber_cells);
  put("courant", o.courant);
  put("f_center_hz", o.f_center);
  put("sigma_f_hz", o.sigma_f);
  put("window_lo", o.window_lo);
  put("window_hi", o.window_hi);
  put("settle_cycles", o.settle_cycles);
  put("locate_cycles", o.locate_cycles);
  put("measure_cycles", o.measure_cycles);
  put("partition_margin_cells", o.partition_margin_cells);

  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

struct ResultRow {
  std::vector<std::pair<std::string, double>> params;
  std::string hash;
  std::string status;  // ok | no-resonance | unstable
  ResonanceResult res;
  BandEdges gap;  // planar mirror gap for the row's materials
};

inline std::string csv_header(const SweepPlan& plan) {
  std::string h;
  for (const auto& ax : plan.axes) h += ax.param + ",";
  h +=
      "lambda_nm,q,q_a,q_b,v_norm,q_over_v,"
      "gap_lambda_low_nm,gap_lambda_high_nm,status";
  return h;
}

inline std::string csv_line(const ResultRow& r) {
  std::string line;
  for (const auto& [_, v] : r.params) line += fmt_g17(v) + ",";
  if (r.status == "ok") {
    line += fmt_g17(r.res.lambda * 1e9) + ",";
    line += fmt_g17(r.res.q) + ",";
    line += fmt_g17(r.res.q_a) + ",";
    line += fmt_g17(r.res.q_b) + ",";
    line += fmt_g17(r.res.v_norm) + ",";
    line += fmt_g17(r.res.v_norm > 0.0 ? r.res.q / r.res.v_norm : 0.0) + ",";
  } else {
    line += ",,,,,,";
  }
  line += fmt_g17(r.gap.lambda_low() * 1e9) + ",";
  line += fmt_g17(r.gap.lambda_high() * 1e9) + ",";
  line += r.status;
  return line;
}

inline ojson row_to_json(const ResultRow& r) {
  ojson o;
  o["hash"] = r.hash;
  ojson p;
  for (const auto& [k, v] : r.params) p[k] = v;
  o["params"] = p;
  o["status"] = r.status;
  o["result"] = r.status == "ok" ? to_json(r.res) : ojson(nullptr);
  o["gap"] = to_json(r.gap);
  return o;
}

using RunnerFn =
    std::function<ResonanceResult(const StructureSpec&, const ResonanceOptions&)>;
using RowCallback =
    std::function<void(const ResultRow&, std::size_t done, std::size_t total)>;

struct SweepOutcome {
  std::vector<ResultRow> rows;
  std::size_t reused = 0;  // rows taken from a previous invocation
  std::size_t failed = 0;  // rows whose status is not ok
};

namespace detail {

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string timestamp_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Reload a finished row; empty status means there is nothing usable.
inline ResultRow load_row(const std::filesystem::path& file,
                          const SweepPoint& pt, const std::string& hash) {
  ResultRow row;
  row.params = pt.params;
  row.hash = hash;
  std::ifstream in(file);
  if (!in.good()) return row;
  json j;
  try {
    in >> j;
    if (j.value("hash", "") != hash) return row;
    const std::string st = j.value("status", "");
    if (st != "ok" && st != "no-resonance" && st != "unstable") return row;
    if (st == "ok") {
      const json& r = j.at("result");
      row.res.f = r.at("f_hz").get<double>();
      row.res.lambda = r.at("lambda_nm").get<double>() * 1e-9;
      row.res.q = r.at("q").get<double>();
      row.res.q_a = r.at("q_a").get<double>();
      row.res.q_b = r.at("q_b").get<double>();
      row.res.v_m3 = r.at("v_m3").get<double>();
      row.res.v_norm = r.at("v_norm").get<double>();
    }
    row.status = st;
  } catch (const json::exception&) {
    row.status.clear();
  }
  return row;
}

}  // namespace detail

// Execute every grid point, spreading independent runs over worker threads.
// Appends to results.csv as rows finish, keeps a per-run record under
// runs/<hash>/ for resume, and finishes with a canonical rewrite of the CSV
// in enumeration order so the bytes never depend on scheduling.
inline SweepOutcome run_sweep(const SweepPlan& plan, const std::string& out_dir,
                              bool resume = false, RunnerFn runner = {},
                              RowCallback on_row = {}) {
  namespace fs = std::filesystem;
  if (!runner)
    runner = [](const StructureSpec& s, const ResonanceOptions& o) {
      return run_resonance(s, o).result;
    };

  const auto points = plan_rows(plan);
  const fs::path root(out_dir);
  fs::create_directories(root / "runs");

  SweepOutcome out;
  out.rows.resize(points.size());
  std::vector<char> todo(points.size(), 1);

  for (std::size_t k = 0; k < points.size(); ++k) {
    const std::string hash = param_hash(points[k].spec, plan.sim);
    if (resume) {
      ResultRow prev = detail::load_row(root / "runs" / hash / "result.json",
                                        points[k], hash);
      if (!prev.status.empty()) {
        prev.gap = planar_gap_edges(points[k].spec.n_high, points[k].spec.n_low,
                                    points[k].spec.low_thickness,
                                    points[k].spec.period);
        out.rows[k] = std::move(prev);
        todo[k] = 0;
        ++out.reused;
        continue;
      }
    }
    out.rows[k].params = points[k].params;
    out.rows[k].hash = hash;
  }

  const fs::path csv_path = root / "results.csv";
  std::ofstream live(csv_path, std::ios::binary | std::ios::trunc);
  live << csv_header(plan) << "\n";
  for (std::size_t k = 0; k < points.size(); ++k)
    if (!todo[k]) live << csv_line(out.rows[k]) << "\n";
  live.flush();

  ojson manifest;
  manifest["created_at"] = detail::timestamp_utc();
  manifest["total"] = points.size();
  manifest["rows"] = ojson::object();
  for (std::size_t k = 0; k < points.size(); ++k)
    if (!todo[k]) manifest["rows"][out.rows[k].hash] = out.rows[k].status;

  std::mutex writer;
  std::size_t done = out.reused;
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= points.size()) return;
      if (!todo[k]) continue;
      ResultRow& row = out.rows[k];
      const SweepPoint& pt = points[k];
      row.gap = planar_gap_edges(pt.spec.n_high, pt.spec.n_low,
                                 pt.spec.low_thickness, pt.spec.period);
      try {
        row.res = runner(pt.spec, plan.sim);
        row.status = "ok";
      } catch (const AnalysisError&) {
        row.status = "no-resonance";
      } catch (const InstabilityError&) {
        row.status = "unstable";
      }
      const fs::path dir = root / "runs" / row.hash;
      fs::create_directories(dir);
      detail::write_file_atomic(dir / "result.json",
                                row_to_json(row).dump(2) + "\n");
      std::lock_guard<std::mutex> lock(writer);
      live << csv_line(row) << "\n";
      live.flush();
      manifest["rows"][row.hash] = row.status;
      manifest["updated_at"] = detail::timestamp_utc();
      detail::write_file_atomic(root / "manifest.json",
                                manifest.dump(2) + "\n");
      ++done;
      if (on_row) on_row(row, done, points.size());
    }
  };

  const int n_workers = std::max(
      1, std::min(plan.workers,
                  static_cast<int>(std::max<std::size_t>(points.size(), 1))));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  live.close();

  // Canonical rewrite: enumeration order, fixed formatting.
  std::string canon = csv_header(plan) + "\n";
  for (const auto& row : out.rows) canon += csv_line(row) + "\n";
  detail::write_file_atomic(csv_path, canon);

  manifest["finished_at"] = detail::timestamp_utc();
  detail::write_file_atomic(root / "manifest.json", manifest.dump(2) + "\n");

  for (const auto& row : out.rows)
    if (row.status != "ok") ++out.failed;
  return out;
}

// Parse a sweep document: base structure, axes over sweepable parameters,
// optional numerical overrides and a worker count.
inline SweepPlan parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: not valid JSON: ") + e.what());
  }
  static const char* keys[] = {"base", "axes", "sim", "workers"};
  if (!j.is_object()) throw ValidationError("config: document must be an object");
  reject_unknown_keys(j, keys, std::size(keys), "sweep config");
  if (!j.contains("base"))
    throw ValidationError("config: missing \"base\" structure");

  SweepPlan plan;
  plan.base = structure_from_json(j.at("base"));
  plan.sim = resonance_options_from_json(j.contains("sim") ? j.at("sim")
                                                           : json(nullptr));
  if (j.contains("workers")) {
    plan.workers = detail::as_count(
        detail::need_num(j, "workers", "sweep config"), "workers");
    if (plan.workers < 1)
      throw ValidationError("config: workers must be at least 1");
  }

  if (j.contains("axes")) {
    const json& ax = j.at("axes");
    if (!ax.is_object())
      throw ValidationError("config: axes block must be an object");
    for (auto it = ax.begin(); it != ax.end(); ++it) {
      bool known = false;
      for (const auto& name : sweepable_params()) known |= name == it.key();
      if (!known)
        throw ValidationError("sweep: \"" + it.key() +
                              "\" is not a sweepable parameter");
      if (!it.value().is_array() || it.value().empty())
        throw ValidationError("config: axis \"" + it.key() +
                              "\" must be a non-empty array");
      SweepAxis axis;
      axis.param = it.key();
      for (const auto& v : it.value()) {
        if (!v.is_number())
          throw ValidationError("config: axis \"" + it.key() +
                                "\" has a non-numeric value");
        axis.values.push_back(v.get<double>());
      }
      plan.axes.push_back(std::move(axis));
    }
    // Canonical order, independent of how the document listed them.
    std::sort(plan.axes.begin(), plan.axes.end(),
              [](const SweepAxis& a, const SweepAxis& b) {
                const auto& names = sweepable_params();
                const auto ia = std::find(names.begin(), names.end(), a.param);
                const auto ib = std::find(names.begin(), names.end(), b.param);
                return ia < ib;
              });
  }
  plan_rows(plan);  // validate every corner up front
  return plan;
}

// One CSV per (diameter, observable) curve, named <figure>_<obs>_D<nm>.csv,
// plus a manifest listing the files.  Only rows with status ok contribute.
inline std::vector<std::string> emit_plot_data(
    const std::vector<ResultRow>& rows, const std::string& figure,
    const std::string& out_dir) {
  namespace fs = std::filesystem;
  const bool qsrad = figure == "qsrad";
  const bool vsrad2 = figure == "vsrad2";
  const bool lamd = figure == "lamd";
  if (!qsrad && !vsrad2 && !lamd)
    throw ValidationError("emit_plot_data: unknown figure \"" + figure +
                          "\"; known: qsrad, vsrad2, lamd");

  auto param_of = [](const ResultRow& r, const std::string& name,
                     double& v) -> bool {
    for (const auto& [k, val] : r.params)
      if (k == name) {
        v = val;
        return true;
      }
    return false;
  };
  auto need_column = [&](const std::string& name) {
    for (const auto& r : rows) {
      double v;
      if (!param_of(r, name, v))
        throw ValidationError("emit_plot_data: missing column \"" + name +
                              "\"");
    }
  };

  fs::create_directories(out_dir);
  std::vector<std::string> files;
  auto write_csv = [&](const std::string& name, const std::string& header,
                       const std::vector<std::string>& lines) {
    std::string text = header + "\n";
    for (const auto& l : lines) text += l + "\n";
    detail::write_file_atomic(fs::path(out_dir) / name, text);
    files.push_back(name);
  };

  if (qsrad || vsrad2) {
    need_column("diameter_nm");
    need_column("spacer_nm");
    // Group by diameter, first-seen order.
    std::vector<double> ds;
    for (const auto& r : rows) {
      double d;
      param_of(r, "diameter_nm", d);
      if (std::find(ds.begin(), ds.end(), d) == ds.end()) ds.push_back(d);
    }
    struct Curve {
      const char* obs;
      std::function<double(const ResultRow&)> value;
    };
    std::vector<Curve> curves;
    if (qsrad) {
      curves.push_back({"lambda", [](const ResultRow& r) {
                          return r.res.lambda * 1e9;
                        }});
      curves.push_back({"q", [](const ResultRow& r) { return r.res.q; }});
    } else {
      curves.push_back(
          {"v", [](const ResultRow& r) { return r.res.v_norm; }});
      curves.push_back({"qv", [](const ResultRow& r) {
                          return r.res.q / r.res.v_norm;
                        }});
    }
    for (const double d : ds) {
      for (const auto& c : curves) {
        std::vector<std::string> lines;
        for (const auto& r : rows) {
          double rd, s;
          param_of(r, "diameter_nm", rd);
          param_of(r, "spacer_nm", s);
          if (rd == d && r.status == "ok")
            lines.push_back(fmt_g17(s) + "," + fmt_g17(c.value(r)));
        }
        const std::string obs_header =
            std::string("spacer_nm,") +
            (std::string(c.obs) == "lambda"  ? "lambda_nm"
             : std::string(c.obs) == "q"     ? "q"
             : std::string(c.obs) == "v"     ? "v_norm"
                                             : "q_over_v");
        write_csv(figure + "_" + c.obs + "_D" + fmt_g17(d) + ".csv",
                  obs_header, lines);
      }
    }
  } else {  // lamd: wavelength against diameter, with the mirror gap edges
    need_column("diameter_nm");
    std::vector<std::string> lines;
    for (const auto& r : rows) {
      double d;
      param_of(r, "diameter_nm", d);
      if (r.status == "ok")
        lines.push_back(fmt_g17(d) + "," + fmt_g17(r.res.lambda * 1e9) + "," +
                        fmt_g17(r.gap.lambda_low() * 1e9) + "," +
                        fmt_g17(r.gap.lambda_high() * 1e9));
    }
    write_csv("lamd_lambda.csv",
              "diameter_nm,lambda_nm,gap_lambda_low_nm,gap_lambda_high_nm",
              lines);
  }

  ojson man;
  man["figure"] = figure;
  man["files"] = files;
  detail::write_file_atomic(fs::path(out_dir) / ("plots_" + figure + ".json"),
                            man.dump(2) + "\n");
  return files;
}

}  // namespace micropost

#endif
