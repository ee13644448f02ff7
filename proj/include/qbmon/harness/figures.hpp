#pragma once

// Figure presets. Each binds the published parameters to run_experiment,
// run_sweep or run_scaling_study at desk-scale resolution and writes its files
// plus a <id>_manifest.json listing them.
//
//   fig1            spin-spin, weak and strong coupling, gamma in {0, 0.1, 0.5}, HD
//   fig2            Dicke N=6, lambda=1, kappa in {0, 0.1, 0.5, 1}, PD
//   fig3, fig4      Dicke N=6 (lambda, kappa) grid, HD and PD, max-energy readout
//   em_scaling      Dicke N in {2,3,4,6}, closed peaks plus PD and HD conditional peaks
//   em_efficiency   spin-spin max-over-time ergotropies and eta against g_C
//   em_quadratures  Dicke N=6 grid, HD at theta=0 and theta=pi/2, and their ratio

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <tuple>
#include <utility>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qbmon/harness/config.hpp"
#include "qbmon/harness/experiment.hpp"
#include "qbmon/harness/scaling.hpp"
#include "qbmon/harness/sweep.hpp"

namespace qbmon::harness {

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig1",       "fig2",          "fig3",          "fig4",
                                            "em_scaling", "em_efficiency", "em_quadratures"};
  return ids;
}

struct FigureOptions {
  std::optional<std::size_t> n_traj;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> n_samples;  // coarser grids for smoke runs
  std::filesystem::path out_dir = "results";
  std::function<void(const std::string&)> log;
};

struct FigureOutput {
  std::string id;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

namespace presets {

inline ExperimentConfig dicke_base(double lambda_bar, double kappa, std::size_t n_tls = 6) {
  ExperimentConfig c;
  DickeConfig d;
  d.lambda_bar = lambda_bar;
  d.kappa = kappa;
  d.n_tls = n_tls;
  c.model = d;
  c.t_max = 3.0;
  c.n_samples = 301;
  c.n_traj = 200;
  return c;
}

inline ExperimentConfig spin_spin(double g_b, double g_c, double gamma) {
  ExperimentConfig c;
  SpinSpinConfig s;
  s.g_battery = g_b;
  s.g_charger = g_c;
  s.gamma = gamma;
  c.model = s;
  // weak coupling transfers on a 1/g time scale
  c.t_max = g_b < 0.5 ? 40.0 : 10.0;
  c.n_samples = 401;
  c.unraveling = UnravelingKind{Homodyne{0.0}};
  c.n_traj = 1000;
  return c;
}

inline std::vector<double> fig1_gammas() { return {0.0, 0.1, 0.5}; }
inline std::vector<double> fig2_kappas() { return {0.0, 0.1, 0.5, 1.0}; }

inline ExperimentConfig fig2(double kappa) {
  ExperimentConfig c = dicke_base(1.0, kappa);
  c.n_samples = 1501;
  c.n_traj = 1000;
  c.unraveling = UnravelingKind{Photodetection{}};
  return c;
}

inline SweepSpec dicke_grid(std::size_t n_tls = 6) {
  SweepSpec s;
  s.base = dicke_base(1.0, 0.1, n_tls);
  s.axis1 = {"lambda_bar", {0.5, 1.0, 1.5, 2.0}};
  s.axis2 = {"kappa", {0.1, 0.5, 1.0, 2.0}};
  s.unravelings = {{"hd", UnravelingKind{Homodyne{0.0}}}, {"pd", UnravelingKind{Photodetection{}}}};
  return s;
}

inline SweepSpec quadratures() {
  SweepSpec s = dicke_grid();
  s.unravelings = {{"hd", UnravelingKind{Homodyne{0.0}}},
                   {"hd_pi2", UnravelingKind{Homodyne{std::numbers::pi / 2.0}}}};
  return s;
}

inline ScalingSpec scaling(const std::optional<UnravelingKind>& u) {
  ScalingSpec s;
  s.n_values = {2, 3, 4, 6};
  s.base = dicke_base(1.0, 0.5, 2);
  s.base.t_max = 2.0;
  s.base.n_samples = 401;
  s.base.unraveling = u;
  return s;
}

struct EfficiencyRegime {
  std::string name;
  double g_b;
  std::vector<double> g_c;
};

inline std::vector<EfficiencyRegime> efficiency_regimes() {
  return {{"weak", 0.1, {0.05, 0.1, 0.15, 0.2, 0.25}},
          {"strong", 1.0, {0.5, 1.0, 2.0, 5.0, 10.0, 15.0}}};
}

inline constexpr double kEfficiencyGamma = 0.1;

}  // namespace presets

namespace detail {

inline void apply_overrides(ExperimentConfig& c, const FigureOptions& o) {
  if (o.n_traj) c.n_traj = *o.n_traj;
  if (o.seed) c.master_seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.n_samples) c.n_samples = *o.n_samples;
}

inline void say(const FigureOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

inline std::string tag(double v) {
  std::string s = format_number(v);
  for (char& ch : s) {
    if (ch == '.') ch = 'p';
  }
  return s;
}

inline void add(FigureOutput& out, const WrittenFiles& w) {
  out.files.insert(out.files.end(), w.paths.begin(), w.paths.end());
}

inline void run_and_write(FigureOutput& out, ExperimentConfig c, const std::string& stem,
                          const FigureOptions& o, BaselineCache& cache) {
  c.output.stem = stem;
  say(o, "running " + stem);
  const auto r = run_experiment(c, &cache);
  for (const auto& w : r.warnings) out.warnings.push_back(stem + ": " + w);
  add(out, write_experiment(r, o.out_dir));
}

inline void write_sweep_figure(FigureOutput& out, SweepSpec s, const std::string& stem,
                               const FigureOptions& o) {
  apply_overrides(s.base, o);
  SweepOptions so;
  so.progress = [&](std::size_t done, std::size_t total) {
    say(o, stem + ": cell " + std::to_string(done) + "/" + std::to_string(total));
  };
  const auto r = run_sweep(s, so);
  for (const auto& w : r.warnings) out.warnings.push_back(stem + ": " + w);
  add(out, write_sweep(r, o.out_dir, stem));
  if (stem != "em_quadratures") return;

  // ratio of the two quadratures per cell
  CsvTable t({s.axis1.name, s.axis2.name, "status", "t_readout", "daemonic_hd", "daemonic_hd_pi2",
              "ratio_pi2_over_0", "ratio_se"});
  for (const auto& cell : r.cells) {
    double a = kNaN, b = kNaN, ratio = kNaN, se = kNaN;
    if (cell.channels.size() == 2) {
      const auto& c0 = cell.channels[0];
      const auto& c1 = cell.channels[1];
      a = c0.daemonic;
      b = c1.daemonic;
      if (a > 1e-9) {
        ratio = b / a;
        const double s0 = c0.daemonic_std / std::sqrt(static_cast<double>(c0.n)) / a;
        const double s1 = c1.daemonic_std / std::sqrt(static_cast<double>(c1.n)) / b;
        se = std::abs(ratio) * std::sqrt(s0 * s0 + s1 * s1);
      }
    }
    t.add_row({format_number(cell.value1), format_number(cell.value2), cell.status,
               format_number(cell.t_readout), format_number(a), format_number(b), format_number(ratio),
               format_number(se)});
  }
  const auto path = o.out_dir / "em_quadratures_ratio.csv";
  t.write(path);
  out.files.push_back(path);
}

inline void efficiency_figure(FigureOutput& out, const FigureOptions& o, BaselineCache& cache) {
  CsvTable t({"regime", "g_B", "g_C", "status", "eps0_max", "t_eps0_max", "ergotropy_max",
              "t_ergotropy_max", "E_max", "E_closed_max", "daemonic_max", "t_daemonic_max",
              "daemonic_std", "eta_max", "t_eta_max", "max_fock_tail", "message"});
  Json runs = Json::array();
  for (const auto& regime : presets::efficiency_regimes()) {
    for (double gc : regime.g_c) {
      ExperimentConfig c = presets::spin_spin(regime.g_b, gc, presets::kEfficiencyGamma);
      c.n_traj = 200;
      apply_overrides(c, o);
      say(o, "em_efficiency: " + regime.name + " g_C=" + format_number(gc));
      std::vector<std::string> row{regime.name, format_number(regime.g_b), format_number(gc)};
      try {
        const auto r = run_experiment(c, &cache);
        const auto& u = r.unconditional;
        const auto& cl = *r.closed;
        std::vector<double> dm, eta;
        for (const auto& m : r.metrics) {
          dm.push_back(m.daemonic_ergotropy);
          eta.push_back(m.efficiency.degenerate ? -std::numeric_limits<double>::infinity()
                                                : m.efficiency.eta);
        }
        const std::size_t i0 = argmax(cl.ergotropy), iu = argmax(u.ergotropy);
        const std::size_t id = argmax(dm), ie = argmax(eta);
        const bool any_eta = std::isfinite(eta[ie]);
        row.insert(row.end(),
                   {r.warnings.empty() ? "ok" : "ok;fock_tail_warning",
                    format_number(cl.ergotropy[i0]), format_number(cl.times[i0]),
                    format_number(u.ergotropy[iu]), format_number(u.times[iu]),
                    format_number(u.energy[argmax(u.energy)]),
                    format_number(cl.energy[argmax(cl.energy)]), format_number(dm[id]),
                    format_number(u.times[id]), format_number(r.metrics[id].std),
                    format_number(any_eta ? eta[ie] : kNaN), format_number(any_eta ? u.times[ie] : kNaN),
                    format_number(r.max_fock_tail), ""});
        runs.push_back(to_json(r.config));
        for (const auto& w : r.warnings) out.warnings.push_back("g_C=" + format_number(gc) + ": " + w);
      } catch (const std::exception& e) {
        row.push_back("failed");
        for (int k = 0; k < 12; ++k) row.push_back("NaN");
        row.push_back(e.what());
      }
      t.add_row(std::move(row));
    }
  }
  const auto csv = o.out_dir / "em_efficiency.csv";
  const auto meta = o.out_dir / "em_efficiency.json";
  t.write(csv);
  write_json(meta, Json{{"kind", "em_efficiency"},
                        {"runs", runs},
                        {"files", {{"table", "em_efficiency.csv"}}},
                        {"warnings", out.warnings},
                        {"software", software_info()},
                        {"tolerances", tolerance_info()},
                        {"created", utc_timestamp()}});
  out.files.push_back(csv);
  out.files.push_back(meta);
}

inline void scaling_figure(FigureOutput& out, const FigureOptions& o) {
  BaselineCache cache;
  for (const auto& [label, kind] :
       std::vector<std::pair<std::string, UnravelingKind>>{{"pd", UnravelingKind{Photodetection{}}},
                                                           {"hd", UnravelingKind{Homodyne{0.0}}}}) {
    ScalingSpec s = presets::scaling(kind);
    apply_overrides(s.base, o);
    say(o, "em_scaling: " + label);
    const auto r = run_scaling_study(s, &cache);
    for (const auto& w : r.warnings) out.warnings.push_back(label + ": " + w);
    add(out, write_scaling(r, o.out_dir, "em_scaling_" + label));
  }
}

}  // namespace detail

inline FigureOutput reproduce_figure(const std::string& id, const FigureOptions& o = {}) {
  const auto& ids = figure_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    std::string known;
    for (const auto& k : ids) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("figure_id", "unknown figure '" + id + "' (known: " + known + ")");
  }
  const auto start = std::chrono::steady_clock::now();
  ensure_directory(o.out_dir);
  FigureOutput out;
  out.id = id;
  BaselineCache cache;

  if (id == "fig1") {
    for (const auto& [regime, gb, gc] :
         std::vector<std::tuple<std::string, double, double>>{{"weak", 0.1, 0.2}, {"strong", 1.0, 2.0}}) {
      for (double gamma : presets::fig1_gammas()) {
        ExperimentConfig c = presets::spin_spin(gb, gc, gamma);
        detail::apply_overrides(c, o);
        detail::run_and_write(out, c, "fig1_" + regime + "_gamma" + detail::tag(gamma), o, cache);
      }
    }
  } else if (id == "fig2") {
    for (double kappa : presets::fig2_kappas()) {
      ExperimentConfig c = presets::fig2(kappa);
      detail::apply_overrides(c, o);
      detail::run_and_write(out, c, "fig2_kappa" + detail::tag(kappa), o, cache);
    }
  } else if (id == "fig3" || id == "fig4") {
    detail::write_sweep_figure(out, presets::dicke_grid(), id, o);
  } else if (id == "em_quadratures") {
    detail::write_sweep_figure(out, presets::quadratures(), id, o);
  } else if (id == "em_scaling") {
    detail::scaling_figure(out, o);
  } else {
    detail::efficiency_figure(out, o, cache);
  }

  Json files = Json::array();
  for (const auto& f : out.files) files.push_back(f.filename().string());
  const auto manifest = o.out_dir / (id + "_manifest.json");
  write_json(manifest,
             Json{{"figure", id},
                  {"files", files},
                  {"overrides",
                   {{"n_traj", o.n_traj ? Json(*o.n_traj) : Json(nullptr)},
                    {"seed", o.seed ? Json(*o.seed) : Json(nullptr)},
                    {"threads", o.threads ? Json(*o.threads) : Json(nullptr)},
                    {"n_samples", o.n_samples ? Json(*o.n_samples) : Json(nullptr)}}},
                  {"warnings", out.warnings},
                  {"software", software_info()},
                  {"wall_clock_seconds",
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
                  {"created", utc_timestamp()}});
  out.files.push_back(manifest);
  return out;
}

}  // namespace qbmon::harness
