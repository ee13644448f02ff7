#pragma once

// Two-axis parameter sweeps. Each cell runs the Lindblad solution, the
// zero-dissipation baseline and every requested unraveling, then reads all
// of them out at one sampled time: the time of maximum stored energy (per
// run, so eps0 comes from the baseline's own energy maximum) or a fixed time.
//
// Sweep config = experiment config plus
//   "sweep": {
//     "axis1": {"name": "lambda_bar", "values": [0.5, 1, 1.5, 2]},
//     "axis2": {"name": "kappa", "values": [0.1, 0.5, 1, 2]},
//     "unravelings": ["hd", "pd", {"type": "hd", "theta": 1.5707963267948966, "label": "hd_pi2"}],
//     "readout": "max_energy_time" | {"fixed_time": 1.0}
//   }
// Without "unravelings" the experiment's own unraveling (if any) is used.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "qbmon/harness/config.hpp"
#include "qbmon/harness/experiment.hpp"

namespace qbmon::harness {

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct LabeledUnraveling {
  std::string label;
  UnravelingKind kind;
};

enum class ReadoutKind { kMaxEnergyTime, kFixedTime };

struct Readout {
  ReadoutKind kind = ReadoutKind::kMaxEnergyTime;
  double time = 0.0;
};

struct SweepSpec {
  SweepAxis axis1;
  SweepAxis axis2;
  ExperimentConfig base;
  std::vector<LabeledUnraveling> unravelings;
  Readout readout;

  void validate() const {
    base.validate();
    for (const auto* a : {&axis1, &axis2}) {
      const std::string f = a == &axis1 ? "sweep.axis1" : "sweep.axis2";
      const auto& names = parameter_names();
      if (std::find(names.begin(), names.end(), a->name) == names.end()) {
        throw ConfigError(f + ".name", "unknown parameter '" + a->name + "'");
      }
      if (a->values.empty()) throw ConfigError(f + ".values", "must be nonempty");
      if (a->name == "theta") {
        for (double v : a->values) {
          if (!(v >= 0.0 && v < 2.0 * std::numbers::pi)) {
            throw ConfigError(f + ".values", "theta must lie in [0, 2pi)");
          }
        }
      }
      for (std::size_t i = 1; i < a->values.size(); ++i) {
        if (!(a->values[i] > a->values[i - 1])) {
          throw ConfigError(f + ".values", "must be strictly increasing");
        }
      }
    }
    if (axis1.name == axis2.name) throw ConfigError("sweep.axis2.name", "duplicates axis1");
    std::vector<std::string> labels;
    for (const auto& u : unravelings) {
      if (u.label.empty()) throw ConfigError("sweep.unravelings", "empty label");
      if (std::find(labels.begin(), labels.end(), u.label) != labels.end()) {
        throw ConfigError("sweep.unravelings", "duplicate label '" + u.label + "'");
      }
      labels.push_back(u.label);
    }
    if (!unravelings.empty() && base.n_traj < 1) throw ConfigError("n_traj", "must be >= 1");
    if (readout.kind == ReadoutKind::kFixedTime &&
        !(readout.time >= 0.0 && readout.time <= base.t_max)) {
      throw ConfigError("sweep.readout.fixed_time", "must lie in [0, t_max]");
    }
    // every cell must at least configure
    for (double v1 : axis1.values) {
      for (double v2 : axis2.values) {
        ExperimentConfig c = base;
        apply(c, axis1.name, v1);
        apply(c, axis2.name, v2);
        c.validate();
      }
    }
  }

  std::vector<LabeledUnraveling> channels() const {
    if (!unravelings.empty()) return unravelings;
    if (base.unraveling) return {{unraveling_name(*base.unraveling), *base.unraveling}};
    return {};
  }

  // theta is a property of the channels, not of the model
  static void apply(ExperimentConfig& c, const std::string& name, double value) {
    if (name == "theta") return;
    set_parameter(c, name, value);
  }
};

struct SweepChannel {
  std::string label;
  double daemonic = kNaN;
  double daemonic_std = kNaN;
  std::size_t n = 0;
  std::optional<double> ratio;  // daemonic / eps0
  double ratio_se = kNaN;       // std / (sqrt(n) eps0)
  double eta = kNaN;
  bool eta_degenerate = false;
  double cond_purity = kNaN;
  bool within_bounds = true;
};

struct SweepCell {
  double value1 = 0.0;
  double value2 = 0.0;
  std::string status = "ok";
  std::string message;
  std::size_t readout_index = 0;
  double t_readout = kNaN;
  double energy = kNaN;
  double power = kNaN;
  double ergotropy = kNaN;
  double purity = kNaN;
  std::size_t readout_index_closed = 0;
  double t_readout_closed = kNaN;
  double eps0 = kNaN;
  std::vector<SweepChannel> channels;
  double max_fock_tail = kNaN;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepCell> cells;  // axis1 outer, axis2 inner
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;

  std::vector<std::string> columns() const {
    std::vector<std::string> c{spec.axis1.name, spec.axis2.name, "status", "readout_index",
                               "t_readout", "E", "P", "ergotropy", "purity",
                               "readout_index_closed", "t_readout_closed", "eps0"};
    for (const auto& ch : spec.channels()) {
      for (const char* f : {"daemonic_", "daemonic_std_", "ratio_", "ratio_se_", "eta_",
                            "eta_degenerate_", "cond_purity_", "n_traj_"}) {
        c.push_back(f + ch.label);
      }
    }
    c.push_back("max_fock_tail");
    c.push_back("message");
    return c;
  }

  CsvTable table() const {
    CsvTable t(columns());
    for (const auto& cell : cells) {
      std::vector<std::string> row{format_number(cell.value1), format_number(cell.value2), cell.status,
                                   format_number(cell.readout_index), format_number(cell.t_readout),
                                   format_number(cell.energy), format_number(cell.power),
                                   format_number(cell.ergotropy), format_number(cell.purity),
                                   format_number(cell.readout_index_closed),
                                   format_number(cell.t_readout_closed), format_number(cell.eps0)};
      const auto chans = spec.channels();
      for (std::size_t k = 0; k < chans.size(); ++k) {
        const SweepChannel ch = k < cell.channels.size() ? cell.channels[k] : SweepChannel{};
        row.push_back(format_number(ch.daemonic));
        row.push_back(format_number(ch.daemonic_std));
        row.push_back(format_number(ch.ratio));
        row.push_back(format_number(ch.ratio_se));
        row.push_back(format_number(ch.eta));
        row.push_back(ch.n ? (ch.eta_degenerate ? "1" : "0") : "NaN");
        row.push_back(format_number(ch.cond_purity));
        row.push_back(format_number(ch.n));
      }
      row.push_back(format_number(cell.max_fock_tail));
      row.push_back(cell.message);
      t.add_row(std::move(row));
    }
    return t;
  }

  Json metadata(const std::string& stem) const {
    Json chans = Json::array();
    for (const auto& c : spec.channels()) {
      Json u = to_json(std::optional<UnravelingKind>(c.kind));
      u["label"] = c.label;
      chans.push_back(u);
    }
    Json readout = spec.readout.kind == ReadoutKind::kMaxEnergyTime
                       ? Json("max_energy_time")
                       : Json{{"fixed_time", spec.readout.time}};
    return Json{{"kind", "sweep"},
                {"config", to_json(spec.base)},
                {"sweep",
                 {{"axis1", {{"name", spec.axis1.name}, {"values", spec.axis1.values}}},
                  {"axis2", {{"name", spec.axis2.name}, {"values", spec.axis2.values}}},
                  {"unravelings", chans},
                  {"readout", readout}}},
                {"seeds",
                 {{"master_seed", spec.base.master_seed},
                  {"n_traj", spec.base.n_traj},
                  {"streams", "every cell reuses streams 0..n_traj-1 of master_seed"}}},
                {"files", {{"grid", stem + ".csv"}}},
                {"columns", columns()},
                {"warnings", warnings},
                {"software", software_info()},
                {"tolerances", tolerance_info()},
                {"wall_clock_seconds", wall_seconds},
                {"created", utc_timestamp()}};
  }
};

inline std::size_t nearest_index(const std::vector<double>& times, double t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
  }
  return best;
}

inline std::size_t readout_index(const Readout& r, const UnconditionalRun& run) {
  if (r.kind == ReadoutKind::kFixedTime) return nearest_index(run.times, r.time);
  return argmax(run.energy);
}

struct SweepOptions {
  // Called after every cell with (cells done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

inline SweepCell run_sweep_cell(const SweepSpec& spec, double v1, double v2, BaselineCache& cache) {
  SweepCell cell;
  cell.value1 = v1;
  cell.value2 = v2;
  ExperimentConfig cfg = spec.base;
  cfg.unraveling.reset();
  SweepSpec::apply(cfg, spec.axis1.name, v1);
  SweepSpec::apply(cfg, spec.axis2.name, v2);
  const ExperimentResult base = run_experiment(cfg, &cache);
  const auto& u = base.unconditional;
  cell.readout_index = readout_index(spec.readout, u);
  cell.t_readout = u.times[cell.readout_index];
  cell.energy = u.energy[cell.readout_index];
  cell.power = u.power[cell.readout_index];
  cell.ergotropy = u.ergotropy[cell.readout_index];
  cell.purity = u.purity[cell.readout_index];
  cell.readout_index_closed = readout_index(spec.readout, *base.closed);
  cell.t_readout_closed = base.closed->times[cell.readout_index_closed];
  cell.eps0 = base.closed->ergotropy[cell.readout_index_closed];
  double tail = base.max_fock_tail;

  const ModelInstance model = build_model(cfg.model);
  const auto opts = integrator_options(base.config, model);
  std::vector<std::string> flags;
  for (auto ch_spec : spec.channels()) {
    if (auto* h = std::get_if<Homodyne>(&ch_spec.kind)) {
      if (spec.axis1.name == "theta") h->theta = v1;
      if (spec.axis2.name == "theta") h->theta = v2;
    }
    const auto ens = run_ensemble(model, opts, ch_spec.kind, cfg.n_traj, cfg.master_seed,
                                  ensemble_options(cfg));
    tail = std::max(tail, ens.max_fock_tail);
    const std::size_t i = cell.readout_index;
    SweepChannel ch;
    ch.label = ch_spec.label;
    ch.daemonic = ens.ergotropy[i].mean;
    ch.daemonic_std = ens.ergotropy[i].std;
    ch.n = ens.ergotropy[i].n;
    ch.ratio = enhancement_ratio(ch.daemonic, cell.eps0);
    if (ch.ratio) ch.ratio_se = ch.daemonic_std / std::sqrt(static_cast<double>(ch.n)) / cell.eps0;
    const auto eff = daemonic_efficiency(ch.daemonic, cell.ergotropy, cell.energy);
    ch.eta = eff.eta;
    ch.eta_degenerate = eff.degenerate;
    ch.cond_purity = ens.purity[i].mean;
    DaemonicMetrics m;
    m.daemonic_ergotropy = ch.daemonic;
    m.std = ch.daemonic_std;
    m.n = ch.n;
    m.unconditional_ergotropy = cell.ergotropy;
    m.unconditional_energy = cell.energy;
    ch.within_bounds = m.within_bounds();
    if (!ch.ratio) flags.push_back("eps0_below_floor");
    cell.channels.push_back(std::move(ch));
  }
  cell.max_fock_tail = tail;
  if (tail > kFockTailWarning) flags.push_back("fock_tail_warning");
  std::sort(flags.begin(), flags.end());
  flags.erase(std::unique(flags.begin(), flags.end()), flags.end());
  for (const auto& f : flags) cell.status += ";" + f;
  return cell;
}

inline SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& sopts = {}) {
  const auto start = std::chrono::steady_clock::now();
  spec.validate();
  SweepResult r;
  r.spec = spec;
  BaselineCache cache;
  const std::size_t total = spec.axis1.values.size() * spec.axis2.values.size();
  std::size_t done = 0;
  std::size_t failed = 0;
  double tail = 0.0;
  for (double v1 : spec.axis1.values) {
    for (double v2 : spec.axis2.values) {
      try {
        r.cells.push_back(run_sweep_cell(spec, v1, v2, cache));
        tail = std::max(tail, r.cells.back().max_fock_tail);
      } catch (const std::exception& e) {
        SweepCell cell;
        cell.value1 = v1;
        cell.value2 = v2;
        cell.status = "failed";
        cell.message = e.what();
        r.cells.push_back(std::move(cell));
        ++failed;
      }
      if (sopts.progress) sopts.progress(++done, total);
    }
  }
  if (failed) r.warnings.push_back(std::to_string(failed) + " cell(s) failed; see the status column");
  if (tail > kFockTailWarning) r.warnings.push_back(fock_tail_warning(tail));
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline WrittenFiles write_sweep(const SweepResult& r, const std::filesystem::path& dir,
                                const std::string& stem) {
  ensure_directory(dir);
  const auto csv = dir / (stem + ".csv");
  const auto meta = dir / (stem + ".json");
  r.table().write(csv);
  write_json(meta, r.metadata(stem));
  return {{csv, meta}};
}

// ---- JSON --------------------------------------------------------------------

inline SweepAxis parse_axis(const Json& j, const std::string& path) {
  detail::require_object(j, path);
  detail::reject_unknown(j, path, {"name", "values"});
  SweepAxis a;
  a.name = detail::get_string(j, "name", path, "");
  if (!j.contains("values") || !j.at("values").is_array()) {
    throw ConfigError(path + ".values", "must be an array of numbers");
  }
  for (const auto& v : j.at("values")) {
    if (!v.is_number()) throw ConfigError(path + ".values", "must be an array of numbers");
    a.values.push_back(v.get<double>());
  }
  return a;
}

inline SweepSpec parse_sweep(const Json& j) {
  SweepSpec s;
  s.base = parse_experiment(j, {"sweep"});
  if (!j.contains("sweep")) throw ConfigError("sweep", "missing");
  const auto& sw = j.at("sweep");
  detail::require_object(sw, "sweep");
  detail::reject_unknown(sw, "sweep", {"axis1", "axis2", "unravelings", "readout"});
  if (!sw.contains("axis1")) throw ConfigError("sweep.axis1", "missing");
  if (!sw.contains("axis2")) throw ConfigError("sweep.axis2", "missing");
  s.axis1 = parse_axis(sw.at("axis1"), "sweep.axis1");
  s.axis2 = parse_axis(sw.at("axis2"), "sweep.axis2");
  if (sw.contains("unravelings")) {
    const auto& us = sw.at("unravelings");
    if (!us.is_array()) throw ConfigError("sweep.unravelings", "must be an array");
    for (std::size_t i = 0; i < us.size(); ++i) {
      const std::string path = "sweep.unravelings[" + std::to_string(i) + "]";
      auto kind = parse_unraveling(us[i], path);
      if (!kind) throw ConfigError(path, "'none' is not a monitored unraveling");
      std::string label = unraveling_name(*kind);
      if (us[i].is_object()) label = detail::get_string(us[i], "label", path, label);
      s.unravelings.push_back({label, *kind});
    }
  }
  if (sw.contains("readout")) {
    const auto& r = sw.at("readout");
    if (r.is_string() && r.get<std::string>() == "max_energy_time") {
      s.readout.kind = ReadoutKind::kMaxEnergyTime;
    } else if (r.is_object() && r.size() == 1 && r.contains("fixed_time")) {
      s.readout.kind = ReadoutKind::kFixedTime;
      s.readout.time = detail::get_number(r, "fixed_time", "sweep.readout", 0.0);
    } else {
      throw ConfigError("sweep.readout", "must be \"max_energy_time\" or {\"fixed_time\": t}");
    }
  }
  s.validate();
  return s;
}

}  // namespace qbmon::harness
