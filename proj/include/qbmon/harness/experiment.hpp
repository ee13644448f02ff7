#pragma once

// One experiment: the Lindblad run, the zero-dissipation baseline that
// defines eps0, and optionally a monitored ensemble. Results go to
// <stem>.csv (time series) and <stem>.json (resolved config, seeds,
// warnings, timings, tolerances).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qbmon/harness/config.hpp"
#include "qbmon/harness/output.hpp"
#include "qbmon/lindblad.hpp"
#include "qbmon/thermo.hpp"
#include "qbmon/trajectories.hpp"

namespace qbmon::harness {

inline constexpr double kFockTailWarning = 1e-6;
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Battery-level observables of an unconditional run.
struct UnconditionalRun {
  std::vector<double> times;
  std::vector<double> energy;
  std::vector<double> power;
  std::vector<double> ergotropy;
  std::vector<double> purity;
  std::vector<double> cavity_photons;
  std::vector<double> fock_tail;
  std::vector<DensityOp> full_states;  // only when requested
  double dt = 0.0;
  double max_fock_tail() const {
    double m = 0.0;
    for (double x : fock_tail) m = std::max(m, x);
    return m;
  }
};

inline IntegratorOptions integrator_options(const ExperimentConfig& cfg, const ModelInstance& model) {
  return IntegratorOptions::uniform(cfg.t_max, cfg.n_samples, resolved_dt(cfg, model));
}

inline UnconditionalRun run_unconditional(const ModelInstance& model, IntegratorOptions opts,
                                          ErgotropySpace space, bool keep_full_states = false) {
  opts.keep_full_states = keep_full_states;
  auto series = evolve_unconditional(model, opts);
  UnconditionalRun r;
  r.dt = opts.dt;
  r.times = series.times;
  const auto& spectrum = model.spectrum(space);
  for (const auto& rho : series.reduced_battery) {
    r.energy.push_back(battery_energy(rho, model.h_battery));
    r.ergotropy.push_back(ergotropy(rho, model.h_battery, spectrum));
    r.purity.push_back(purity(rho));
  }
  r.power = charging_power(r.energy, r.times);
  r.cavity_photons = series.observables.at("cavity_photons");
  r.fock_tail = series.observables.at("fock_tail");
  r.full_states = std::move(series.states);
  return r;
}

// Zero-dissipation runs keyed by their resolved inputs; shared across the
// cells of a sweep, where they only depend on the non-dissipative axes.
class BaselineCache {
 public:
  template <class Fn>
  std::shared_ptr<const UnconditionalRun> get(const std::string& key, Fn&& compute) {
    {
      std::lock_guard lock(mu_);
      if (auto it = runs_.find(key); it != runs_.end()) return it->second;
    }
    auto run = std::make_shared<const UnconditionalRun>(compute());
    std::lock_guard lock(mu_);
    return runs_.emplace(key, std::move(run)).first->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return runs_.size();
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const UnconditionalRun>> runs_;
};

inline std::shared_ptr<const UnconditionalRun> closed_baseline(const ExperimentConfig& cfg,
                                                               BaselineCache* cache) {
  ExperimentConfig closed = cfg;
  closed.model = without_dissipation(cfg.model);
  const ModelInstance model = build_model(closed.model);
  const auto opts = integrator_options(closed, model);
  auto compute = [&] { return run_unconditional(model, opts, cfg.ergotropy_space); };
  if (!cache) return std::make_shared<const UnconditionalRun>(compute());
  const std::string key = to_json(closed.model).dump() + "|" + format_number(cfg.t_max) + "|" +
                          std::to_string(cfg.n_samples) + "|" + format_number(opts.dt) + "|" +
                          (cfg.ergotropy_space == ErgotropySpace::kFull ? "full" : "symmetric");
  return cache->get(key, compute);
}

inline EnsembleOptions ensemble_options(const ExperimentConfig& cfg) {
  EnsembleOptions e;
  e.threads = cfg.threads;
  e.ergotropy_space = cfg.ergotropy_space;
  return e;
}

struct ExperimentResult {
  ExperimentConfig config;  // with dt resolved
  std::string model_label;
  UnconditionalRun unconditional;
  std::shared_ptr<const UnconditionalRun> closed;
  std::optional<EnsembleSummary> ensemble;
  std::vector<DaemonicMetrics> metrics;  // per sample; empty without an ensemble
  double max_fock_tail = 0.0;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;

  static const std::vector<std::string>& columns() {
    static const std::vector<std::string> c{
        "t",           "E",           "P",         "ergotropy",        "purity",
        "daemonic",    "daemonic_std", "cond_purity", "eta",           "eta_degenerate",
        "E_closed",    "P_closed",    "ergotropy_closed", "enhancement_ratio", "cond_E",
        "cavity_photons", "fock_tail"};
    return c;
  }

  CsvTable series_table() const {
    CsvTable t(columns());
    const auto& u = unconditional;
    for (std::size_t i = 0; i < u.times.size(); ++i) {
      const bool cond = ensemble.has_value();
      std::optional<double> ratio;
      if (cond) ratio = enhancement_ratio(metrics[i].daemonic_ergotropy, closed->ergotropy[i]);
      t.add_row({format_number(u.times[i]), format_number(u.energy[i]), format_number(u.power[i]),
                 format_number(u.ergotropy[i]), format_number(u.purity[i]),
                 format_number(cond ? metrics[i].daemonic_ergotropy : kNaN),
                 format_number(cond ? metrics[i].std : kNaN),
                 format_number(cond ? ensemble->purity[i].mean : kNaN),
                 format_number(cond ? metrics[i].efficiency.eta : kNaN),
                 cond ? (metrics[i].efficiency.degenerate ? "1" : "0") : "NaN",
                 format_number(closed->energy[i]), format_number(closed->power[i]),
                 format_number(closed->ergotropy[i]), format_number(ratio),
                 format_number(cond ? ensemble->energy[i].mean : kNaN),
                 format_number(u.cavity_photons[i]), format_number(u.fock_tail[i])});
    }
    return t;
  }

  Json metadata() const {
    Json seeds{{"master_seed", config.master_seed},
               {"n_traj", ensemble ? ensemble->n_traj : 0},
               {"streams", "trajectory i draws from Philox4x32-10 with key = master_seed and "
                           "counter high words = i"}};
    Json j{{"kind", "experiment"},
           {"config", to_json(config)},
           {"model", model_label},
           {"seeds", seeds},
           {"files", {{"series", config.output.stem + ".csv"}}},
           {"columns", columns()},
           {"dt", unconditional.dt},
           {"dt_closed", closed->dt},
           {"max_fock_tail", max_fock_tail},
           {"warnings", warnings},
           {"software", software_info()},
           {"tolerances", tolerance_info()},
           {"wall_clock_seconds", wall_seconds},
           {"created", utc_timestamp()}};
    if (ensemble) j["max_conditional_norm_defect"] = ensemble->max_norm_defect;
    if (ensemble && std::holds_alternative<Photodetection>(*config.unraveling)) {
      j["mean_jumps_per_trajectory"] = ensemble->jumps.mean;
    }
    return j;
  }
};

inline std::string fock_tail_warning(double tail) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "top-two Fock-level population reached %.3g (> %.0e); consider a larger n_ph",
                tail, kFockTailWarning);
  return buf;
}

// Extra state kept for diagnostics; none of it is written out.
struct RunExtras {
  bool keep_full_states = false;     // unconditional global states
  bool keep_global_average = false;  // ensemble-averaged global states
};

inline ExperimentResult run_experiment(const ExperimentConfig& input, BaselineCache* cache = nullptr,
                                       const RunExtras& extras = {}) {
  const auto start = std::chrono::steady_clock::now();
  input.validate();
  ExperimentResult r;
  r.config = input;
  const ModelInstance model = build_model(input.model);
  r.config.dt = resolved_dt(input, model);
  r.model_label = model.label;
  const auto opts = integrator_options(r.config, model);

  r.unconditional = run_unconditional(model, opts, input.ergotropy_space, extras.keep_full_states);
  if (model.dissipative()) {
    r.closed = closed_baseline(r.config, cache);
  } else {
    auto copy = std::make_shared<UnconditionalRun>(r.unconditional);
    copy->full_states.clear();
    r.closed = std::move(copy);
  }
  r.max_fock_tail = std::max(r.unconditional.max_fock_tail(), r.closed->max_fock_tail());

  if (input.unraveling) {
    auto eopts = ensemble_options(input);
    eopts.keep_global_average = extras.keep_global_average;
    r.ensemble = run_ensemble(model, opts, *input.unraveling, input.n_traj, input.master_seed, eopts);
    r.max_fock_tail = std::max(r.max_fock_tail, r.ensemble->max_fock_tail);
    r.metrics = daemonic_metrics(r.ensemble->ergotropy, r.unconditional.ergotropy,
                                 r.unconditional.energy, r.closed->ergotropy);
  }
  if (r.max_fock_tail > kFockTailWarning) r.warnings.push_back(fock_tail_warning(r.max_fock_tail));
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

struct WrittenFiles {
  std::vector<std::filesystem::path> paths;
};

inline WrittenFiles write_experiment(const ExperimentResult& r, const std::filesystem::path& dir) {
  ensure_directory(dir);
  const auto csv = dir / (r.config.output.stem + ".csv");
  const auto meta = dir / (r.config.output.stem + ".json");
  r.series_table().write(csv);
  write_json(meta, r.metadata());
  return {{csv, meta}};
}

// Index of the largest entry; first one on ties. Index 0 for empty input.
inline std::size_t argmax(const std::vector<double>& v, std::size_t from = 0) {
  std::size_t best = from < v.size() ? from : 0;
  for (std::size_t i = from; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace qbmon::harness
