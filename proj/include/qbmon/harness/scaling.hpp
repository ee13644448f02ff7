#pragma once

// Peak energy, power and ergotropy of the Dicke battery against the number
// of emitters N, with log-log least-squares exponents.
//
// Scaling config = experiment config (Dicke model) plus
//   "scaling": {"n_values": [2, 3, 4, 6]}
// The Fock cutoff of each N follows default_fock_cutoff.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "qbmon/harness/config.hpp"
#include "qbmon/harness/experiment.hpp"

namespace qbmon::harness {

struct ScalingSpec {
  std::vector<std::size_t> n_values;
  ExperimentConfig base;

  void validate() const {
    base.validate();
    if (!is_dicke(base.model)) throw ConfigError("model.type", "scaling needs the dicke model");
    if (n_values.empty()) throw ConfigError("scaling.n_values", "must be nonempty");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
      if (n_values[i] < 2) throw ConfigError("scaling.n_values", "every N must be >= 2");
      if (i > 0 && !(n_values[i] > n_values[i - 1])) {
        throw ConfigError("scaling.n_values", "must be strictly ascending");
      }
    }
  }
};

struct Peak {
  double value = kNaN;
  double time = kNaN;
};

inline Peak peak_of(const std::vector<double>& v, const std::vector<double>& t) {
  if (v.empty()) return {};
  const std::size_t i = argmax(v);
  return {v[i], t[i]};
}

// max over tau > 0 of E(tau) / tau
inline Peak power_peak(const std::vector<double>& p, const std::vector<double>& t) {
  if (p.size() < 2) return {};
  const std::size_t i = argmax(p, 1);
  return {p[i], t[i]};
}

struct ScalingRow {
  std::size_t n_tls = 0;
  std::size_t n_ph = 0;
  std::string status = "ok";
  std::string message;
  Peak energy, power, ergotropy;                       // unconditional
  Peak energy_closed, power_closed, ergotropy_closed;  // zero dissipation
  Peak daemonic;                                       // conditional, if an unraveling is set
  double daemonic_std = kNaN;
  std::size_t n_traj = 0;
  double max_fock_tail = kNaN;
};

struct PowerLawFit {
  std::string quantity;
  std::size_t points = 0;
  double exponent = kNaN;
  double exponent_se = kNaN;  // needs >= 3 points
  double prefactor = kNaN;
};

// Ordinary least squares of log y on log x.
inline PowerLawFit fit_power_law(const std::string& quantity, const std::vector<double>& x,
                                 const std::vector<double>& y) {
  PowerLawFit f;
  f.quantity = quantity;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(y[i]) && y[i] > 0.0 && x[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  f.points = lx.size();
  if (f.points < 2) return f;
  const double n = static_cast<double>(f.points);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) return f;
  f.exponent = sxy / sxx;
  f.prefactor = std::exp(my - f.exponent * mx);
  if (f.points >= 3) {
    double rss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - (my + f.exponent * (lx[i] - mx));
      rss += r * r;
    }
    f.exponent_se = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

struct ScalingResult {
  ScalingSpec spec;
  std::vector<ScalingRow> rows;
  std::vector<PowerLawFit> fits;  // empty with fewer than two successful N
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;

  const PowerLawFit* fit(const std::string& quantity) const {
    for (const auto& f : fits) {
      if (f.quantity == quantity) return &f;
    }
    return nullptr;
  }

  CsvTable rows_table() const {
    CsvTable t({"N", "n_ph", "status", "E_max", "t_E_max", "P_max", "t_P_max", "ergotropy_max",
                "t_ergotropy_max", "E_closed_max", "P_closed_max", "ergotropy_closed_max",
                "t_ergotropy_closed_max", "daemonic_max", "t_daemonic_max", "daemonic_std",
                "n_traj", "max_fock_tail", "message"});
    for (const auto& r : rows) {
      t.add_row({format_number(r.n_tls), format_number(r.n_ph), r.status,
                 format_number(r.energy.value), format_number(r.energy.time),
                 format_number(r.power.value), format_number(r.power.time),
                 format_number(r.ergotropy.value), format_number(r.ergotropy.time),
                 format_number(r.energy_closed.value), format_number(r.power_closed.value),
                 format_number(r.ergotropy_closed.value), format_number(r.ergotropy_closed.time),
                 format_number(r.daemonic.value), format_number(r.daemonic.time),
                 format_number(r.daemonic_std), format_number(r.n_traj),
                 format_number(r.max_fock_tail), r.message});
    }
    return t;
  }

  CsvTable fits_table() const {
    CsvTable t({"quantity", "points", "exponent", "exponent_se", "prefactor"});
    for (const auto& f : fits) {
      t.add_row({f.quantity, format_number(f.points), format_number(f.exponent),
                 format_number(f.exponent_se), format_number(f.prefactor)});
    }
    return t;
  }

  Json metadata(const std::string& stem) const {
    return Json{{"kind", "scaling"},
                {"config", to_json(spec.base)},
                {"scaling", {{"n_values", spec.n_values}}},
                {"seeds", {{"master_seed", spec.base.master_seed}, {"n_traj", spec.base.n_traj}}},
                {"files", {{"rows", stem + ".csv"}, {"fits", stem + "_fits.csv"}}},
                {"warnings", warnings},
                {"software", software_info()},
                {"tolerances", tolerance_info()},
                {"wall_clock_seconds", wall_seconds},
                {"created", utc_timestamp()}};
  }
};

inline ScalingResult run_scaling_study(const ScalingSpec& spec, BaselineCache* cache = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  spec.validate();
  ScalingResult out;
  out.spec = spec;
  double tail = 0.0;
  for (std::size_t n : spec.n_values) {
    ScalingRow row;
    row.n_tls = n;
    ExperimentConfig cfg = spec.base;
    auto& d = std::get<DickeConfig>(cfg.model);
    d.n_tls = n;
    d.n_ph = default_fock_cutoff(n);
    cfg.dt.reset();
    if (spec.base.dt) cfg.dt = spec.base.dt;
    row.n_ph = *d.n_ph;
    try {
      const auto r = run_experiment(cfg, cache);
      const auto& u = r.unconditional;
      row.energy = peak_of(u.energy, u.times);
      row.power = power_peak(u.power, u.times);
      row.ergotropy = peak_of(u.ergotropy, u.times);
      row.energy_closed = peak_of(r.closed->energy, r.closed->times);
      row.power_closed = power_peak(r.closed->power, r.closed->times);
      row.ergotropy_closed = peak_of(r.closed->ergotropy, r.closed->times);
      if (r.ensemble) {
        std::vector<double> dm;
        for (const auto& s : r.ensemble->ergotropy) dm.push_back(s.mean);
        const std::size_t i = argmax(dm);
        row.daemonic = {dm[i], u.times[i]};
        row.daemonic_std = r.ensemble->ergotropy[i].std;
        row.n_traj = r.ensemble->n_traj;
      }
      row.max_fock_tail = r.max_fock_tail;
      tail = std::max(tail, r.max_fock_tail);
      if (r.max_fock_tail > kFockTailWarning) row.status = "ok;fock_tail_warning";
    } catch (const std::exception& e) {
      row.status = "failed";
      row.message = e.what();
      out.warnings.push_back("N=" + std::to_string(n) + " failed: " + e.what());
    }
    out.rows.push_back(std::move(row));
  }

  std::vector<double> x;
  for (const auto& r : out.rows) x.push_back(static_cast<double>(r.n_tls));
  auto series = [&](auto member) {
    std::vector<double> y;
    for (const auto& r : out.rows) y.push_back((r.*member).value);
    return y;
  };
  std::size_t ok = 0;
  for (const auto& r : out.rows) ok += r.status != "failed";
  if (ok >= 2) {
    out.fits.push_back(fit_power_law("E", x, series(&ScalingRow::energy)));
    out.fits.push_back(fit_power_law("P", x, series(&ScalingRow::power)));
    out.fits.push_back(fit_power_law("ergotropy", x, series(&ScalingRow::ergotropy)));
    out.fits.push_back(fit_power_law("E_closed", x, series(&ScalingRow::energy_closed)));
    out.fits.push_back(fit_power_law("P_closed", x, series(&ScalingRow::power_closed)));
    out.fits.push_back(fit_power_law("ergotropy_closed", x, series(&ScalingRow::ergotropy_closed)));
    if (spec.base.unraveling) {
      out.fits.push_back(fit_power_law("daemonic", x, series(&ScalingRow::daemonic)));
    }
  }
  if (tail > kFockTailWarning) out.warnings.push_back(fock_tail_warning(tail));
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline WrittenFiles write_scaling(const ScalingResult& r, const std::filesystem::path& dir,
                                  const std::string& stem) {
  ensure_directory(dir);
  const auto rows = dir / (stem + ".csv");
  const auto fits = dir / (stem + "_fits.csv");
  const auto meta = dir / (stem + ".json");
  r.rows_table().write(rows);
  r.fits_table().write(fits);
  write_json(meta, r.metadata(stem));
  return {{rows, fits, meta}};
}

inline ScalingSpec parse_scaling(const Json& j) {
  ScalingSpec s;
  s.base = parse_experiment(j, {"scaling"});
  if (!j.contains("scaling")) throw ConfigError("scaling", "missing");
  const auto& sc = j.at("scaling");
  detail::require_object(sc, "scaling");
  detail::reject_unknown(sc, "scaling", {"n_values"});
  if (!sc.contains("n_values") || !sc.at("n_values").is_array()) {
    throw ConfigError("scaling.n_values", "must be an array of integers");
  }
  for (const auto& v : sc.at("n_values")) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError("scaling.n_values", "must be an array of non-negative integers");
    }
    s.n_values.push_back(static_cast<std::size_t>(v.get<std::int64_t>()));
  }
  s.validate();
  return s;
}

}  // namespace qbmon::harness
