#pragma once

// Run configuration and its JSON schema.
//
//   {
//     "model": {"type": "dicke", "omega": 1, "lambda_bar": 1, "kappa": 0.5,
//               "n_tls": 4, "n_ph": 20}
//           | {"type": "spin_spin", "omega": 1, "g_B": 0.1, "g_C": 0.2,
//              "gamma": 0.1, "n_ph": 20},
//     "unraveling": "none" | "pd" | "hd" | {"type": "hd", "theta": 0},
//     "n_traj": 1000,
//     "seed": 1,
//     "time": {"t_max": 5, "dt": 0.001, "n_samples": 101},
//     "ergotropy_space": "full" | "symmetric",
//     "threads": 0,
//     "output": {"dir": "results", "stem": "run"}
//   }
//
// Every key is optional except model.type. Unknown keys are rejected and
// every error names the offending field by its dotted path.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "qbmon/errors.hpp"
#include "qbmon/harness/output.hpp"
#include "qbmon/lindblad.hpp"
#include "qbmon/models.hpp"
#include "qbmon/trajectories.hpp"

namespace qbmon::harness {

using ModelConfig = std::variant<SpinSpinConfig, DickeConfig>;

struct OutputOptions {
  std::string dir = "results";
  std::string stem = "run";
};

struct ExperimentConfig {
  ModelConfig model = DickeConfig{};
  std::optional<UnravelingKind> unraveling;  // empty: unconditional only
  std::size_t n_traj = 1000;
  std::uint64_t master_seed = 1;
  double t_max = 5.0;
  std::optional<double> dt;  // default_time_step(model) when unset
  std::size_t n_samples = 101;
  ErgotropySpace ergotropy_space = ErgotropySpace::kFull;
  std::size_t threads = 0;
  OutputOptions output;

  void validate() const;
};

// ---- model helpers ----------------------------------------------------------

inline ModelInstance build_model(const ModelConfig& m) {
  return std::visit(
      [](const auto& c) -> ModelInstance {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, DickeConfig>) {
          return build_dicke(c);
        } else {
          return build_spin_spin(c);
        }
      },
      m);
}

// Same model with the jump channel switched off.
inline ModelConfig without_dissipation(ModelConfig m) {
  if (auto* d = std::get_if<DickeConfig>(&m)) d->kappa = 0.0;
  if (auto* s = std::get_if<SpinSpinConfig>(&m)) s->gamma = 0.0;
  return m;
}

inline bool is_dicke(const ModelConfig& m) { return std::holds_alternative<DickeConfig>(m); }

inline void validate_model(const ModelConfig& m) {
  try {
    std::visit([](const auto& c) { c.validate(); }, m);
  } catch (const ConfigError& e) {
    throw ConfigError("model." + e.field(), e.message());
  }
}

inline void ExperimentConfig::validate() const {
  validate_model(model);
  if (unraveling) {
    if (n_traj < 1) throw ConfigError("n_traj", "must be >= 1 when an unraveling is requested");
    if (const auto* h = std::get_if<Homodyne>(&*unraveling)) {
      if (!(h->theta >= 0.0 && h->theta < 2.0 * std::numbers::pi)) {
        throw ConfigError("unraveling.theta", "must lie in [0, 2pi)");
      }
    }
  }
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("time.t_max", "must be > 0");
  if (n_samples < 2) throw ConfigError("time.n_samples", "must be >= 2");
  if (dt && !(*dt > 0.0)) throw ConfigError("time.dt", "must be > 0");
  if (output.stem.empty() || output.stem.find('/') != std::string::npos) {
    throw ConfigError("output.stem", "must be a nonempty file name");
  }
}

inline double resolved_dt(const ExperimentConfig& cfg, const ModelInstance& model) {
  return cfg.dt.value_or(default_time_step(model));
}

// ---- JSON reading ------------------------------------------------------------

namespace detail {

inline std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
}

inline void reject_unknown(const Json& j, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError(join_path(path, it.key()), "unknown key");
  }
}

inline double get_number(const Json& j, const std::string& key, const std::string& path, double dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join_path(path, key), "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(join_path(path, key), "must be finite");
  return x;
}

inline std::uint64_t get_unsigned(const Json& j, const std::string& key, const std::string& path,
                                  std::uint64_t dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(join_path(path, key), "must be a non-negative integer");
  }
  throw ConfigError(join_path(path, key), "must be an integer");
}

inline std::string get_string(const Json& j, const std::string& key, const std::string& path,
                              const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(join_path(path, key), "must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline ModelConfig parse_model(const Json& j, const std::string& path = "model") {
  using namespace detail;
  require_object(j, path);
  if (!j.contains("type")) throw ConfigError(path + ".type", "missing (dicke or spin_spin)");
  const std::string type = get_string(j, "type", path, "");
  if (type == "dicke") {
    reject_unknown(j, path, {"type", "omega", "lambda_bar", "kappa", "n_tls", "n_ph"});
    DickeConfig c;
    c.omega = get_number(j, "omega", path, c.omega);
    c.lambda_bar = get_number(j, "lambda_bar", path, c.lambda_bar);
    c.kappa = get_number(j, "kappa", path, c.kappa);
    c.n_tls = get_unsigned(j, "n_tls", path, c.n_tls);
    if (j.contains("n_ph")) c.n_ph = get_unsigned(j, "n_ph", path, 0);
    return c;
  }
  if (type == "spin_spin") {
    reject_unknown(j, path, {"type", "omega", "g_B", "g_C", "gamma", "n_ph"});
    SpinSpinConfig c;
    c.omega = get_number(j, "omega", path, c.omega);
    c.g_battery = get_number(j, "g_B", path, c.g_battery);
    c.g_charger = get_number(j, "g_C", path, c.g_charger);
    c.gamma = get_number(j, "gamma", path, c.gamma);
    c.n_ph = get_unsigned(j, "n_ph", path, c.n_ph);
    return c;
  }
  throw ConfigError(path + ".type", "unknown model '" + type + "' (dicke or spin_spin)");
}

inline std::optional<UnravelingKind> parse_unraveling(const Json& j,
                                                      const std::string& path = "unraveling") {
  using namespace detail;
  std::string type;
  double theta = 0.0;
  if (j.is_string()) {
    type = j.get<std::string>();
  } else if (j.is_object()) {
    reject_unknown(j, path, {"type", "theta", "label"});
    type = get_string(j, "type", path, "");
    theta = get_number(j, "theta", path, 0.0);
    if (type != "hd" && j.contains("theta")) {
      throw ConfigError(path + ".theta", "only homodyne detection has a phase");
    }
  } else {
    throw ConfigError(path, "must be a string or an object");
  }
  if (type == "none") return std::nullopt;
  if (type == "pd") return UnravelingKind{Photodetection{}};
  if (type == "hd") return UnravelingKind{Homodyne{theta}};
  throw ConfigError(path + ".type", "unknown unraveling '" + type + "' (none, pd or hd)");
}

inline ErgotropySpace parse_space(const std::string& s, const std::string& path) {
  if (s == "full") return ErgotropySpace::kFull;
  if (s == "symmetric") return ErgotropySpace::kSymmetric;
  throw ConfigError(path, "must be 'full' or 'symmetric'");
}

// Extra top-level keys (e.g. "sweep") may be allowed by callers.
inline ExperimentConfig parse_experiment(const Json& j, std::initializer_list<const char*> extra = {}) {
  using namespace detail;
  require_object(j, "");
  std::set<std::string> allowed{"model", "unraveling", "n_traj", "seed", "time",
                                "ergotropy_space", "threads", "output"};
  for (const char* e : extra) allowed.insert(e);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(it.key(), "unknown key");
  }
  ExperimentConfig c;
  if (!j.contains("model")) throw ConfigError("model", "missing");
  c.model = parse_model(j.at("model"));
  if (j.contains("unraveling")) c.unraveling = parse_unraveling(j.at("unraveling"));
  c.n_traj = get_unsigned(j, "n_traj", "", c.n_traj);
  c.master_seed = get_unsigned(j, "seed", "", c.master_seed);
  if (j.contains("time")) {
    const auto& t = j.at("time");
    require_object(t, "time");
    reject_unknown(t, "time", {"t_max", "dt", "n_samples"});
    c.t_max = get_number(t, "t_max", "time", c.t_max);
    if (t.contains("dt")) c.dt = get_number(t, "dt", "time", 0.0);
    c.n_samples = get_unsigned(t, "n_samples", "time", c.n_samples);
  }
  c.ergotropy_space =
      parse_space(get_string(j, "ergotropy_space", "", "full"), "ergotropy_space");
  c.threads = get_unsigned(j, "threads", "", c.threads);
  if (j.contains("output")) {
    const auto& o = j.at("output");
    require_object(o, "output");
    reject_unknown(o, "output", {"dir", "stem"});
    c.output.dir = get_string(o, "dir", "output", c.output.dir);
    c.output.stem = get_string(o, "stem", "output", c.output.stem);
  }
  c.validate();
  return c;
}

inline Json load_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot open '" + path.string() + "'");
  try {
    return Json::parse(f, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
}

// ---- JSON writing ------------------------------------------------------------

inline Json to_json(const ModelConfig& m) {
  if (const auto* d = std::get_if<DickeConfig>(&m)) {
    return Json{{"type", "dicke"},        {"omega", d->omega}, {"lambda_bar", d->lambda_bar},
                {"kappa", d->kappa},      {"n_tls", d->n_tls}, {"n_ph", d->resolved_n_ph()}};
  }
  const auto& s = std::get<SpinSpinConfig>(m);
  return Json{{"type", "spin_spin"}, {"omega", s.omega}, {"g_B", s.g_battery},
              {"g_C", s.g_charger},  {"gamma", s.gamma}, {"n_ph", s.n_ph}};
}

inline Json to_json(const std::optional<UnravelingKind>& u) {
  if (!u) return "none";
  if (std::holds_alternative<Photodetection>(*u)) return Json{{"type", "pd"}};
  return Json{{"type", "hd"}, {"theta", std::get<Homodyne>(*u).theta}};
}

inline Json to_json(const ExperimentConfig& c) {
  Json time{{"t_max", c.t_max}, {"n_samples", c.n_samples}};
  if (c.dt) time["dt"] = *c.dt;
  return Json{{"model", to_json(c.model)},
              {"unraveling", to_json(c.unraveling)},
              {"n_traj", c.n_traj},
              {"seed", c.master_seed},
              {"time", time},
              {"ergotropy_space", c.ergotropy_space == ErgotropySpace::kFull ? "full" : "symmetric"},
              {"threads", c.threads},
              {"output", {{"dir", c.output.dir}, {"stem", c.output.stem}}}};
}

// ---- named parameters (sweep axes) -------------------------------------------

inline const std::vector<std::string>& parameter_names() {
  static const std::vector<std::string> names{"lambda_bar", "kappa", "omega", "n_tls",
                                              "g_B",        "g_C",   "gamma", "theta"};
  return names;
}

inline void set_parameter(ExperimentConfig& cfg, const std::string& name, double value) {
  auto need = [&](bool ok) {
    if (!ok) throw ConfigError(name, "parameter does not apply to this model/unraveling");
  };
  if (name == "theta") {
    need(cfg.unraveling && std::holds_alternative<Homodyne>(*cfg.unraveling));
    std::get<Homodyne>(*cfg.unraveling).theta = value;
    return;
  }
  if (name == "omega") {
    std::visit([&](auto& m) { m.omega = value; }, cfg.model);
    return;
  }
  if (auto* d = std::get_if<DickeConfig>(&cfg.model)) {
    if (name == "lambda_bar") return void(d->lambda_bar = value);
    if (name == "kappa") return void(d->kappa = value);
    if (name == "n_tls") {
      if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError(name, "must be a positive integer");
      d->n_tls = static_cast<std::size_t>(value);
      d->n_ph.reset();
      return;
    }
  } else if (auto* s = std::get_if<SpinSpinConfig>(&cfg.model)) {
    if (name == "g_B") return void(s->g_battery = value);
    if (name == "g_C") return void(s->g_charger = value);
    if (name == "gamma") return void(s->gamma = value);
  }
  need(false);
}

}  // namespace qbmon::harness
