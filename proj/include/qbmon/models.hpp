#pragma once

// Battery-charger models: the cavity-mediated spin-spin battery and the
// Dicke battery, assembled as immutable ModelInstance values.
//
// Subsystem order follows the kets of the initial states:
//   spin-spin: (battery, charger, cavity)
//   Dicke:     (cavity, collective spin ladder)
// Battery Hamiltonians are ground-shifted so the empty battery has energy 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qbmon/errors.hpp"
#include "qbmon/hilbert.hpp"
#include "qbmon/thermo.hpp"

namespace qbmon {

// All rates and couplings share the units of omega (hbar = 1).
struct SpinSpinConfig {
  double omega = 1.0;
  double g_battery = 0.1;
  double g_charger = 0.2;
  double gamma = 0.0;
  std::size_t n_ph = 20;

  void validate() const {
    if (!(omega > 0.0)) throw ConfigError("omega", "must be > 0");
    if (g_battery < 0.0) throw ConfigError("g_B", "must be >= 0");
    if (g_charger < 0.0) throw ConfigError("g_C", "must be >= 0");
    if (gamma < 0.0) throw ConfigError("gamma", "must be >= 0");
    if (n_ph < 1) throw ConfigError("n_ph", "must be >= 1");
  }
};

// 20 photons below five emitters, 4N from there on.
inline std::size_t default_fock_cutoff(std::size_t n_tls) {
  if (n_tls < 1) throw ConfigError("n_tls", "must be >= 1");
  return n_tls < 5 ? 20 : 4 * n_tls;
}

struct DickeConfig {
  double omega = 1.0;
  double lambda_bar = 1.0;
  double kappa = 0.0;
  std::size_t n_tls = 6;
  std::optional<std::size_t> n_ph;  // default_fock_cutoff(n_tls) when unset

  std::size_t resolved_n_ph() const { return n_ph.value_or(default_fock_cutoff(n_tls)); }

  void validate() const {
    if (!(omega > 0.0)) throw ConfigError("omega", "must be > 0");
    if (lambda_bar < 0.0) throw ConfigError("lambda_bar", "must be >= 0");
    if (kappa < 0.0) throw ConfigError("kappa", "must be >= 0");
    if (n_tls < 1) throw ConfigError("n_tls", "must be >= 1");
    if (resolved_n_ph() < n_tls) {
      throw ConfigError("n_ph", "Fock cutoff " + std::to_string(resolved_n_ph()) +
                                    " cannot hold the initial " + std::to_string(n_tls) +
                                    "-photon state");
    }
  }
};

struct ModelInstance {
  std::string label;
  SpaceLayout layout;
  std::vector<std::size_t> battery_subsystems;
  std::size_t cavity_subsystem = 0;

  LinearOp h_total;    // charging-on Hamiltonian on the full layout
  LinearOp h_battery;  // ground-shifted, on the battery sub-layout
  BatterySpectrum h_battery_spectrum;                 // physical battery, with degeneracies
  std::optional<BatterySpectrum> symmetric_spectrum;  // Dicke ladder only
  LinearOp jump_op;
  PureState initial_state;

  double rate_scale = 1.0;  // largest frequency in the problem, sets the default step

  const BatterySpectrum& spectrum(ErgotropySpace space) const {
    if (space == ErgotropySpace::kSymmetric && symmetric_spectrum) return *symmetric_spectrum;
    return h_battery_spectrum;
  }

  SubsystemReducer battery_reducer() const { return SubsystemReducer(layout, battery_subsystems); }

  bool dissipative() const { return jump_op.matrix().cwiseAbs().maxCoeff() > 0.0; }
};

namespace detail {

inline std::size_t binomial(std::size_t n, std::size_t k) {
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline BatterySpectrum ladder_spectrum(double omega, std::size_t n, ErgotropySpace space) {
  std::vector<EnergyLevel> lv;
  for (std::size_t k = 0; k <= n; ++k) {
    lv.push_back({omega * static_cast<double>(k),
                  space == ErgotropySpace::kFull ? binomial(n, k) : std::size_t{1}});
  }
  return BatterySpectrum(std::move(lv), space);
}

}  // namespace detail

inline ModelInstance build_spin_spin(const SpinSpinConfig& cfg) {
  cfg.validate();
  SpaceLayout layout({{"battery", 2, false}, {"charger", 2, false}, {"cavity", cfg.n_ph + 1, true}});

  const auto sx = LinearOp::local(ops::pauli_x(), true);
  const auto sz = LinearOp::local(ops::pauli_z(), true);
  const auto a = LinearOp::local(ops::annihilation(cfg.n_ph), false, "cavity", true);
  const auto x_field = LinearOp::local(a.matrix() + a.matrix().adjoint(), true, "cavity", true);
  const auto n_op = LinearOp::local(ops::number(cfg.n_ph), true, "cavity", true);

  const double w = cfg.omega;
  LinearOp h = (0.5 * w) * embed(sz, 0, layout) + (0.5 * w) * embed(sz, 1, layout) +
               w * embed(n_op, 2, layout);
  const LinearOp id2 = LinearOp::local(ops::identity(2), true);
  h = h + cfg.g_battery * kron_compose({sx, id2, x_field}, layout) +
      cfg.g_charger * kron_compose({id2, sx, x_field}, layout);

  ModelInstance m;
  m.label = "spin_spin";
  m.layout = layout;
  m.battery_subsystems = {0};
  m.cavity_subsystem = 2;
  m.h_total = std::move(h);
  m.h_battery = LinearOp::local(0.5 * w * (ops::pauli_z() + ops::identity(2)), true, "battery");
  m.h_battery_spectrum = BatterySpectrum({{0.0, 1}, {w, 1}}, ErgotropySpace::kFull);
  m.jump_op = std::sqrt(cfg.gamma) * embed(a, 2, layout);
  const std::size_t digits[] = {0, 1, 0};  // |down>_B |up>_C |0>_A
  m.initial_state = PureState::basis(layout, digits);
  m.rate_scale = std::max({w, cfg.g_battery, cfg.g_charger, cfg.gamma});
  return m;
}

// Dicke battery in the symmetric S = N/2 sector: dimension (N_ph + 1)(N + 1).
inline ModelInstance build_dicke(const DickeConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_tls;
  const std::size_t nph = cfg.resolved_n_ph();
  SpaceLayout layout({{"cavity", nph + 1, true}, {"battery", n + 1, false}});

  const auto a = LinearOp::local(ops::annihilation(nph), false, "cavity", true);
  const auto x_field = LinearOp::local(a.matrix() + a.matrix().adjoint(), true, "cavity", true);
  const auto n_op = LinearOp::local(ops::number(nph), true, "cavity", true);
  const auto jz = LinearOp::local(ops::spin_z(n), true, "battery");
  const auto jx = LinearOp::local(ops::spin_x(n), true, "battery");

  const double w = cfg.omega;
  LinearOp h = w * embed(n_op, 0, layout) + w * embed(jz, 1, layout) +
               (2.0 * cfg.lambda_bar) * kron_compose({x_field, jx}, layout);

  ModelInstance m;
  m.label = "dicke";
  m.layout = layout;
  m.battery_subsystems = {1};
  m.cavity_subsystem = 0;
  m.h_total = std::move(h);
  m.h_battery = LinearOp::local(
      w * (ops::spin_z(n) + 0.5 * static_cast<double>(n) * ops::identity(n + 1)), true, "battery");
  m.h_battery_spectrum = detail::ladder_spectrum(w, n, ErgotropySpace::kFull);
  m.symmetric_spectrum = detail::ladder_spectrum(w, n, ErgotropySpace::kSymmetric);
  m.jump_op = std::sqrt(2.0 * cfg.kappa) * embed(a, 0, layout);
  const std::size_t digits[] = {n, 0};  // |N>_cavity |m = -N/2>
  m.initial_state = PureState::basis(layout, digits);
  m.rate_scale = std::max({w, cfg.lambda_bar, 2.0 * cfg.kappa});
  return m;
}

// Same Dicke battery on the full 2^N (N_ph + 1) space, one factor per
// emitter. Used to cross-check the ladder reduction; exponential in N.
inline ModelInstance build_dicke_full_space(const DickeConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_tls;
  const std::size_t nph = cfg.resolved_n_ph();
  std::vector<Subsystem> subs{{"cavity", nph + 1, true}};
  for (std::size_t i = 0; i < n; ++i) subs.push_back({"tls" + std::to_string(i), 2, false});
  SpaceLayout layout(subs);

  const auto a = LinearOp::local(ops::annihilation(nph), false, "cavity", true);
  const auto x_field = LinearOp::local(a.matrix() + a.matrix().adjoint(), true, "cavity", true);
  const auto n_op = LinearOp::local(ops::number(nph), true, "cavity", true);
  const auto sx = LinearOp::local(ops::pauli_x(), true);
  const auto sz = LinearOp::local(ops::pauli_z(), true);
  const auto excited = LinearOp::local(0.5 * (ops::pauli_z() + ops::identity(2)), true);

  const double w = cfg.omega;
  LinearOp h = w * embed(n_op, 0, layout);
  LinearOp field = embed(x_field, 0, layout);
  for (std::size_t i = 1; i <= n; ++i) {
    const LinearOp coupling(field.matrix() * embed(sx, i, layout).matrix(), layout, true);
    h = h + (0.5 * w) * embed(sz, i, layout) + cfg.lambda_bar * coupling;
  }

  std::vector<std::size_t> battery(n);
  for (std::size_t i = 0; i < n; ++i) battery[i] = i + 1;
  const SpaceLayout battery_layout = layout.select(battery);
  LinearOp hb = LinearOp(Matrix::Zero(static_cast<Eigen::Index>(battery_layout.total_dim()),
                                      static_cast<Eigen::Index>(battery_layout.total_dim())),
                         battery_layout, true);
  for (std::size_t i = 0; i < n; ++i) hb = hb + w * embed(excited, i, battery_layout);

  ModelInstance m;
  m.label = "dicke_full";
  m.layout = layout;
  m.battery_subsystems = battery;
  m.cavity_subsystem = 0;
  m.h_total = std::move(h);
  m.h_battery = std::move(hb);
  m.h_battery_spectrum = detail::ladder_spectrum(w, n, ErgotropySpace::kFull);
  m.jump_op = std::sqrt(2.0 * cfg.kappa) * embed(a, 0, layout);
  std::vector<std::size_t> digits(n + 1, 0);
  digits[0] = n;
  m.initial_state = PureState::basis(layout, digits);
  m.rate_scale = std::max({w, cfg.lambda_bar, 2.0 * cfg.kappa});
  return m;
}

// Constant-on protocol: the coupling is active for every t >= 0 and each
// sampled t is read out as a candidate disconnection time.
inline const LinearOp& charging_schedule(const ModelInstance& model, double t) {
  if (t < 0.0) throw std::invalid_argument("charging schedule queried at negative time");
  return model.h_total;
}

}  // namespace qbmon
