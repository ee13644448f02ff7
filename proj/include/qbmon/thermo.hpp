#pragma once

// Work-extraction figures of merit for a battery reduced state: stored
// energy, ergotropy through the passive state, daemonic ergotropy of a
// conditional ensemble, daemonic efficiency, charging power, and the
// enhancement ratio over the dissipation-free ergotropy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qbmon/errors.hpp"
#include "qbmon/hilbert.hpp"

namespace qbmon {

enum class ErgotropySpace {
  kFull,       // every unitary on the physical battery (binomial degeneracies for N spins)
  kSymmetric,  // unitaries restricted to the simulated ladder subspace
};

struct EnergyLevel {
  double energy = 0.0;
  std::size_t multiplicity = 1;
};

// Battery Hamiltonian spectrum with degeneracies, energies ascending.
class BatterySpectrum {
 public:
  BatterySpectrum() = default;

  BatterySpectrum(std::vector<EnergyLevel> levels, ErgotropySpace space)
      : levels_(std::move(levels)), space_(space) {
    if (levels_.empty()) throw InvariantError("battery spectrum is empty");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (levels_[i].multiplicity == 0) throw InvariantError("level multiplicity must be >= 1");
      if (i > 0 && !(levels_[i].energy > levels_[i - 1].energy)) {
        throw InvariantError("battery spectrum energies must be strictly ascending");
      }
    }
  }

  const std::vector<EnergyLevel>& levels() const noexcept { return levels_; }
  ErgotropySpace space() const noexcept { return space_; }

  std::size_t total_multiplicity() const {
    std::size_t n = 0;
    for (const auto& l : levels_) n += l.multiplicity;
    return n;
  }

  bool ground_shifted() const { return std::abs(levels_.front().energy) <= 1e-12; }

  BatterySpectrum shifted(double offset) const {
    auto lv = levels_;
    for (auto& l : lv) l.energy += offset;
    return BatterySpectrum(std::move(lv), space_);
  }

 private:
  std::vector<EnergyLevel> levels_;
  ErgotropySpace space_ = ErgotropySpace::kFull;
};

namespace detail {
inline constexpr double kClampTol = 1e-10;
inline constexpr double kRankTol = 1e-12;
}  // namespace detail

// Tr[H_B rho_B]
inline double battery_energy(const Matrix& rho_b, const LinearOp& h_battery) {
  if (rho_b.rows() != static_cast<Eigen::Index>(h_battery.dim())) {
    throw DimensionError("battery state and battery Hamiltonian dimensions differ");
  }
  return (h_battery.matrix().cwiseProduct(rho_b.transpose())).sum().real();
}

inline double battery_energy(const DensityOp& rho_b, const LinearOp& h_battery) {
  return battery_energy(rho_b.matrix(), h_battery);
}

// Lowest energy reachable by unitaries: populations sorted descending are
// paired with energies (expanded by multiplicity) sorted ascending.
inline double passive_energy(RealVector populations, const BatterySpectrum& spectrum) {
  std::sort(populations.data(), populations.data() + populations.size(), std::greater<>());
  double e = 0.0;
  Eigen::Index j = 0;
  for (const auto& level : spectrum.levels()) {
    for (std::size_t m = 0; m < level.multiplicity && j < populations.size(); ++m, ++j) {
      e += populations(j) * level.energy;
    }
    if (j == populations.size()) return e;
  }
  // Spectrum exhausted: remaining populations must vanish.
  for (; j < populations.size(); ++j) {
    if (std::abs(populations(j)) > detail::kRankTol) {
      throw DimensionError("battery spectrum has fewer levels than the rank of the battery state");
    }
  }
  return e;
}

inline double ergotropy(const Matrix& rho_b, const LinearOp& h_battery,
                        const BatterySpectrum& spectrum) {
  const double energy = battery_energy(rho_b, h_battery);
  const double passive = passive_energy(hermitian_eigenvalues(rho_b), spectrum);
  const double erg = energy - passive;
  if (erg < 0.0) {
    if (erg < -detail::kClampTol) {
      throw NumericalError("negative ergotropy " + std::to_string(erg) +
                           ": battery Hamiltonian and spectrum are inconsistent");
    }
    return 0.0;
  }
  return erg;
}

inline double ergotropy(const DensityOp& rho_b, const LinearOp& h_battery,
                        const BatterySpectrum& spectrum) {
  return ergotropy(rho_b.matrix(), h_battery, spectrum);
}

// Sample mean with the unbiased (n - 1) standard deviation; std = 0 for n = 1.
struct SampleStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;

  // 3 standard errors of the mean.
  double mc_tol() const { return n > 0 ? 3.0 * std / std::sqrt(static_cast<double>(n)) : 0.0; }
};

inline SampleStats sample_stats(std::span<const double> values) {
  SampleStats s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

// Per sampled time, the ensemble mean and spread of conditional ergotropies.
// conditional_states[time][trajectory].
inline std::vector<SampleStats> daemonic_ergotropy(
    std::span<const std::vector<DensityOp>> conditional_states, const LinearOp& h_battery,
    const BatterySpectrum& spectrum) {
  std::vector<SampleStats> out;
  out.reserve(conditional_states.size());
  std::vector<double> values;
  for (const auto& ensemble : conditional_states) {
    if (ensemble.empty()) throw std::invalid_argument("daemonic ergotropy of an empty ensemble");
    values.clear();
    for (const auto& rho : ensemble) values.push_back(ergotropy(rho, h_battery, spectrum));
    out.push_back(sample_stats(values));
  }
  return out;
}

struct Efficiency {
  double eta = 0.0;
  bool degenerate = false;  // E == ergotropy: no passive energy to unlock
};

// eta = (daemonic - ergotropy) / (energy - ergotropy)
inline Efficiency daemonic_efficiency(double daemonic, double ergotropy_uncond, double energy) {
  const double denom = energy - ergotropy_uncond;
  if (denom < 1e-12) return {0.0, true};
  return {(daemonic - ergotropy_uncond) / denom, false};
}

struct DaemonicMetrics {
  double daemonic_ergotropy = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  double unconditional_ergotropy = 0.0;
  double unconditional_energy = 0.0;
  Efficiency efficiency;
  std::optional<double> enhancement_ratio;

  double mc_tol() const { return SampleStats{daemonic_ergotropy, std, n}.mc_tol(); }

  // ergotropy - mc_tol <= daemonic <= energy + mc_tol
  bool within_bounds(double slack = 0.0) const {
    const double t = mc_tol() + slack;
    return daemonic_ergotropy >= unconditional_ergotropy - t &&
           daemonic_ergotropy <= unconditional_energy + t;
  }
};

inline constexpr double kRatioFloor = 1e-9;

// daemonic / eps0; empty where eps0 is below kRatioFloor.
inline std::optional<double> enhancement_ratio(double daemonic, double eps0) {
  if (std::abs(eps0) < kRatioFloor) return std::nullopt;
  return daemonic / eps0;
}

inline std::vector<std::optional<double>> enhancement_ratio(std::span<const double> daemonic,
                                                            std::span<const double> eps0) {
  if (daemonic.size() != eps0.size()) throw std::invalid_argument("enhancement ratio: series not aligned");
  std::vector<std::optional<double>> out;
  out.reserve(daemonic.size());
  for (std::size_t i = 0; i < daemonic.size(); ++i) out.push_back(enhancement_ratio(daemonic[i], eps0[i]));
  return out;
}

inline std::vector<DaemonicMetrics> daemonic_metrics(std::span<const SampleStats> daemonic,
                                                     std::span<const double> ergotropy_uncond,
                                                     std::span<const double> energy_uncond,
                                                     std::span<const double> eps0 = {}) {
  if (daemonic.size() != ergotropy_uncond.size() || daemonic.size() != energy_uncond.size() ||
      (!eps0.empty() && eps0.size() != daemonic.size())) {
    throw std::invalid_argument("daemonic metrics: series not aligned");
  }
  std::vector<DaemonicMetrics> out(daemonic.size());
  for (std::size_t i = 0; i < daemonic.size(); ++i) {
    auto& m = out[i];
    m.daemonic_ergotropy = daemonic[i].mean;
    m.std = daemonic[i].std;
    m.n = daemonic[i].n;
    m.unconditional_ergotropy = ergotropy_uncond[i];
    m.unconditional_energy = energy_uncond[i];
    m.efficiency = daemonic_efficiency(m.daemonic_ergotropy, ergotropy_uncond[i], energy_uncond[i]);
    if (!eps0.empty()) m.enhancement_ratio = enhancement_ratio(m.daemonic_ergotropy, eps0[i]);
  }
  return out;
}

// P(tau) = E(tau) / tau, with P(0) = 0.
inline std::vector<double> charging_power(std::span<const double> energy,
                                          std::span<const double> times) {
  if (energy.size() != times.size()) throw std::invalid_argument("charging power: series not aligned");
  std::vector<double> p(energy.size(), 0.0);
  for (std::size_t i = 0; i < energy.size(); ++i) {
    if (times[i] > 0.0) p[i] = energy[i] / times[i];
  }
  return p;
}

}  // namespace qbmon
