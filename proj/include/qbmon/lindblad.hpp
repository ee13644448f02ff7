#pragma once

// Unconditional dynamics: fixed-step RK4 on the Markovian master equation
//   d rho/dt = -i[H, rho] + c rho c^dagger - {c^dagger c, rho}/2
// integrated in matrix form, with states read out on a sampling grid that
// is independent of the integration step.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qbmon/errors.hpp"
#include "qbmon/hilbert.hpp"
#include "qbmon/models.hpp"
#include "qbmon/thermo.hpp"

namespace qbmon {

struct IntegratorOptions {
  double dt = 1e-3;
  std::vector<double> sampling_times;  // strictly increasing, starts at 0
  bool hermitize = true;
  double tolerance = 1e-6;  // step-halving target, absolute, units of omega
  bool keep_full_states = true;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt", "must be > 0");
    if (sampling_times.empty() || sampling_times.front() != 0.0) {
      throw ConfigError("sampling_times", "must start at 0");
    }
    for (std::size_t i = 1; i < sampling_times.size(); ++i) {
      if (!(sampling_times[i] > sampling_times[i - 1])) {
        throw ConfigError("sampling_times", "must be strictly increasing");
      }
    }
  }

  static IntegratorOptions uniform(double t_max, std::size_t n_samples, double dt) {
    if (!(t_max > 0.0)) throw ConfigError("t_max", "must be > 0");
    if (n_samples < 2) throw ConfigError("n_samples", "must be >= 2");
    IntegratorOptions o;
    o.dt = dt;
    o.sampling_times.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
      o.sampling_times[i] = t_max * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    }
    return o;
  }
};

inline double default_time_step(const ModelInstance& model) { return 1e-3 / model.rate_scale; }

// Number of equal sub-steps, each no longer than dt, covering `span`.
inline std::size_t substep_count(double span, double dt) {
  const double n = std::ceil(span / dt - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

// Right-hand side exactly as written, for any square rho.
inline Matrix lindblad_rhs(const Matrix& rho, const LinearOp& h, const LinearOp& c) {
  const auto d = static_cast<Eigen::Index>(h.dim());
  if (rho.rows() != d || rho.cols() != d || c.dim() != h.dim()) {
    throw DimensionError("lindblad_rhs: dimension mismatch");
  }
  const Complex i{0.0, 1.0};
  const Matrix& hm = h.matrix();
  const Matrix& cm = c.matrix();
  const Matrix cdc = cm.adjoint() * cm;
  return -i * (hm * rho - rho * hm) + cm * rho * cm.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

inline Matrix lindblad_rhs(const DensityOp& rho, const LinearOp& h, const LinearOp& c) {
  return lindblad_rhs(rho.matrix(), h, c);
}

// Sparse application of the Lindbladian to Hermitian rho:
//   L(rho) = G rho + (G rho)^dagger + c (c rho)^dagger,  G = -iH - c^dagger c / 2
class LindbladGenerator {
 public:
  LindbladGenerator(const LinearOp& h, const LinearOp& c) {
    if (c.dim() != h.dim()) throw DimensionError("Hamiltonian and jump operator dimensions differ");
    const Complex i{0.0, 1.0};
    const Matrix& cm = c.matrix();
    g_ = to_sparse(Matrix(-i * h.matrix() - 0.5 * (cm.adjoint() * cm)));
    c_ = to_sparse(cm);
    has_jump_ = c_.nonZeros() > 0;
    const auto d = static_cast<Eigen::Index>(h.dim());
    scratch_.resize(d, d);
    scratch2_.resize(d, d);
  }

  void apply(const RowMatrix& rho, RowMatrix& out) const {
    scratch_.noalias() = g_ * rho;
    out = scratch_ + scratch_.adjoint();
    if (has_jump_) {
      scratch_.noalias() = c_ * rho;
      scratch2_ = scratch_.adjoint();
      out.noalias() += c_ * scratch2_;
    }
  }

 private:
  SparseOp g_;
  SparseOp c_;
  bool has_jump_ = false;
  mutable RowMatrix scratch_;
  mutable RowMatrix scratch2_;
};

struct UnconditionalSeries {
  std::vector<double> times;
  std::vector<DensityOp> states;           // full system; empty unless keep_full_states
  std::vector<DensityOp> reduced_battery;
  std::map<std::string, std::vector<double>> observables;
};

namespace detail {

inline constexpr double kTraceRenorm = 1e-9;
inline constexpr double kTraceAbort = 1e-6;
inline constexpr double kPositivityAbort = 1e-6;

// Diagonal weights for cavity readouts: photon number and top-two-level mask.
struct CavityReadout {
  RealVector photons;
  RealVector tail;

  CavityReadout(const SpaceLayout& layout, std::size_t cavity) {
    const auto d = static_cast<Eigen::Index>(layout.total_dim());
    const std::size_t stride = layout.stride(cavity);
    const std::size_t dim_c = layout.dim(cavity);
    photons.resize(d);
    tail.resize(d);
    for (Eigen::Index g = 0; g < d; ++g) {
      const std::size_t n = (static_cast<std::size_t>(g) / stride) % dim_c;
      photons(g) = static_cast<double>(n);
      tail(g) = (n + 2 >= dim_c) ? 1.0 : 0.0;
    }
  }

  double mean_photons(const Matrix& rho) const { return rho.diagonal().real().dot(photons); }
  double tail_population(const Matrix& rho) const { return rho.diagonal().real().dot(tail); }
  double mean_photons(const Vector& psi) const { return psi.cwiseAbs2().dot(photons); }
  double tail_population(const Vector& psi) const { return psi.cwiseAbs2().dot(tail); }
};

}  // namespace detail

inline UnconditionalSeries evolve_unconditional(const ModelInstance& model,
                                                const IntegratorOptions& opts) {
  opts.validate();
  const LindbladGenerator gen(model.h_total, model.jump_op);
  const SubsystemReducer battery = model.battery_reducer();
  const detail::CavityReadout cavity(model.layout, model.cavity_subsystem);

  const Vector& psi0 = model.initial_state.amplitudes();
  RowMatrix rho = psi0 * psi0.adjoint();
  const auto d = rho.rows();
  RowMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);

  UnconditionalSeries out;
  auto& trace_obs = out.observables["trace"];
  auto& mineig_obs = out.observables["min_eigenvalue"];
  auto& photons_obs = out.observables["cavity_photons"];
  auto& tail_obs = out.observables["fock_tail"];

  auto record = [&](double t) {
    const Matrix rho_c = rho;
    const double min_eig = hermitian_eigenvalues(rho_c).minCoeff();
    if (min_eig < -detail::kPositivityAbort) {
      throw NumericalError("master equation lost positivity at t=" + std::to_string(t) +
                           " (min eigenvalue " + std::to_string(min_eig) + "); reduce dt");
    }
    out.times.push_back(t);
    trace_obs.push_back(rho.trace().real());
    mineig_obs.push_back(min_eig);
    photons_obs.push_back(cavity.mean_photons(rho_c));
    tail_obs.push_back(cavity.tail_population(rho_c));
    out.reduced_battery.push_back(DensityOp::trusted(battery.reduce(rho_c), battery.kept_layout()));
    if (opts.keep_full_states) out.states.push_back(DensityOp::trusted(rho_c, model.layout));
  };

  record(0.0);
  double t = 0.0;
  for (std::size_t s = 1; s < opts.sampling_times.size(); ++s) {
    const double target = opts.sampling_times[s];
    const std::size_t n = substep_count(target - t, opts.dt);
    const double h = (target - t) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      gen.apply(rho, k1);
      tmp = rho + (0.5 * h) * k1;
      gen.apply(tmp, k2);
      tmp = rho + (0.5 * h) * k2;
      gen.apply(tmp, k3);
      tmp = rho + h * k3;
      gen.apply(tmp, k4);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (opts.hermitize) {
        tmp = 0.5 * (rho + rho.adjoint());
        rho.swap(tmp);
      }
      const double tr = rho.trace().real();
      if (std::abs(tr - 1.0) > detail::kTraceAbort) {
        throw NumericalError("master equation trace drifted to " + std::to_string(tr) +
                             " near t=" + std::to_string(t + h * static_cast<double>(k + 1)) +
                             "; reduce dt");
      }
      if (std::abs(tr - 1.0) > detail::kTraceRenorm) rho /= tr;
    }
    t = target;
    record(t);
  }
  return out;
}

struct StepHalvingReport {
  double max_abs_diff = 0.0;  // over battery energy, battery state entries, cavity photons
  double tolerance = 0.0;
  bool converged = false;
};

// Re-runs at dt/2 and compares every sampled observable against the dt run.
inline StepHalvingReport check_step_halving(const ModelInstance& model, IntegratorOptions opts) {
  opts.keep_full_states = false;
  const auto coarse = evolve_unconditional(model, opts);
  opts.dt *= 0.5;
  const auto fine = evolve_unconditional(model, opts);
  StepHalvingReport r;
  r.tolerance = opts.tolerance;
  for (std::size_t i = 0; i < coarse.times.size(); ++i) {
    const Matrix& a = coarse.reduced_battery[i].matrix();
    const Matrix& b = fine.reduced_battery[i].matrix();
    r.max_abs_diff = std::max(r.max_abs_diff, (a - b).cwiseAbs().maxCoeff());
    r.max_abs_diff = std::max(r.max_abs_diff, std::abs(battery_energy(a, model.h_battery) -
                                                       battery_energy(b, model.h_battery)));
    r.max_abs_diff = std::max(r.max_abs_diff, std::abs(coarse.observables.at("cavity_photons")[i] -
                                                       fine.observables.at("cavity_photons")[i]));
  }
  r.converged = r.max_abs_diff < r.tolerance;
  return r;
}

}  // namespace qbmon
