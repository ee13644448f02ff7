#pragma once

// Conditional dynamics under unit-efficiency continuous monitoring of the
// jump channel c:
//   - photodetection: jump unraveling, sampled with the waiting-time
//     (Monte Carlo wavefunction) algorithm;
//   - homodyne: diffusive unraveling, Euler-Maruyama with per-step
//     renormalization and c -> exp(-i theta) c in the back-action.
// Ensembles draw trajectory i from RNG stream (master_seed, i) and reduce
// in trajectory-index order, so results do not depend on the thread count.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "qbmon/errors.hpp"
#include "qbmon/hilbert.hpp"
#include "qbmon/lindblad.hpp"
#include "qbmon/models.hpp"
#include "qbmon/parallel.hpp"
#include "qbmon/rng.hpp"
#include "qbmon/thermo.hpp"

namespace qbmon {

struct Photodetection {};

struct Homodyne {
  double theta = 0.0;  // local-oscillator phase, [0, 2 pi)
};

using UnravelingKind = std::variant<Photodetection, Homodyne>;

inline std::string unraveling_name(const UnravelingKind& k) {
  return std::holds_alternative<Photodetection>(k) ? "pd" : "hd";
}

enum class PdScheme {
  kWaitingTime,    // default
  kEulerIncrement  // debug: one Bernoulli dN per step, first order in dt
};

struct TrajectoryOptions {
  PdScheme pd_scheme = PdScheme::kWaitingTime;
  bool keep_global_states = false;
  bool keep_photocurrent = true;
  std::size_t photocurrent_stride = 1;  // HD: sum dy over this many steps per entry
  bool keep_noise = false;              // HD: keep every dw
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<double> times;
  std::vector<DensityOp> conditional_battery_states;
  std::vector<PureState> global_states;  // only with keep_global_states
  std::vector<double> cavity_photons;    // conditional <a^dagger a> per sample
  std::vector<double> fock_tail;         // conditional top-two-level population per sample

  std::vector<double> jump_times;  // PD, strictly increasing

  std::vector<double> photocurrent;     // HD: dy per entry
  std::vector<double> photocurrent_dt;  // HD: time covered by each entry
  std::vector<double> wiener_increments;
  std::vector<double> wiener_dt;

  double norms_check = 0.0;          // max |norm - 1| of sampled conditional states
  double max_step_norm_defect = 0.0;  // HD: largest pre-renormalization defect
};

class TrajectoryError : public NumericalError {
 public:
  TrajectoryError(std::size_t index, const std::string& what)
      : NumericalError("trajectory " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

namespace detail {

inline constexpr double kHdNormAbort = 0.1;
// Steps whose norm defect exceeds this are split in two along a Brownian bridge.
inline constexpr double kHdNormRefine = 0.02;
inline constexpr int kHdMaxRefine = 8;

// Sparse generators shared read-only by all trajectories of a run.
class TrajectoryKernel {
 public:
  TrajectoryKernel(const ModelInstance& model, double theta = 0.0)
      : reducer_(model.battery_reducer()), cavity_(model.layout, model.cavity_subsystem),
        layout_(model.layout) {
    const Complex i{0.0, 1.0};
    const Matrix& c = model.jump_op.matrix();
    g_ = to_sparse(Matrix(-i * model.h_total.matrix() - 0.5 * (c.adjoint() * c)));
    c_ = to_sparse(c);
    c_theta_ = to_sparse(Matrix(std::exp(-i * theta) * c));
    has_jump_ = c_.nonZeros() > 0;
  }

  struct Workspace {
    Vector k1, k2, k3, k4, tmp;
    explicit Workspace(Eigen::Index d) : k1(d), k2(d), k3(d), k4(d), tmp(d) {}
  };

  // One RK4 step of d psi/dt = G psi, G = -i H - c^dagger c / 2.
  void rk4(const Vector& psi, double h, Vector& out, Workspace& w) const {
    w.k1.noalias() = g_ * psi;
    w.tmp = psi + (0.5 * h) * w.k1;
    w.k2.noalias() = g_ * w.tmp;
    w.tmp = psi + (0.5 * h) * w.k2;
    w.k3.noalias() = g_ * w.tmp;
    w.tmp = psi + h * w.k3;
    w.k4.noalias() = g_ * w.tmp;
    out = psi + (h / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
  }

  const SparseOp& jump() const { return c_; }
  const SparseOp& jump_theta() const { return c_theta_; }
  const SparseOp& generator() const { return g_; }
  bool has_jump() const { return has_jump_; }
  const SubsystemReducer& reducer() const { return reducer_; }
  const CavityReadout& cavity() const { return cavity_; }
  const SpaceLayout& layout() const { return layout_; }

 private:
  SparseOp g_, c_, c_theta_;
  bool has_jump_ = false;
  SubsystemReducer reducer_;
  CavityReadout cavity_;
  SpaceLayout layout_;
};

inline void sample_state(const TrajectoryKernel& k, const Vector& psi_unnormalized, double t,
                         const TrajectoryOptions& topts, TrajectoryRecord& rec) {
  Vector psi = psi_unnormalized / psi_unnormalized.norm();
  rec.times.push_back(t);
  rec.norms_check = std::max(rec.norms_check, std::abs(psi.norm() - 1.0));
  rec.conditional_battery_states.push_back(
      DensityOp::trusted(k.reducer().reduce(psi), k.reducer().kept_layout()));
  rec.cavity_photons.push_back(k.cavity().mean_photons(psi));
  rec.fock_tail.push_back(k.cavity().tail_population(psi));
  if (topts.keep_global_states) rec.global_states.emplace_back(std::move(psi), k.layout());
}

inline void check_theta(double theta) {
  if (!(theta >= 0.0 && theta < 2.0 * std::numbers::pi)) {
    throw ConfigError("theta", "local-oscillator phase must lie in [0, 2pi)");
  }
}

inline TrajectoryRecord pd_trajectory(const TrajectoryKernel& k, const ModelInstance& model,
                                      const IntegratorOptions& opts, RngStream rng,
                                      const TrajectoryOptions& topts) {
  TrajectoryRecord rec;
  rec.seed = rng.seed();
  rec.stream = rng.stream();
  Vector psi = model.initial_state.amplitudes();
  Vector next(psi.size()), probe(psi.size());
  TrajectoryKernel::Workspace ws(psi.size());

  auto apply_jump = [&](const Vector& at, double when) {
    Vector jumped = k.jump() * at;
    const double n2 = jumped.squaredNorm();
    if (!(n2 > 1e-300) || n2 < 1e-30 * at.squaredNorm()) {
      throw NumericalError("jump demanded at t=" + std::to_string(when) +
                           " but c|psi> vanishes");
    }
    psi = jumped / std::sqrt(n2);
    if (!rec.jump_times.empty() && !(when > rec.jump_times.back())) {
      throw NumericalError("jump times not strictly increasing; reduce dt");
    }
    rec.jump_times.push_back(when);
  };

  double threshold = rng.uniform_open();
  double t = 0.0;
  sample_state(k, psi, 0.0, topts, rec);
  for (std::size_t s = 1; s < opts.sampling_times.size(); ++s) {
    const double target = opts.sampling_times[s];
    const std::size_t n = substep_count(target - t, opts.dt);
    const double h = (target - t) / static_cast<double>(n);
    for (std::size_t step = 0; step < n; ++step) {
      const double t_end = t + h * static_cast<double>(step + 1);
      double t0 = t + h * static_cast<double>(step);
      if (!k.has_jump()) {
        k.rk4(psi, h, next, ws);
        psi.swap(next);
        continue;
      }
      if (topts.pd_scheme == PdScheme::kEulerIncrement) {
        const double p = (k.jump() * psi).squaredNorm() / psi.squaredNorm() * h;
        if (rng.uniform_open() < p) {
          apply_jump(psi, t_end);
        } else {
          k.rk4(psi, h, next, ws);
          psi = next / next.norm();
        }
        continue;
      }
      // Waiting-time: jump when the no-jump norm^2 crosses the threshold.
      double remaining = t_end - t0;
      while (remaining > 0.0) {
        k.rk4(psi, remaining, next, ws);
        if (next.squaredNorm() > threshold) {
          psi.swap(next);
          break;
        }
        double lo = 0.0, hi = remaining;
        for (int it = 0; it < 60 && (hi - lo) > 1e-15 * (1.0 + t0); ++it) {
          const double mid = 0.5 * (lo + hi);
          k.rk4(psi, mid, probe, ws);
          if (probe.squaredNorm() > threshold) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        k.rk4(psi, hi, probe, ws);
        apply_jump(probe, t0 + hi);
        threshold = rng.uniform_open();
        t0 += hi;
        remaining = t_end - t0;
      }
    }
    t = target;
    sample_state(k, psi, t, topts, rec);
  }
  return rec;
}

inline TrajectoryRecord hd_trajectory(const TrajectoryKernel& k, const ModelInstance& model,
                                      const IntegratorOptions& opts, RngStream rng,
                                      const TrajectoryOptions& topts) {
  TrajectoryRecord rec;
  rec.seed = rng.seed();
  rec.stream = rng.stream();
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t stride = std::max<std::size_t>(1, topts.photocurrent_stride);

  Vector psi = model.initial_state.amplitudes();
  Vector c_psi(psi.size()), v(psi.size()), w(psi.size()), acc(psi.size());
  double dy_acc = 0.0, dt_acc = 0.0;
  std::size_t in_stride = 0;

  // Drift operator with the expectation frozen at the step start:
  //   A = G + (x/2) c_theta - (x^2/8),  x = <c_theta + c_theta^dagger>
  auto apply_drift = [&](const Vector& in, double x, Vector& out) {
    out.noalias() = k.generator() * in;
    if (k.has_jump()) {
      out.noalias() += (0.5 * x) * (k.jump_theta() * in);
      out -= (0.125 * x * x) * in;
    }
  };

  auto record = [&](double x, double h, double dw) {
    const double dy = x * h + dw;
    if (topts.keep_noise) {
      rec.wiener_increments.push_back(dw);
      rec.wiener_dt.push_back(h);
    }
    if (topts.keep_photocurrent) {
      dy_acc += dy;
      dt_acc += h;
      if (++in_stride == stride) {
        rec.photocurrent.push_back(dy_acc);
        rec.photocurrent_dt.push_back(dt_acc);
        dy_acc = dt_acc = 0.0;
        in_stride = 0;
      }
    }
  };

  // One step of length h driven by the Wiener increment dw.
  auto advance = [&](auto& self, Vector& state, double t0, double h, double dw, int depth) -> void {
    c_psi.noalias() = k.jump_theta() * state;
    const double x = 2.0 * state.dot(c_psi).real();
    // Deterministic part: 4th-order Taylor propagator of the frozen drift.
    acc = state;
    v = state;
    for (int order = 1; order <= 4; ++order) {
      apply_drift(v, x, w);
      v = (h / static_cast<double>(order)) * w;
      acc += v;
    }
    if (k.has_jump()) acc.noalias() += dw * (c_psi - (0.5 * x) * state);
    const double norm = acc.norm();
    const double defect = std::abs(norm - 1.0);
    if (defect > kHdNormRefine && depth < kHdMaxRefine) {
      const double dw1 = 0.5 * dw + 0.5 * std::sqrt(h) * gauss(rng);
      self(self, state, t0, 0.5 * h, dw1, depth + 1);
      self(self, state, t0 + 0.5 * h, 0.5 * h, dw - dw1, depth + 1);
      return;
    }
    rec.max_step_norm_defect = std::max(rec.max_step_norm_defect, defect);
    if (defect > kHdNormAbort) {
      throw NumericalError("homodyne step changed the norm by " + std::to_string(defect) +
                           " near t=" + std::to_string(t0) + "; reduce dt");
    }
    state = acc / norm;
    record(x, h, dw);
  };

  double t = 0.0;
  sample_state(k, psi, 0.0, topts, rec);
  for (std::size_t s = 1; s < opts.sampling_times.size(); ++s) {
    const double target = opts.sampling_times[s];
    const std::size_t n = substep_count(target - t, opts.dt);
    const double h = (target - t) / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);
    for (std::size_t step = 0; step < n; ++step) {
      advance(advance, psi, t + h * static_cast<double>(step), h, sqrt_h * gauss(rng), 0);
    }
    t = target;
    sample_state(k, psi, t, topts, rec);
  }
  if (topts.keep_photocurrent && in_stride > 0) {
    rec.photocurrent.push_back(dy_acc);
    rec.photocurrent_dt.push_back(dt_acc);
  }
  return rec;
}

}  // namespace detail

inline TrajectoryRecord run_pd_trajectory(const ModelInstance& model, const IntegratorOptions& opts,
                                          std::uint64_t seed, std::uint64_t stream = 0,
                                          const TrajectoryOptions& topts = {}) {
  opts.validate();
  const detail::TrajectoryKernel k(model);
  return detail::pd_trajectory(k, model, opts, RngStream(seed, stream), topts);
}

inline TrajectoryRecord run_hd_trajectory(const ModelInstance& model, const IntegratorOptions& opts,
                                          double theta, std::uint64_t seed,
                                          std::uint64_t stream = 0,
                                          const TrajectoryOptions& topts = {}) {
  opts.validate();
  detail::check_theta(theta);
  const detail::TrajectoryKernel k(model, theta);
  return detail::hd_trajectory(k, model, opts, RngStream(seed, stream), topts);
}

struct EnsembleOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
  ErgotropySpace ergotropy_space = ErgotropySpace::kFull;
  bool keep_global_average = false;
  bool keep_samples = false;  // per-trajectory ergotropy matrix
  TrajectoryOptions trajectory;
};

struct EnsembleSummary {
  std::size_t n_traj = 0;
  std::vector<double> times;
  std::vector<SampleStats> ergotropy;  // daemonic ergotropy with its spread
  std::vector<SampleStats> energy;
  std::vector<SampleStats> purity;
  std::vector<SampleStats> cavity_photons;
  std::vector<Matrix> mean_battery_state;
  std::vector<Matrix> mean_global_state;          // only with keep_global_average
  std::vector<std::vector<double>> ergotropy_samples;  // [time][trajectory], only with keep_samples
  SampleStats jumps;                              // PD jump counts per trajectory
  double max_fock_tail = 0.0;
  double max_norm_defect = 0.0;
};

namespace detail {
inline constexpr std::size_t kEnsembleBlock = 32;
}

inline EnsembleSummary run_ensemble(const ModelInstance& model, const IntegratorOptions& opts,
                                    const UnravelingKind& kind, std::size_t n_traj,
                                    std::uint64_t master_seed, const EnsembleOptions& eopts = {}) {
  if (n_traj < 1) throw ConfigError("n_traj", "must be >= 1");
  opts.validate();
  const bool homodyne = std::holds_alternative<Homodyne>(kind);
  const double theta = homodyne ? std::get<Homodyne>(kind).theta : 0.0;
  detail::check_theta(theta);
  const detail::TrajectoryKernel k(model, theta);
  const BatterySpectrum& spectrum = model.spectrum(eopts.ergotropy_space);

  TrajectoryOptions topts = eopts.trajectory;
  topts.keep_global_states = eopts.keep_global_average;
  topts.keep_photocurrent = false;
  topts.keep_noise = false;

  const std::size_t n_times = opts.sampling_times.size();
  std::vector<std::vector<double>> erg(n_times, std::vector<double>(n_traj));
  std::vector<std::vector<double>> energy(n_times, std::vector<double>(n_traj));
  std::vector<std::vector<double>> pur(n_times, std::vector<double>(n_traj));
  std::vector<std::vector<double>> photons(n_times, std::vector<double>(n_traj));
  std::vector<double> jump_counts(n_traj, 0.0);

  EnsembleSummary out;
  out.n_traj = n_traj;
  const auto db = static_cast<Eigen::Index>(model.h_battery.dim());
  const auto dg = static_cast<Eigen::Index>(model.layout.total_dim());
  out.mean_battery_state.assign(n_times, Matrix::Zero(db, db));
  if (eopts.keep_global_average) out.mean_global_state.assign(n_times, Matrix::Zero(dg, dg));

  std::vector<TrajectoryRecord> block(detail::kEnsembleBlock);
  for (std::size_t start = 0; start < n_traj; start += detail::kEnsembleBlock) {
    const std::size_t stop = std::min(n_traj, start + detail::kEnsembleBlock);
    parallel_for(start, stop, eopts.threads, [&](std::size_t i) {
      try {
        RngStream rng(master_seed, i);
        auto rec = homodyne ? detail::hd_trajectory(k, model, opts, rng, topts)
                            : detail::pd_trajectory(k, model, opts, rng, topts);
        for (std::size_t s = 0; s < n_times; ++s) {
          const Matrix& rho = rec.conditional_battery_states[s].matrix();
          erg[s][i] = ergotropy(rho, model.h_battery, spectrum);
          energy[s][i] = battery_energy(rho, model.h_battery);
          pur[s][i] = purity(rho);
          photons[s][i] = rec.cavity_photons[s];
        }
        jump_counts[i] = static_cast<double>(rec.jump_times.size());
        block[i - start] = std::move(rec);
      } catch (const TrajectoryError&) {
        throw;
      } catch (const std::exception& e) {
        throw TrajectoryError(i, e.what());
      }
    });
    // Fixed-order reduction.
    for (std::size_t i = start; i < stop; ++i) {
      auto& rec = block[i - start];
      for (std::size_t s = 0; s < n_times; ++s) {
        out.mean_battery_state[s] += rec.conditional_battery_states[s].matrix();
        if (eopts.keep_global_average) {
          const Vector& a = rec.global_states[s].amplitudes();
          out.mean_global_state[s].noalias() += a * a.adjoint();
        }
        out.max_fock_tail = std::max(out.max_fock_tail, rec.fock_tail[s]);
      }
      out.max_norm_defect = std::max(out.max_norm_defect, rec.norms_check);
      rec = TrajectoryRecord{};
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n_traj);
  out.times = opts.sampling_times;
  for (std::size_t s = 0; s < n_times; ++s) {
    out.mean_battery_state[s] *= inv_n;
    if (eopts.keep_global_average) out.mean_global_state[s] *= inv_n;
    out.ergotropy.push_back(sample_stats(erg[s]));
    out.energy.push_back(sample_stats(energy[s]));
    out.purity.push_back(sample_stats(pur[s]));
    out.cavity_photons.push_back(sample_stats(photons[s]));
  }
  out.jumps = sample_stats(jump_counts);
  if (eopts.keep_samples) out.ergotropy_samples = std::move(erg);
  return out;
}

}  // namespace qbmon
