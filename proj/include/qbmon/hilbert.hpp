#pragma once

// Dense complex linear algebra on tensor-product Hilbert spaces.
//
// Index convention: for a layout (d_0, d_1, ..., d_{n-1}) the basis state
// |i_0 i_1 ... i_{n-1}> sits at flat index sum_k i_k * stride_k with the
// LAST subsystem varying fastest, i.e. kron(A, B) acts as A on factor 0.
// Two-level factors use the basis (|down>, |up>) = (ground, excited).

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qbmon/errors.hpp"

namespace qbmon {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
// Row-major storage makes sparse * dense products row axpys; used in hot loops.
using RowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;
using SparseOp = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

namespace tol {
inline constexpr double kNorm = 1e-10;
inline constexpr double kHermitian = 1e-10;
inline constexpr double kTrace = 1e-8;
inline constexpr double kPositivity = 1e-8;
}  // namespace tol

struct Subsystem {
  std::string name;
  std::size_t dim = 0;
  bool fock = false;  // truncated bosonic mode; may have dimension 1
};

class SpaceLayout {
 public:
  SpaceLayout() = default;

  explicit SpaceLayout(std::vector<Subsystem> subsystems)
      : subsystems_(std::move(subsystems)) {
    if (subsystems_.empty()) throw DimensionError("layout needs at least one subsystem");
    dims_.reserve(subsystems_.size());
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
      const auto& s = subsystems_[i];
      const std::size_t min_dim = s.fock ? 1 : 2;
      if (s.dim < min_dim) {
        throw DimensionError("subsystem '" + s.name + "' has dimension " +
                                 std::to_string(s.dim) + " < " + std::to_string(min_dim),
                             i);
      }
      dims_.push_back(s.dim);
      total_ *= s.dim;
    }
  }

  static SpaceLayout of_dims(const std::vector<std::size_t>& dims) {
    std::vector<Subsystem> subs;
    subs.reserve(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
      subs.push_back({"s" + std::to_string(i), dims[i], false});
    }
    return SpaceLayout(std::move(subs));
  }

  static SpaceLayout single(std::size_t dim, std::string name = "s0", bool fock = false) {
    return SpaceLayout({Subsystem{std::move(name), dim, fock}});
  }

  std::size_t size() const noexcept { return subsystems_.size(); }
  std::size_t total_dim() const noexcept { return total_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const Subsystem& subsystem(std::size_t i) const { return subsystems_.at(i); }
  std::size_t dim(std::size_t i) const { return subsystems_.at(i).dim; }

  // Flat-index stride of subsystem i (last subsystem has stride 1).
  std::size_t stride(std::size_t i) const {
    std::size_t s = 1;
    for (std::size_t k = i + 1; k < dims_.size(); ++k) s *= dims_[k];
    return s;
  }

  // Sub-layout made of the given subsystems, in the given order.
  SpaceLayout select(std::span<const std::size_t> indices) const {
    std::vector<Subsystem> subs;
    for (auto i : indices) {
      if (i >= size()) throw DimensionError("subsystem index out of range", i);
      subs.push_back(subsystems_[i]);
    }
    return SpaceLayout(std::move(subs));
  }

  // Flat index of a product basis state.
  std::size_t flat_index(std::span<const std::size_t> digits) const {
    if (digits.size() != size()) throw DimensionError("basis label has wrong length");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < size(); ++k) {
      if (digits[k] >= dims_[k]) throw DimensionError("basis label out of range", k);
      idx = idx * dims_[k] + digits[k];
    }
    return idx;
  }

  friend bool operator==(const SpaceLayout& a, const SpaceLayout& b) { return a.dims_ == b.dims_; }

 private:
  std::vector<Subsystem> subsystems_;
  std::vector<std::size_t> dims_;
  std::size_t total_ = 1;
};

inline double hermiticity_defect(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// rho <- (rho + rho^dagger) / 2
inline void hermitize(Matrix& m) {
  Matrix h = 0.5 * (m + m.adjoint());
  m = std::move(h);
}

inline RealVector hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

class LinearOp {
 public:
  LinearOp() = default;

  LinearOp(Matrix matrix, SpaceLayout layout, bool hermitian = false)
      : matrix_(std::move(matrix)), layout_(std::move(layout)), hermitian_(hermitian) {
    const auto d = static_cast<Eigen::Index>(layout_.total_dim());
    if (matrix_.rows() != d || matrix_.cols() != d) {
      throw DimensionError("operator shape " + std::to_string(matrix_.rows()) + "x" +
                           std::to_string(matrix_.cols()) + " does not match layout dimension " +
                           std::to_string(d));
    }
    if (hermitian_ && hermiticity_defect(matrix_) > tol::kHermitian) {
      throw InvariantError("operator flagged Hermitian is not Hermitian");
    }
  }

  // Operator on a single-subsystem space.
  static LinearOp local(Matrix matrix, bool hermitian = false, std::string name = "s0",
                        bool fock = false) {
    const auto d = static_cast<std::size_t>(matrix.rows());
    return LinearOp(std::move(matrix), SpaceLayout::single(d, std::move(name), fock), hermitian);
  }

  const Matrix& matrix() const noexcept { return matrix_; }
  const SpaceLayout& layout() const noexcept { return layout_; }
  std::size_t dim() const noexcept { return layout_.total_dim(); }
  bool hermitian() const noexcept { return hermitian_; }

  LinearOp adjoint() const { return LinearOp(matrix_.adjoint(), layout_, hermitian_); }

  friend LinearOp operator+(const LinearOp& a, const LinearOp& b) {
    if (!(a.layout_ == b.layout_)) throw DimensionError("operator sum over different layouts");
    return LinearOp(a.matrix_ + b.matrix_, a.layout_, a.hermitian_ && b.hermitian_);
  }

  friend LinearOp operator*(double s, const LinearOp& a) {
    return LinearOp(s * a.matrix_, a.layout_, a.hermitian_);
  }

  friend LinearOp operator*(const LinearOp& a, const LinearOp& b) {
    if (!(a.layout_ == b.layout_)) throw DimensionError("operator product over different layouts");
    return LinearOp(a.matrix_ * b.matrix_, a.layout_, false);
  }

 private:
  Matrix matrix_;
  SpaceLayout layout_;
  bool hermitian_ = false;
};

class PureState {
 public:
  PureState() = default;

  PureState(Vector amplitudes, SpaceLayout layout)
      : amplitudes_(std::move(amplitudes)), layout_(std::move(layout)) {
    if (static_cast<std::size_t>(amplitudes_.size()) != layout_.total_dim()) {
      throw DimensionError("state length does not match layout dimension");
    }
    if (std::abs(amplitudes_.norm() - 1.0) > tol::kNorm) {
      throw InvariantError("state is not normalized (norm " + std::to_string(amplitudes_.norm()) +
                           ")");
    }
  }

  static PureState normalized(Vector amplitudes, SpaceLayout layout) {
    const double n = amplitudes.norm();
    if (n == 0.0) throw InvariantError("cannot normalize the zero vector");
    amplitudes /= n;
    return PureState(std::move(amplitudes), std::move(layout));
  }

  // Product basis state |digits[0]> (x) |digits[1]> (x) ...
  static PureState basis(const SpaceLayout& layout, std::span<const std::size_t> digits) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(layout.total_dim()));
    v(static_cast<Eigen::Index>(layout.flat_index(digits))) = 1.0;
    return PureState(std::move(v), layout);
  }

  const Vector& amplitudes() const noexcept { return amplitudes_; }
  const SpaceLayout& layout() const noexcept { return layout_; }
  std::size_t dim() const noexcept { return layout_.total_dim(); }

 private:
  Vector amplitudes_;
  SpaceLayout layout_;
};

class DensityOp {
 public:
  DensityOp() = default;

  DensityOp(Matrix matrix, SpaceLayout layout, double positivity_tol = tol::kPositivity)
      : matrix_(std::move(matrix)), layout_(std::move(layout)) {
    check_shape();
    if (hermiticity_defect(matrix_) > tol::kHermitian) {
      throw InvariantError("density matrix is not Hermitian");
    }
    if (std::abs(trace() - 1.0) > tol::kTrace) {
      throw InvariantError("density matrix trace " + std::to_string(trace()) + " != 1");
    }
    if (const double m = min_eigenvalue(); m < -positivity_tol) {
      throw InvariantError("density matrix has negative eigenvalue " + std::to_string(m));
    }
  }

  // Skips the invariant checks; for hot paths whose inputs are valid by construction.
  static DensityOp trusted(Matrix matrix, SpaceLayout layout) {
    DensityOp r;
    r.matrix_ = std::move(matrix);
    r.layout_ = std::move(layout);
    r.check_shape();
    return r;
  }

  static DensityOp from_pure(const PureState& psi) {
    const Vector& a = psi.amplitudes();
    return trusted(a * a.adjoint(), psi.layout());
  }

  const Matrix& matrix() const noexcept { return matrix_; }
  const SpaceLayout& layout() const noexcept { return layout_; }
  std::size_t dim() const noexcept { return layout_.total_dim(); }

  double trace() const { return matrix_.trace().real(); }
  RealVector eigenvalues() const { return hermitian_eigenvalues(matrix_); }
  double min_eigenvalue() const { return eigenvalues().minCoeff(); }

 private:
  void check_shape() const {
    const auto d = static_cast<Eigen::Index>(layout_.total_dim());
    if (matrix_.rows() != d || matrix_.cols() != d) {
      throw DimensionError("density matrix shape does not match layout dimension");
    }
  }

  Matrix matrix_;
  SpaceLayout layout_;
};

// Kronecker product of one factor per subsystem, in layout order.
inline LinearOp kron_compose(std::span<const LinearOp> factors, const SpaceLayout& layout) {
  if (factors.size() != layout.size()) {
    throw DimensionError("expected " + std::to_string(layout.size()) + " factors, got " +
                         std::to_string(factors.size()));
  }
  bool herm = true;
  Matrix acc = Matrix::Ones(1, 1);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const Matrix& f = factors[i].matrix();
    if (static_cast<std::size_t>(f.rows()) != layout.dim(i)) {
      throw DimensionError("factor " + std::to_string(i) + " has dimension " +
                               std::to_string(f.rows()) + ", layout expects " +
                               std::to_string(layout.dim(i)),
                           i);
    }
    herm = herm && factors[i].hermitian();
    Matrix next(acc.rows() * f.rows(), acc.cols() * f.cols());
    for (Eigen::Index r = 0; r < acc.rows(); ++r) {
      for (Eigen::Index c = 0; c < acc.cols(); ++c) {
        next.block(r * f.rows(), c * f.cols(), f.rows(), f.cols()) = acc(r, c) * f;
      }
    }
    acc = std::move(next);
  }
  return LinearOp(std::move(acc), layout, herm);
}

inline LinearOp kron_compose(std::initializer_list<LinearOp> factors, const SpaceLayout& layout) {
  return kron_compose(std::span<const LinearOp>(factors.begin(), factors.size()), layout);
}

// Identity everywhere except `op` on factor `subsystem`.
inline LinearOp embed(const LinearOp& op, std::size_t subsystem, const SpaceLayout& layout) {
  if (subsystem >= layout.size()) {
    throw DimensionError("subsystem index " + std::to_string(subsystem) + " out of range",
                         subsystem);
  }
  if (op.dim() != layout.dim(subsystem)) {
    throw DimensionError("operator dimension " + std::to_string(op.dim()) +
                             " does not match subsystem " + std::to_string(subsystem),
                         subsystem);
  }
  std::vector<LinearOp> factors;
  factors.reserve(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (i == subsystem) {
      factors.push_back(op);
    } else {
      const auto d = static_cast<Eigen::Index>(layout.dim(i));
      factors.push_back(LinearOp::local(Matrix::Identity(d, d), true));
    }
  }
  return kron_compose(factors, layout);
}

// Precomputed index tables for tracing out the complement of `keep`.
// Reusable across many states on the same layout.
class SubsystemReducer {
 public:
  SubsystemReducer(const SpaceLayout& layout, std::vector<std::size_t> keep) : layout_(layout) {
    std::sort(keep.begin(), keep.end());
    if (keep.empty()) throw DimensionError("partial trace needs a nonempty keep set");
    if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
      throw DimensionError("duplicate subsystem in keep set");
    }
    if (keep.back() >= layout.size()) throw DimensionError("keep index out of range", keep.back());
    if (keep.size() == layout.size()) {
      throw DimensionError("keep set covers every subsystem; nothing to trace");
    }
    keep_ = std::move(keep);
    kept_layout_ = layout.select(keep_);
    kept_dim_ = kept_layout_.total_dim();
    traced_dim_ = layout.total_dim() / kept_dim_;

    std::vector<bool> is_kept(layout.size(), false);
    for (auto k : keep_) is_kept[k] = true;

    // flat_[k * traced_dim_ + t] = global index
    flat_.assign(layout.total_dim(), 0);
    const auto& dims = layout.dims();
    std::vector<std::size_t> digits(dims.size(), 0);
    for (std::size_t g = 0; g < layout.total_dim(); ++g) {
      std::size_t k = 0, t = 0;
      for (std::size_t s = 0; s < dims.size(); ++s) {
        if (is_kept[s]) {
          k = k * dims[s] + digits[s];
        } else {
          t = t * dims[s] + digits[s];
        }
      }
      flat_[k * traced_dim_ + t] = g;
      for (std::size_t s = dims.size(); s-- > 0;) {
        if (++digits[s] < dims[s]) break;
        digits[s] = 0;
      }
    }
  }

  const SpaceLayout& kept_layout() const noexcept { return kept_layout_; }
  const std::vector<std::size_t>& keep() const noexcept { return keep_; }

  Matrix reduce(const Vector& psi) const {
    check(static_cast<std::size_t>(psi.size()));
    Matrix amp(static_cast<Eigen::Index>(kept_dim_), static_cast<Eigen::Index>(traced_dim_));
    for (std::size_t k = 0; k < kept_dim_; ++k) {
      for (std::size_t t = 0; t < traced_dim_; ++t) {
        amp(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) =
            psi(static_cast<Eigen::Index>(flat_[k * traced_dim_ + t]));
      }
    }
    return amp * amp.adjoint();
  }

  Matrix reduce(const Matrix& rho) const {
    check(static_cast<std::size_t>(rho.rows()));
    const auto dk = static_cast<Eigen::Index>(kept_dim_);
    Matrix out = Matrix::Zero(dk, dk);
    for (std::size_t a = 0; a < kept_dim_; ++a) {
      for (std::size_t b = 0; b < kept_dim_; ++b) {
        Complex s{0.0, 0.0};
        for (std::size_t t = 0; t < traced_dim_; ++t) {
          s += rho(static_cast<Eigen::Index>(flat_[a * traced_dim_ + t]),
                   static_cast<Eigen::Index>(flat_[b * traced_dim_ + t]));
        }
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
      }
    }
    return out;
  }

 private:
  void check(std::size_t d) const {
    if (d != layout_.total_dim()) throw DimensionError("state dimension does not match reducer layout");
  }

  SpaceLayout layout_;
  SpaceLayout kept_layout_;
  std::vector<std::size_t> keep_;
  std::size_t kept_dim_ = 0;
  std::size_t traced_dim_ = 0;
  std::vector<std::size_t> flat_;
};

inline DensityOp partial_trace(const DensityOp& rho, std::vector<std::size_t> keep) {
  SubsystemReducer red(rho.layout(), std::move(keep));
  Matrix m = red.reduce(rho.matrix());
  return DensityOp::trusted(std::move(m), red.kept_layout());
}

inline DensityOp partial_trace(const PureState& psi, std::vector<std::size_t> keep) {
  SubsystemReducer red(psi.layout(), std::move(keep));
  Matrix m = red.reduce(psi.amplitudes());
  return DensityOp::trusted(std::move(m), red.kept_layout());
}

inline Complex expectation(const LinearOp& op, const PureState& psi) {
  if (op.dim() != psi.dim()) throw DimensionError("operator/state dimension mismatch");
  return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

inline Complex expectation(const LinearOp& op, const DensityOp& rho) {
  if (op.dim() != rho.dim()) throw DimensionError("operator/state dimension mismatch");
  // Tr[A rho] = sum_ij A_ij rho_ji
  return (op.matrix().cwiseProduct(rho.matrix().transpose())).sum();
}

// Tr[rho^2] for Hermitian rho.
inline double purity(const Matrix& rho) { return rho.cwiseAbs2().sum(); }
inline double purity(const DensityOp& rho) { return purity(rho.matrix()); }

inline double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("trace distance shape mismatch");
  Matrix diff = a - b;
  hermitize(diff);
  return 0.5 * hermitian_eigenvalues(diff).cwiseAbs().sum();
}

inline double trace_distance(const DensityOp& a, const DensityOp& b) {
  return trace_distance(a.matrix(), b.matrix());
}

inline SparseOp to_sparse(const Matrix& m, double drop = 0.0) {
  std::vector<Eigen::Triplet<Complex>> trip;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (std::abs(m(r, c)) > drop) trip.emplace_back(r, c, m(r, c));
    }
  }
  SparseOp s(m.rows(), m.cols());
  s.setFromTriplets(trip.begin(), trip.end());
  s.makeCompressed();
  return s;
}

inline SparseOp to_sparse(const LinearOp& op, double drop = 0.0) { return to_sparse(op.matrix(), drop); }

namespace ops {

inline Matrix identity(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return Matrix::Identity(n, n);
}

// Basis (|down>, |up>), sigma_z = diag(-1, +1), sigma_+ = |up><down|.
inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Matrix pauli_y() {
  const Complex i{0.0, 1.0};
  Matrix m(2, 2);
  m << 0, i, -i, 0;
  return m;
}

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << -1, 0, 0, 1;
  return m;
}

// Truncated bosonic annihilation operator on span{|0>, ..., |n_max>}.
inline Matrix annihilation(std::size_t n_max) {
  const auto d = static_cast<Eigen::Index>(n_max + 1);
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline Matrix number(std::size_t n_max) {
  const auto d = static_cast<Eigen::Index>(n_max + 1);
  Matrix m = Matrix::Zero(d, d);
  for (Eigen::Index n = 0; n < d; ++n) m(n, n) = static_cast<double>(n);
  return m;
}

// Collective spin S = n_spins/2 in the ladder basis |m = -S>, ..., |m = +S>.
inline Matrix spin_z(std::size_t n_spins) {
  const auto d = static_cast<Eigen::Index>(n_spins + 1);
  const double s = 0.5 * static_cast<double>(n_spins);
  Matrix m = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) m(k, k) = static_cast<double>(k) - s;
  return m;
}

inline Matrix spin_plus(std::size_t n_spins) {
  const auto d = static_cast<Eigen::Index>(n_spins + 1);
  const double s = 0.5 * static_cast<double>(n_spins);
  Matrix m = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k + 1 < d; ++k) {
    const double mz = static_cast<double>(k) - s;
    m(k + 1, k) = std::sqrt(s * (s + 1.0) - mz * (mz + 1.0));
  }
  return m;
}

inline Matrix spin_x(std::size_t n_spins) {
  Matrix p = spin_plus(n_spins);
  return 0.5 * (p + p.adjoint());
}

inline Matrix spin_y(std::size_t n_spins) {
  Matrix p = spin_plus(n_spins);
  return (p - p.adjoint()) / Complex{0.0, 2.0};
}

}  // namespace ops

}  // namespace qbmon
