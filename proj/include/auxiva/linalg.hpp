#pragma once

// Small dense complex kernels for K <= kMaxChannels. All storage is
// fixed-capacity (no heap), so these are safe to call from the per-frame path.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

#include "auxiva/errors.hpp"

namespace auxiva {

inline constexpr int kMaxChannels = 8;

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CVec = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1, Eigen::ColMajor,
                           kMaxChannels, 1>;

template <typename Real>
using CMat = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::ColMajor, kMaxChannels, kMaxChannels>;

/// Per-thread instrumentation. `cmacs` counts complex multiply-accumulates
/// performed by the kernels in this header.
struct KernelCounters {
  std::uint64_t solves = 0;
  std::uint64_t inversions = 0;
  std::uint64_t cmacs = 0;

  void reset() noexcept { *this = KernelCounters{}; }
};

inline thread_local KernelCounters kernel_counters;

/// Relative pivot threshold below which a matrix is treated as singular.
inline constexpr double kSingularPivot = 1e-13;

namespace detail {

template <typename Derived>
double max_row_norm(const Eigen::MatrixBase<Derived>& m) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    best = std::max(best, static_cast<double>(m.row(i).norm()));
  }
  return best;
}

}  // namespace detail

/// a^H U b.
template <typename DA, typename DU, typename DB>
typename DU::Scalar quad_form(const Eigen::MatrixBase<DA>& a,
                              const Eigen::MatrixBase<DU>& U,
                              const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DU::Scalar;
  const Eigen::Index n = U.rows();
  require(U.cols() == n && a.size() == n && b.size() == n,
          "quad_form: dimension mismatch");
  Scalar acc(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar ub(0);
    for (Eigen::Index j = 0; j < n; ++j) ub += U(i, j) * b(j);
    acc += std::conj(a(i)) * ub;
  }
  kernel_counters.cmacs += static_cast<std::uint64_t>(n * n + n);
  if (static_cast<const void*>(&a.derived()) ==
      static_cast<const void*>(&b.derived())) {
    acc = Scalar(acc.real(), 0);
  }
  return acc;
}

/// a^H U a for Hermitian U, returned as a real number.
template <typename DA, typename DU>
typename DU::RealScalar hermitian_form(const Eigen::MatrixBase<DA>& a,
                                       const Eigen::MatrixBase<DU>& U) {
  return quad_form(a, U, a).real();
}

/// Partial-pivot LU of a small square matrix. Construction throws
/// SingularityError when a pivot falls below kSingularPivot * max row norm.
template <typename Real>
class SmallLu {
 public:
  template <typename Derived>
  explicit SmallLu(const Eigen::MatrixBase<Derived>& m) : lu_(m), n_(static_cast<int>(m.rows())) {
    require(m.rows() == m.cols(), "SmallLu: matrix must be square");
    require(n_ >= 1 && n_ <= kMaxChannels, "SmallLu: unsupported dimension");
    const double scale = detail::max_row_norm(m);
    const double tol = kSingularPivot * scale;
    for (int i = 0; i < n_; ++i) perm_[i] = i;
    for (int j = 0; j < n_; ++j) {
      int p = j;
      Real best = std::abs(lu_(j, j));
      for (int i = j + 1; i < n_; ++i) {
        const Real a = std::abs(lu_(i, j));
        if (a > best) {
          best = a;
          p = i;
        }
      }
      if (!(static_cast<double>(best) >= tol) || scale == 0.0) {
        throw SingularityError("singular matrix: pivot " + std::to_string(static_cast<double>(best)) +
                                   " below relative threshold",
                               BinContext{});
      }
      if (p != j) {
        lu_.row(p).swap(lu_.row(j));
        std::swap(perm_[p], perm_[j]);
      }
      log_abs_det_ += std::log(static_cast<double>(std::abs(lu_(j, j))));
      const Complex<Real> inv_pivot = Complex<Real>(1) / lu_(j, j);
      for (int i = j + 1; i < n_; ++i) {
        const Complex<Real> l = lu_(i, j) * inv_pivot;
        lu_(i, j) = l;
        for (int c = j + 1; c < n_; ++c) lu_(i, c) -= l * lu_(j, c);
      }
      kernel_counters.cmacs += static_cast<std::uint64_t>((n_ - j - 1) * (n_ - j));
    }
  }

  int size() const noexcept { return n_; }
  /// log |det M|.
  double log_abs_det() const noexcept { return log_abs_det_; }

  /// Solves LU z = b.
  template <typename Derived>
  CVec<Real> solve(const Eigen::MatrixBase<Derived>& b) const {
    require(b.size() == n_, "SmallLu::solve: dimension mismatch");
    CVec<Real> z(n_);
    for (int i = 0; i < n_; ++i) {
      Complex<Real> acc = b(perm_[i]);
      for (int c = 0; c < i; ++c) acc -= lu_(i, c) * z(c);
      z(i) = acc;
    }
    for (int i = n_ - 1; i >= 0; --i) {
      Complex<Real> acc = z(i);
      for (int c = i + 1; c < n_; ++c) acc -= lu_(i, c) * z(c);
      z(i) = acc / lu_(i, i);
    }
    kernel_counters.cmacs += static_cast<std::uint64_t>(n_ * n_);
    return z;
  }

 private:
  CMat<Real> lu_;
  std::array<int, kMaxChannels> perm_{};
  int n_;
  double log_abs_det_ = 0.0;
};

/// Solves M z = e_k.
template <typename Derived>
CVec<typename Derived::RealScalar> solve_unit(const Eigen::MatrixBase<Derived>& M, int k) {
  using Real = typename Derived::RealScalar;
  require(M.rows() == M.cols(), "solve_unit: matrix must be square");
  require(k >= 0 && k < M.rows(), "solve_unit: source index out of range");
  ++kernel_counters.solves;
  SmallLu<Real> lu(M);
  CVec<Real> e = CVec<Real>::Zero(M.rows());
  e(k) = Complex<Real>(1);
  return lu.solve(e);
}

template <typename Derived>
CMat<typename Derived::RealScalar> inverse(const Eigen::MatrixBase<Derived>& M) {
  using Real = typename Derived::RealScalar;
  require(M.rows() == M.cols(), "inverse: matrix must be square");
  ++kernel_counters.inversions;
  SmallLu<Real> lu(M);
  const Eigen::Index n = M.rows();
  CMat<Real> out(n, n);
  CVec<Real> e(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    e.setZero();
    e(c) = Complex<Real>(1);
    out.col(c) = lu.solve(e);
  }
  return out;
}

/// alpha * U + (1 - alpha) * weight * x x^H, re-symmetrized so the result is
/// exactly conjugate-symmetric with a real diagonal.
template <typename DU, typename DX>
CMat<typename DU::RealScalar> rank1_blend(const Eigen::MatrixBase<DU>& U,
                                          typename DU::RealScalar alpha,
                                          typename DU::RealScalar weight,
                                          const Eigen::MatrixBase<DX>& x) {
  using Real = typename DU::RealScalar;
  const Eigen::Index n = U.rows();
  require(U.cols() == n && x.size() == n, "rank1_blend: dimension mismatch");
  require(weight >= Real(0), "rank1_blend: negative weight");
  require(alpha >= Real(0) && alpha <= Real(1), "rank1_blend: alpha outside [0, 1]");
  const Real c = (Real(1) - alpha) * weight;
  CMat<Real> out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex<Real> xj = std::conj(x(j));
    for (Eigen::Index i = 0; i <= j; ++i) {
      const Complex<Real> upper = alpha * U(i, j) + c * x(i) * xj;
      const Complex<Real> lower = alpha * U(j, i) + c * x(j) * std::conj(x(i));
      const Complex<Real> sym = Real(0.5) * (upper + std::conj(lower));
      out(i, j) = sym;
      out(j, i) = std::conj(sym);
    }
    out(j, j) = Complex<Real>(out(j, j).real(), Real(0));
  }
  kernel_counters.cmacs += static_cast<std::uint64_t>(n * n);
  return out;
}

}  // namespace auxiva
