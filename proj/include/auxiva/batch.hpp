#pragma once

// Batch AuxIVA over a whole recording: IP, ISS through the weighted
// covariances, and ISS updating the outputs in place. Used as a convergence
// reference for the online engine.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "auxiva/errors.hpp"
#include "auxiva/linalg.hpp"
#include "auxiva/separator.hpp"
#include "auxiva/stft.hpp"

namespace auxiva {

enum class BatchMethod { IP, ISS, ISSInplace };

inline const char* to_string(BatchMethod m) {
  switch (m) {
    case BatchMethod::IP: return "ip";
    case BatchMethod::ISS: return "iss";
    case BatchMethod::ISSInplace: return "iss_inplace";
  }
  return "?";
}

/// Observations per bin: X[f] is K x T.
template <typename Real>
struct BatchProblem {
  std::vector<Frame<Real>> X;
  ContrastModel<Real> model;
  int n_iter = 10;

  int channels() const { return X.empty() ? 0 : static_cast<int>(X.front().rows()); }
  int frames() const { return X.empty() ? 0 : static_cast<int>(X.front().cols()); }
  int bins() const { return static_cast<int>(X.size()); }

  void validate() const {
    require(!X.empty(), "batch: no frequency bins");
    const int K = channels();
    require(K >= 1 && K <= kMaxChannels, "batch: channel count outside [1, 8]");
    require(frames() >= K, "batch: need at least K frames");
    for (const auto& x : X) {
      require(x.rows() == K && x.cols() == frames(), "batch: inconsistent bin shapes");
      require(x.allFinite(), "batch: non-finite observation");
    }
    require(n_iter >= 0, "batch: negative sweep count");
    model.validate();
  }
};

inline BatchProblem<double> make_batch_problem(const Spectrogram& spec, ContrastModel<double> model,
                                               int n_iter) {
  BatchProblem<double> p;
  p.model = model;
  p.model.bins = spec.bins();
  p.n_iter = n_iter;
  p.X.assign(spec.bins(), Frame<double>(spec.channels(), spec.frames()));
  for (int k = 0; k < spec.channels(); ++k)
    for (int t = 0; t < spec.frames(); ++t)
      for (int f = 0; f < spec.bins(); ++f) p.X[f](k, t) = spec(k, t, f);
  return p;
}

/// Y[f] = W[f] X[f].
template <typename Real>
std::vector<Frame<Real>> demix_all(std::span<const CMat<Real>> W, const std::vector<Frame<Real>>& X) {
  require(W.size() == X.size(), "demix_all: bin count mismatch");
  std::vector<Frame<Real>> Y(X.size());
  for (std::size_t f = 0; f < X.size(); ++f) Y[f] = W[f] * X[f];
  return Y;
}

/// r_kt = sqrt(sum_f |y_kft|^2), K x T, floored by the model.
template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> activities(const std::vector<Frame<Real>>& Y,
                                                               const ContrastModel<Real>& model) {
  require(!Y.empty(), "activities: no bins");
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> r =
      Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>::Zero(Y.front().rows(), Y.front().cols());
  for (const auto& y : Y) r += y.cwiseAbs2();
  return r.cwiseSqrt().unaryExpr([&](Real v) { return model.floored(v); });
}

/// Negative log-likelihood: sum_k mean_t G(r_kt) - 2 sum_f log|det W_f|.
template <typename Real>
double cost(std::span<const CMat<Real>> W, const BatchProblem<Real>& problem) {
  require(static_cast<int>(W.size()) == problem.bins(), "cost: bin count mismatch");
  const auto Y = demix_all(W, problem.X);
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> raw =
      Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>::Zero(problem.channels(), problem.frames());
  for (const auto& y : Y) raw += y.cwiseAbs2();
  raw = raw.cwiseSqrt();
  double data = 0.0;
  for (Eigen::Index k = 0; k < raw.rows(); ++k) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < raw.cols(); ++t) acc += problem.model.contrast(raw(k, t));
    data += acc / static_cast<double>(raw.cols());
  }
  double logdet = 0.0;
  for (std::size_t f = 0; f < W.size(); ++f) {
    try {
      logdet += SmallLu<Real>(W[f]).log_abs_det();
    } catch (NumericalError& e) {
      e.annotate(-1, static_cast<int>(f), -1);
      throw;
    }
  }
  return data - 2.0 * logdet;
}

/// U_kf = (1/T) sum_t phi(r_kt) x_ft x_ft^H for one bin; `r_k` holds r_kt.
template <typename Real, typename DR>
CMat<Real> batch_weighted_covariance(const Frame<Real>& X, const Eigen::MatrixBase<DR>& r_k,
                                     const ContrastModel<Real>& model) {
  require(X.cols() >= 1 && r_k.size() == X.cols(), "batch_weighted_covariance: length mismatch");
  const Eigen::Index K = X.rows();
  CMat<Real> U = CMat<Real>::Zero(K, K);
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    const Real phi = model.weight(r_k(t));
    for (Eigen::Index j = 0; j < K; ++j) {
      const Complex<Real> xj = std::conj(X(j, t)) * phi;
      for (Eigen::Index i = 0; i < K; ++i) U(i, j) += X(i, t) * xj;
    }
  }
  U /= static_cast<Real>(X.cols());
  kernel_counters.cmacs += static_cast<std::uint64_t>(K * K * X.cols());
  for (Eigen::Index j = 0; j < K; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const Complex<Real> sym = Real(0.5) * (U(i, j) + std::conj(U(j, i)));
      U(i, j) = sym;
      U(j, i) = std::conj(sym);
    }
    U(j, j) = Complex<Real>(U(j, j).real(), Real(0));
  }
  return U;
}

template <typename Real>
struct BatchResult {
  std::vector<CMat<Real>> W;
  /// cost[0] is the initial cost, cost[s] the cost after sweep s.
  std::vector<double> cost;
  std::vector<Frame<Real>> Y;
};

/// Called after every sweep with (sweep index starting at 1, W, Y).
template <typename Real>
using SweepObserver =
    std::function<void(int, const std::vector<CMat<Real>>&, const std::vector<Frame<Real>>&)>;

namespace detail {

template <typename Real>
void annotate_and_rethrow(NumericalError& e, int sweep, int f, int k) {
  e.annotate(sweep, f, k);
  throw;
}

template <typename Real>
void ip_sweep(BatchProblem<Real> const& p, std::vector<CMat<Real>>& W, int sweep) {
  const int K = p.channels();
  for (int k = 0; k < K; ++k) {
    const auto Y = demix_all<Real>(W, p.X);
    const auto r = activities(Y, p.model);
    for (int f = 0; f < p.bins(); ++f) {
      try {
        const CMat<Real> U = batch_weighted_covariance(p.X[f], r.row(k), p.model);
        const CVec<Real> w = ip_update_row(W[f], U, k);
        W[f].row(k) = w.adjoint();
      } catch (NumericalError& e) {
        annotate_and_rethrow<Real>(e, sweep, f, k);
      }
    }
  }
}

template <typename Real>
void iss_sweep(BatchProblem<Real> const& p, std::vector<CMat<Real>>& W, int sweep) {
  const int K = p.channels();
  const auto Y = demix_all<Real>(W, p.X);
  const auto r = activities(Y, p.model);
  std::vector<CMat<Real>> U(static_cast<std::size_t>(K));
  for (int f = 0; f < p.bins(); ++f) {
    for (int m = 0; m < K; ++m) U[m] = batch_weighted_covariance(p.X[f], r.row(m), p.model);
    for (int k = 0; k < K; ++k) {
      try {
        const CVec<Real> v = iss_vector(W[f], std::span<const CMat<Real>>(U), k);
        iss_apply_inplace(W[f], v, k);
      } catch (NumericalError& e) {
        annotate_and_rethrow<Real>(e, sweep, f, k);
      }
    }
  }
}

/// v_m = sum_t (y_m y_k^* / r_m) / sum_t (|y_k|^2 / r_m) for m != k, and
/// v_k = 1 - ((1/T) sum_t |y_k|^2 / (2 r_k))^{-1/2}; then y <- y - v y_k.
template <typename Real>
void iss_inplace_sweep(BatchProblem<Real> const& p, std::vector<CMat<Real>>& W,
                       std::vector<Frame<Real>>& Y, int sweep) {
  const int K = p.channels();
  const int T = p.frames();
  const auto r = activities(Y, p.model);
  const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> inv_r = r.cwiseInverse();
  CVec<Real> v(K);
  Eigen::Matrix<Complex<Real>, 1, Eigen::Dynamic> yk(T);
  for (int f = 0; f < p.bins(); ++f) {
    Frame<Real>& y = Y[f];
    for (int k = 0; k < K; ++k) {
      yk = y.row(k);
      for (int m = 0; m < K; ++m) {
        Real den(0);
        for (int t = 0; t < T; ++t) den += std::norm(yk(t)) * inv_r(m, t);
        if (m == k) {
          const Real q = den / (Real(2) * static_cast<Real>(T));
          if (!(q >= static_cast<Real>(kIssDenominatorFloor))) {
            throw DegeneracyError("iss_inplace: nonpositive denominator", BinContext{sweep, f, k, m});
          }
          v(m) = Complex<Real>(Real(1) - Real(1) / std::sqrt(q));
        } else {
          if (!(den >= static_cast<Real>(kIssDenominatorFloor))) {
            throw DegeneracyError("iss_inplace: nonpositive denominator", BinContext{sweep, f, k, m});
          }
          Complex<Real> num(0);
          for (int t = 0; t < T; ++t) num += y(m, t) * std::conj(yk(t)) * inv_r(m, t);
          v(m) = num / den;
        }
      }
      kernel_counters.cmacs += static_cast<std::uint64_t>(2 * K * T);
      try {
        iss_apply_inplace(W[f], v, k);
      } catch (NumericalError& e) {
        annotate_and_rethrow<Real>(e, sweep, f, k);
      }
      y.noalias() -= v * yk;
    }
  }
}

}  // namespace detail

/// Runs problem.n_iter sweeps from W_f = I.
template <typename Real>
BatchResult<Real> batch_auxiva(const BatchProblem<Real>& problem, BatchMethod method,
                               const SweepObserver<Real>& observer = {}) {
  problem.validate();
  if (method == BatchMethod::ISSInplace) {
    require(problem.model.kind == ContrastKind::Laplace,
            "batch: in-place ISS is defined for the Laplace model only");
  }
  const int K = problem.channels();
  BatchResult<Real> res;
  res.W.assign(problem.bins(), CMat<Real>::Identity(K, K));
  res.cost.push_back(cost<Real>(res.W, problem));
  if (method == BatchMethod::ISSInplace) res.Y = problem.X;

  for (int sweep = 1; sweep <= problem.n_iter; ++sweep) {
    switch (method) {
      case BatchMethod::IP: detail::ip_sweep(problem, res.W, sweep); break;
      case BatchMethod::ISS: detail::iss_sweep(problem, res.W, sweep); break;
      case BatchMethod::ISSInplace: detail::iss_inplace_sweep(problem, res.W, res.Y, sweep); break;
    }
    res.cost.push_back(cost<Real>(res.W, problem));
    if (observer) {
      if (method == BatchMethod::ISSInplace) {
        observer(sweep, res.W, res.Y);
      } else {
        observer(sweep, res.W, demix_all<Real>(res.W, problem.X));
      }
    }
  }
  if (method != BatchMethod::ISSInplace) res.Y = demix_all<Real>(res.W, problem.X);
  return res;
}

}  // namespace auxiva
