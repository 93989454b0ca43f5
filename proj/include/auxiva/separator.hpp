#pragma once

// Online AuxIVA with IP or ISS demixing updates.
//
// Per frame t and inner iteration:
//   r_k   = sqrt(sum_f |w_kf^H x_ft|^2)               (floored)
//   U_kf  = alpha U_kf(t-1) + (1 - alpha) phi(r_k) x_ft x_ft^H
//   rows in the active index set are updated with IP or ISS.
// Only the last iteration's U is stored as U_kf(t).

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "auxiva/errors.hpp"
#include "auxiva/linalg.hpp"
#include "auxiva/parallel.hpp"

namespace auxiva {

template <typename Real>
using Frame = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

enum class ContrastKind { Laplace, Gaussian };
enum class UpdateMethod { IP, ISS };

inline const char* to_string(ContrastKind kind) {
  return kind == ContrastKind::Laplace ? "laplace" : "gauss";
}
inline const char* to_string(UpdateMethod method) {
  return method == UpdateMethod::IP ? "ip" : "iss";
}

/// Source prior: weighting phi(r) and contrast G(r).
template <typename Real>
struct ContrastModel {
  ContrastKind kind = ContrastKind::Laplace;
  int bins = 1;
  Real r_floor = Real(1e-8);

  Real floored(Real r) const noexcept { return std::max(r, r_floor); }

  /// phi(r): 1/(2r) for Laplace, F/r^2 for the time-varying Gaussian.
  Real weight(Real r) const noexcept {
    const Real rf = floored(r);
    return kind == ContrastKind::Laplace ? Real(1) / (Real(2) * rf)
                                         : static_cast<Real>(bins) / (rf * rf);
  }

  /// G(r); the Gaussian value is defined up to an additive constant.
  Real contrast(Real r) const noexcept {
    return kind == ContrastKind::Laplace ? r
                                         : Real(2) * static_cast<Real>(bins) * std::log(floored(r));
  }

  void validate() const {
    require(r_floor > Real(0), "contrast: r_floor must be positive");
    require(bins >= 1, "contrast: bin count must be positive");
  }
};

template <typename Real>
Real weight(const ContrastModel<Real>& model, Real r) {
  return model.weight(r);
}

/// Step schedule for the active source set: every source before
/// `switch_frame`, only `subset` from then on.
class SourceSelector {
 public:
  static SourceSelector all() { return SourceSelector{}; }

  static SourceSelector subset_after(int switch_frame, std::span<const int> subset) {
    require(switch_frame >= 0, "selector: switch frame must be nonnegative");
    require(!subset.empty() && subset.size() <= static_cast<std::size_t>(kMaxChannels),
            "selector: subset must be nonempty");
    SourceSelector s;
    s.switch_frame_ = switch_frame;
    s.count_ = static_cast<int>(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) s.subset_[i] = subset[i];
    std::sort(s.subset_.begin(), s.subset_.begin() + s.count_);
    return s;
  }

  bool restricted() const noexcept { return switch_frame_ >= 0; }
  int switch_frame() const noexcept { return switch_frame_; }
  std::span<const int> subset() const noexcept {
    return {subset_.data(), static_cast<std::size_t>(count_)};
  }

  /// Active sources at frame t for K sources.
  std::span<const int> active(int t, int K) const noexcept {
    if (!restricted() || t < switch_frame_) {
      return {kAll.data(), static_cast<std::size_t>(K)};
    }
    return subset();
  }

  void validate(int K) const {
    for (int i = 0; i < count_; ++i) {
      require(subset_[i] >= 0 && subset_[i] < K, "selector: source index out of range");
    }
  }

 private:
  static constexpr std::array<int, kMaxChannels> kAll = {0, 1, 2, 3, 4, 5, 6, 7};
  int switch_frame_ = -1;
  int count_ = 0;
  std::array<int, kMaxChannels> subset_{};
};

template <typename Real>
struct OnlineConfig {
  Real alpha = Real(0.99);
  int n_iter = 2;
  SourceSelector selector = SourceSelector::all();
  int update_period = 1;
  UpdateMethod method = UpdateMethod::ISS;
  /// U_kf0 = cov_init * I.
  Real cov_init = Real(1e-3);

  void validate(int K) const {
    require(alpha >= Real(0) && alpha < Real(1), "online: alpha must lie in [0, 1)");
    require(n_iter >= 1, "online: n_iter must be at least 1");
    require(update_period >= 1, "online: update period must be at least 1");
    require(cov_init > Real(0), "online: initial covariance scale must be positive");
    selector.validate(K);
  }

  bool is_update_frame(int t) const noexcept { return t % update_period == 0; }
};

// --------------------------------------------------------------------------
// Row-update primitives.

/// r_k for one frame (columns of `frame` are bins), floored by the model.
template <typename Real>
Real source_activity(std::type_identity_t<std::span<const CMat<Real>>> W, const Frame<Real>& frame, int k,
                     const ContrastModel<Real>& model) {
  require(static_cast<Eigen::Index>(W.size()) == frame.cols(), "source_activity: bin count mismatch");
  Real acc(0);
  for (Eigen::Index f = 0; f < frame.cols(); ++f) {
    require(W[f].rows() == frame.rows() && k >= 0 && k < W[f].rows(),
            "source_activity: dimension mismatch");
    const Complex<Real> y = (W[f].row(k) * frame.col(f)).value();
    acc += std::norm(y);
  }
  return model.floored(std::sqrt(acc));
}

/// U_kft from the previous frame's U_kf(t-1).
template <typename DU, typename DX>
CMat<typename DU::RealScalar> update_covariance(const Eigen::MatrixBase<DU>& prev,
                                                typename DU::RealScalar alpha,
                                                typename DU::RealScalar phi_r,
                                                const Eigen::MatrixBase<DX>& x) {
  return rank1_blend(prev, alpha, phi_r, x);
}

/// IP: w = (W U)^{-1} e_k normalized to w^H U w = 1. Returns the column
/// vector w; row k of W is w^H.
template <typename DW, typename DU>
CVec<typename DW::RealScalar> ip_update_row(const Eigen::MatrixBase<DW>& W,
                                            const Eigen::MatrixBase<DU>& U, int k) {
  using Real = typename DW::RealScalar;
  const Eigen::Index n = W.rows();
  require(W.cols() == n && U.rows() == n && U.cols() == n, "ip_update_row: dimension mismatch");
  CMat<Real> M(n, n);
  M.noalias() = W * U;
  kernel_counters.cmacs += static_cast<std::uint64_t>(n * n * n);
  CVec<Real> w = solve_unit(M, k);
  const Real q = hermitian_form(w, U);
  if (!(q > Real(0)) || !std::isfinite(q)) {
    throw DegeneracyError("ip_update_row: nonpositive quadratic form", BinContext{-1, -1, k, -1});
  }
  w /= std::sqrt(q);
  return w;
}

/// Denominator floor for the ISS ratios.
inline constexpr double kIssDenominatorFloor = 1e-32;
/// Minimum |1 - v_k| for a nonsingular ISS update.
inline constexpr double kIssPivotFloor = 1e-12;

/// ISS steering vector v for source k. `U` holds U_mf for m = 0..K-1.
template <typename DW>
CVec<typename DW::RealScalar> iss_vector(const Eigen::MatrixBase<DW>& W,
                                         std::span<const CMat<typename DW::RealScalar>> U, int k) {
  using Real = typename DW::RealScalar;
  const Eigen::Index n = W.rows();
  require(W.cols() == n && static_cast<Eigen::Index>(U.size()) == n && k >= 0 && k < n,
          "iss_vector: dimension mismatch");
  const CVec<Real> wk = W.row(k).adjoint();
  CVec<Real> v(n);
  CVec<Real> uw(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    require(U[m].rows() == n && U[m].cols() == n, "iss_vector: covariance dimension mismatch");
    uw.noalias() = U[m] * wk;
    const Real den = wk.dot(uw).real();
    if (!(den >= static_cast<Real>(kIssDenominatorFloor)) || !std::isfinite(den)) {
      throw DegeneracyError("iss_vector: nonpositive denominator",
                            BinContext{-1, -1, k, static_cast<int>(m)});
    }
    if (m == k) {
      v(m) = Complex<Real>(Real(1) - Real(1) / std::sqrt(den));
      kernel_counters.cmacs += static_cast<std::uint64_t>(n * n + n);
    } else {
      v(m) = (W.row(m) * uw).value() / den;
      kernel_counters.cmacs += static_cast<std::uint64_t>(n * n + 2 * n);
    }
  }
  return v;
}

/// W <- W - v w_k^H, with w_k^H the pre-update row k, in place.
template <typename Real, typename DV>
void iss_apply_inplace(CMat<Real>& W, const Eigen::MatrixBase<DV>& v, int k) {
  const Eigen::Index n = W.rows();
  require(W.cols() == n && v.size() == n && k >= 0 && k < n, "iss_apply: dimension mismatch");
  if (!(std::abs(Complex<Real>(1) - v(k)) >= static_cast<Real>(kIssPivotFloor))) {
    throw DegeneracyError("iss_apply: 1 - v_k vanishes", BinContext{-1, -1, k, -1});
  }
  const Eigen::Matrix<Complex<Real>, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxChannels> row = W.row(k);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) W(r, c) -= v(r) * row(c);
  }
  kernel_counters.cmacs += static_cast<std::uint64_t>(n * n);
}

template <typename Real, typename DV>
CMat<Real> iss_apply(const CMat<Real>& W, const Eigen::MatrixBase<DV>& v, int k) {
  CMat<Real> out = W;
  iss_apply_inplace(out, v, k);
  return out;
}

/// Back-projection onto microphone 1: y'_kf = (W_f^{-1})_{1k} y_kf.
template <typename Real>
Frame<Real> project_back(std::type_identity_t<std::span<const CMat<Real>>> W, const Frame<Real>& y) {
  require(static_cast<Eigen::Index>(W.size()) == y.cols(), "project_back: bin count mismatch");
  Frame<Real> out(y.rows(), y.cols());
  for (Eigen::Index f = 0; f < y.cols(); ++f) {
    require(W[f].rows() == y.rows(), "project_back: channel mismatch");
    CMat<Real> A;
    try {
      A = inverse(W[f]);
    } catch (NumericalError& e) {
      e.annotate(-1, static_cast<int>(f), -1);
      throw;
    }
    for (Eigen::Index k = 0; k < y.rows(); ++k) out(k, f) = A(0, k) * y(k, f);
  }
  return out;
}

// --------------------------------------------------------------------------

struct FrameDiagnostic {
  int t = -1;
  int f = -1;
  int k = -1;
  std::string kind;
  std::string message;
};

/// Streaming engine state for one stream. process_frame calls must be
/// serialized; bins inside a frame may be split across worker threads.
template <typename Real>
class OnlineAuxIva {
 public:
  OnlineAuxIva(int channels, int bins, OnlineConfig<Real> cfg, ContrastModel<Real> model,
               int threads = 1)
      : K_(channels), F_(bins), cfg_(cfg), model_(model), workers_(threads) {
    require(channels >= 1 && channels <= kMaxChannels, "online: channel count outside [1, 8]");
    require(bins >= 1, "online: bin count must be positive");
    cfg_.validate(K_);
    model_.validate();
    reset();
  }

  void reset() {
    W_.assign(F_, CMat<Real>::Identity(K_, K_));
    W_start_.assign(F_, CMat<Real>::Identity(K_, K_));
    U_prev_.assign(static_cast<std::size_t>(F_) * K_, CMat<Real>::Identity(K_, K_) * cfg_.cov_init);
    U_cur_ = U_prev_;
    power_.assign(static_cast<std::size_t>(F_) * K_, Real(0));
    frozen_.assign(F_, 0);
    r_.assign(K_, Real(0));
    phi_.assign(K_, Real(0));
    diagnostics_.clear();
    diagnostics_.reserve(64);
    t_ = 0;
  }

  int channels() const noexcept { return K_; }
  int bins() const noexcept { return F_; }
  int frame_index() const noexcept { return t_; }
  const OnlineConfig<Real>& config() const noexcept { return cfg_; }
  const ContrastModel<Real>& model() const noexcept { return model_; }

  std::span<const CMat<Real>> demixing() const noexcept { return W_; }
  const CMat<Real>& demixing(int f) const { return W_.at(f); }
  /// Stored U_kf(t) after the most recent frame.
  const CMat<Real>& covariance(int k, int f) const {
    return U_prev_.at(static_cast<std::size_t>(f) * K_ + k);
  }
  std::span<const CMat<Real>> covariances_at(int f) const {
    return {U_prev_.data() + static_cast<std::size_t>(f) * K_, static_cast<std::size_t>(K_)};
  }
  /// r_k from the last inner iteration of the most recent frame.
  std::span<const Real> activity() const noexcept { return r_; }
  const std::vector<FrameDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

  void set_demixing(int f, const CMat<Real>& W) {
    require(W.rows() == K_ && W.cols() == K_, "online: demixing shape mismatch");
    W_.at(f) = W;
  }
  void set_covariance(int k, int f, const CMat<Real>& U) {
    require(U.rows() == K_ && U.cols() == K_, "online: covariance shape mismatch");
    U_prev_.at(static_cast<std::size_t>(f) * K_ + k) = U;
  }

  /// Runs one frame of the online loop on x (K x F) and writes y = W x.
  void process_frame(const Frame<Real>& x, Frame<Real>& y) {
    require(x.rows() == K_ && x.cols() == F_, "process_frame: frame shape mismatch");
    if (y.rows() != K_ || y.cols() != F_) y.resize(K_, F_);
    x_ = &x;
    update_ = cfg_.is_update_frame(t_);
    active_ = cfg_.selector.active(t_, K_);
    std::fill(frozen_.begin(), frozen_.end(), 0);
    if (update_) {
      for (int f = 0; f < F_; ++f) W_start_[f] = W_[f];
    }

    // Without a demixing update every iteration would reproduce the same U.
    const int iterations = update_ ? cfg_.n_iter : 1;
    for (int iter = 0; iter < iterations; ++iter) {
      auto power_pass = [this](int b, int e) { accumulate_power(b, e); };
      workers_.run(F_, power_pass);
      for (int k = 0; k < K_; ++k) {
        Real acc(0);
        for (int f = 0; f < F_; ++f) acc += power_[static_cast<std::size_t>(f) * K_ + k];
        r_[k] = model_.floored(std::sqrt(acc));
        phi_[k] = model_.weight(r_[k]);
      }
      auto update_pass = [this](int b, int e) { update_bins(b, e); };
      workers_.run(F_, update_pass);
    }
    std::swap(U_prev_, U_cur_);

    for (int f = 0; f < F_; ++f) y.col(f).noalias() = W_[f] * x.col(f);
    x_ = nullptr;
    ++t_;
  }

  void set_threads(int threads) { workers_.resize(threads); }

 private:
  void accumulate_power(int begin, int end) {
    const Frame<Real>& x = *x_;
    for (int f = begin; f < end; ++f) {
      const CMat<Real>& W = W_[f];
      for (int k = 0; k < K_; ++k) {
        Complex<Real> y(0);
        for (int c = 0; c < K_; ++c) y += W(k, c) * x(c, f);
        power_[static_cast<std::size_t>(f) * K_ + k] = std::norm(y);
      }
    }
  }

  void update_bins(int begin, int end) {
    const Frame<Real>& x = *x_;
    for (int f = begin; f < end; ++f) {
      const std::size_t base = static_cast<std::size_t>(f) * K_;
      for (int k = 0; k < K_; ++k) {
        U_cur_[base + k] = update_covariance(U_prev_[base + k], cfg_.alpha, phi_[k], x.col(f));
      }
      if (!update_ || frozen_[f]) continue;
      int current_k = -1;
      try {
        for (const int k : active_) {
          current_k = k;
          update_row(f, k);
        }
      } catch (const NumericalError& e) {
        freeze(f, current_k, e);
      }
    }
  }

  void update_row(int f, int k) {
    const std::size_t base = static_cast<std::size_t>(f) * K_;
    CMat<Real>& W = W_[f];
    if (cfg_.method == UpdateMethod::ISS) {
      const std::span<const CMat<Real>> U(U_cur_.data() + base, static_cast<std::size_t>(K_));
      const CVec<Real> v = iss_vector(W, U, k);
      iss_apply_inplace(W, v, k);
    } else {
      const CVec<Real> w = ip_update_row(W, U_cur_[base + k], k);
      W.row(k) = w.adjoint();
    }
  }

  void freeze(int f, int k, const NumericalError& e) {
    W_[f] = W_start_[f];
    frozen_[f] = 1;
    const char* kind = dynamic_cast<const SingularityError*>(&e) ? "singular" : "degenerate";
    std::lock_guard<std::mutex> lock(log_mu_);
    diagnostics_.push_back(FrameDiagnostic{t_, f, k, kind, e.what()});
  }

  int K_;
  int F_;
  OnlineConfig<Real> cfg_;
  ContrastModel<Real> model_;
  BinWorkers workers_;

  std::vector<CMat<Real>> W_;
  std::vector<CMat<Real>> W_start_;
  std::vector<CMat<Real>> U_prev_;  // [f * K + k]
  std::vector<CMat<Real>> U_cur_;
  std::vector<Real> power_;  // [f * K + k]
  std::vector<char> frozen_;
  std::vector<Real> r_;
  std::vector<Real> phi_;
  std::vector<FrameDiagnostic> diagnostics_;
  std::mutex log_mu_;

  const Frame<Real>* x_ = nullptr;
  bool update_ = false;
  std::span<const int> active_;
  int t_ = 0;
};

}  // namespace auxiva
