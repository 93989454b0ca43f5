#include "auxiva/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "auxiva/errors.hpp"

namespace auxiva {

SdrValue si_sdr(const Eigen::Ref<const Eigen::VectorXd>& reference,
                const Eigen::Ref<const Eigen::VectorXd>& estimate) {
  require(reference.size() == estimate.size(), "si_sdr: length mismatch");
  const double ref_energy = reference.squaredNorm();
  require(ref_energy > 0.0, "si_sdr: zero reference");
  if (estimate.squaredNorm() == 0.0) return {-kSdrCapDb, true};

  const double beta = reference.dot(estimate) / ref_energy;
  const double target = beta * beta * ref_energy;
  const double residual = (estimate - beta * reference).squaredNorm();
  if (residual <= 1e-10 * target) return {kSdrCapDb, true};
  if (target == 0.0) return {-kSdrCapDb, true};
  const double db = 10.0 * std::log10(target / residual);
  if (db >= kSdrCapDb) return {kSdrCapDb, true};
  if (db <= -kSdrCapDb) return {-kSdrCapDb, true};
  return {db, false};
}

SegmentedSdr seg_sdr(const Eigen::Ref<const Eigen::VectorXd>& reference,
                     const Eigen::Ref<const Eigen::VectorXd>& estimate, long L) {
  require(L > 0, "seg_sdr: segment length must be positive");
  require(reference.size() == estimate.size(), "seg_sdr: length mismatch");
  require(reference.size() >= L, "seg_sdr: signal shorter than one segment");
  SegmentedSdr out;
  out.segment_len = L;
  const long count = static_cast<long>(reference.size()) / L;
  out.segments.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    out.segments.push_back(si_sdr(reference.segment(i * L, L), estimate.segment(i * L, L)));
  }
  out.overall = si_sdr(reference, estimate);
  return out;
}

std::vector<int> resolve_permutation(const Signals& references, const Signals& estimates) {
  const int K = static_cast<int>(references.rows());
  require(estimates.rows() == K, "resolve_permutation: source count mismatch");
  require(references.cols() == estimates.cols(), "resolve_permutation: length mismatch");
  require(K >= 1 && K <= 6, "resolve_permutation: K must lie in [1, 6]");

  Eigen::MatrixXd score(K, K);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < K; ++j)
      score(k, j) = si_sdr(references.row(k).transpose(), estimates.row(j).transpose()).db;

  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += score(k, perm[k]);
    if (s > best_score) {
      best_score = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double SdrImprovement::mean_overall_improvement() const {
  if (overall_improvement.empty()) return 0.0;
  return std::accumulate(overall_improvement.begin(), overall_improvement.end(), 0.0) /
         static_cast<double>(overall_improvement.size());
}

double SdrImprovement::mean_segment_improvement(std::size_t first, std::size_t last) const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& src : segment_improvement) {
    for (std::size_t i = first; i < std::min(last, src.size()); ++i) {
      acc += src[i];
      ++n;
    }
  }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

SdrImprovement sdr_improvement(const Signals& references, const Eigen::Ref<const Eigen::VectorXd>& mixture,
                               const Signals& estimates, long L) {
  const int K = static_cast<int>(references.rows());
  require(estimates.rows() == K, "sdr_improvement: source count mismatch");
  require(references.cols() == estimates.cols() && references.cols() == mixture.size(),
          "sdr_improvement: length mismatch");

  SdrImprovement out;
  out.permutation = resolve_permutation(references, estimates);
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd ref = references.row(k).transpose();
    const Eigen::VectorXd est = estimates.row(out.permutation[k]).transpose();
    const SegmentedSdr sep = seg_sdr(ref, est, L);
    const SegmentedSdr base = seg_sdr(ref, mixture, L);
    std::vector<double> sdr, imp;
    for (std::size_t i = 0; i < sep.segments.size(); ++i) {
      sdr.push_back(sep.segments[i].db);
      imp.push_back(sep.segments[i].db - base.segments[i].db);
    }
    out.segment_sdr.push_back(std::move(sdr));
    out.segment_improvement.push_back(std::move(imp));
    out.overall_sdr.push_back(sep.overall.db);
    out.overall_improvement.push_back(sep.overall.db - base.overall.db);
  }
  return out;
}

}  // namespace auxiva
