#include "doctest.h"

#include <algorithm>
#include <random>

#include "auxiva/errors.hpp"
#include "auxiva/metrics.hpp"

using namespace auxiva;

namespace {

Eigen::VectorXd gauss(long n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

// n orthogonal to s with |n|^2 = |s|^2 * 10^(-db/10).
Eigen::VectorXd orthogonal_noise(const Eigen::VectorXd& s, double db, std::mt19937_64& rng) {
  Eigen::VectorXd n = gauss(s.size(), rng);
  n -= (n.dot(s) / s.squaredNorm()) * s;
  n *= std::sqrt(s.squaredNorm() * std::pow(10.0, -db / 10.0)) / n.norm();
  return n;
}

}  // namespace

TEST_CASE("si_sdr examples") {
  std::mt19937_64 rng(1);
  const Eigen::VectorXd s = gauss(4000, rng);
  SdrValue v = si_sdr(s, s);
  CHECK(v.db == kSdrCapDb);
  CHECK(v.capped);
  v = si_sdr(s, 2.0 * s);
  CHECK(v.db == kSdrCapDb);
  CHECK(v.capped);
  v = si_sdr(s, -0.3 * s);
  CHECK(v.capped);
  v = si_sdr(s, s + orthogonal_noise(s, 20.0, rng));
  CHECK(std::abs(v.db - 20.0) <= 1e-6);
  CHECK_FALSE(v.capped);
  v = si_sdr(s, Eigen::VectorXd::Zero(4000));
  CHECK(v.db == -kSdrCapDb);
  CHECK(v.capped);
  CHECK_THROWS_AS(si_sdr(Eigen::VectorXd::Zero(10), s.head(10)), ContractViolation);
  CHECK_THROWS_AS(si_sdr(s, s.head(10)), ContractViolation);
}

TEST_CASE("si_sdr is scale invariant") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd s = gauss(1000, rng);
    const Eigen::VectorXd y = s + 0.3 * gauss(1000, rng);
    const double a = si_sdr(s, y).db;
    CHECK(si_sdr(s, 3.7 * y).db == doctest::Approx(a).epsilon(1e-12));
    CHECK(si_sdr(s, -0.2 * y).db == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("seg_sdr examples") {
  std::mt19937_64 rng(3);
  const long L = 1000;
  const Eigen::VectorXd s = gauss(2 * L, rng);
  SegmentedSdr r = seg_sdr(s, s, L);
  REQUIRE(r.segments.size() == 2);
  CHECK(r.segments[0].capped);
  CHECK(r.segments[1].capped);

  Eigen::VectorXd y = s;
  y.tail(L) += orthogonal_noise(s.tail(L), 20.0, rng);
  r = seg_sdr(s, y, L);
  CHECK(r.segments[0].capped);
  CHECK(std::abs(r.segments[1].db - 20.0) <= 1e-6);

  CHECK(seg_sdr(s.head(2 * L - 1), s.head(2 * L - 1), L).segments.size() == 1);
  CHECK_THROWS_AS(seg_sdr(s, s, 0), ContractViolation);
}

TEST_CASE("seg_sdr equals per-segment si_sdr") {
  std::mt19937_64 rng(4);
  const long L = 500;
  const Eigen::VectorXd s = gauss(5 * L + 123, rng);
  const Eigen::VectorXd y = s + gauss(s.size(), rng);
  const SegmentedSdr r = seg_sdr(s, y, L);
  REQUIRE(r.segments.size() == 5);
  for (long i = 0; i < 5; ++i) CHECK(r.segments[i].db == si_sdr(s.segment(i * L, L), y.segment(i * L, L)).db);
  CHECK(r.overall.db == si_sdr(s, y).db);
}

TEST_CASE("resolve_permutation") {
  std::mt19937_64 rng(5);
  const int K = 4;
  const long N = 3000;
  Signals refs(K, N);
  for (int k = 0; k < K; ++k) refs.row(k) = gauss(N, rng).transpose();
  std::vector<int> id(K);
  for (int k = 0; k < K; ++k) id[k] = k;
  CHECK(resolve_permutation(refs, refs) == id);

  Signals swapped = refs.topRows(2);
  swapped.row(0) = refs.row(1);
  swapped.row(1) = refs.row(0);
  CHECK(resolve_permutation(refs.topRows(2), swapped) == std::vector<int>{1, 0});

  const std::vector<int> shuffle{2, 0, 3, 1};
  Signals est(K, N);
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd r = refs.row(k).transpose();
    est.row(shuffle[k]) = (r + orthogonal_noise(r, 10.0, rng)).transpose();
  }
  CHECK(resolve_permutation(refs, est) == shuffle);
  for (int k = 0; k < K; ++k) est.row(k) *= 0.1 + k;
  CHECK(resolve_permutation(refs, est) == shuffle);
}

TEST_CASE("sdr_improvement") {
  std::mt19937_64 rng(6);
  const int K = 2;
  const long L = 1000, N = 3 * L;
  Signals refs(K, N);
  for (int k = 0; k < K; ++k) refs.row(k) = gauss(N, rng).transpose();
  const Eigen::VectorXd mic1 = refs.colwise().sum().transpose();

  Signals same(K, N);
  for (int k = 0; k < K; ++k) same.row(k) = mic1.transpose();
  SdrImprovement imp = sdr_improvement(refs, mic1, same, L);
  for (int k = 0; k < K; ++k) {
    CHECK(imp.overall_improvement[k] == 0.0);
    for (double d : imp.segment_improvement[k]) CHECK(d == 0.0);
  }

  imp = sdr_improvement(refs, mic1, refs, L);
  for (int k = 0; k < K; ++k) {
    const double input = si_sdr(refs.row(k).transpose(), mic1).db;
    CHECK(imp.overall_improvement[k] == doctest::Approx(kSdrCapDb - input));
    CHECK(imp.overall_improvement[k] > 0.0);
    CHECK(imp.segment_improvement[k].size() == 3);
  }
  CHECK(imp.mean_segment_improvement(0, 3) > 0.0);
  CHECK_THROWS_AS(sdr_improvement(refs, mic1.head(N - 1), refs, L), ContractViolation);
}
