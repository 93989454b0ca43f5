#include "doctest.h"

#include "auxiva/linalg.hpp"
#include "test_util.hpp"

using namespace auxiva;
using auxiva::testing::cd;

namespace {

CVec<double> vec(std::initializer_list<cd> xs) {
  CVec<double> v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (const cd x : xs) v(i++) = x;
  return v;
}

CMat<double> diag(std::initializer_list<cd> xs) {
  return vec(xs).asDiagonal();
}

}  // namespace

TEST_CASE("quad_form closed forms") {
  const CMat<double> I = CMat<double>::Identity(2, 2);
  const CVec<double> e1 = vec({1, 0});
  const CVec<double> e2 = vec({0, 1});
  CHECK(quad_form(e1, I, e1) == cd(1, 0));
  CHECK(quad_form(e2, I, e1) == cd(0, 0));
  const CVec<double> a = vec({1, cd(0, 1)});
  const cd q = quad_form(a, diag({2, 3}), a);
  CHECK(q.real() == doctest::Approx(5.0));
  CHECK(q.imag() == 0.0);
  CHECK_THROWS_AS(quad_form(vec({1, 0, 0}), I, e1), ContractViolation);
}

TEST_CASE("quad_form of a Hermitian PSD matrix is real and nonnegative") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4;
    const CMat<double> U = testing::random_hpd(n, rng, 0.0);
    const CVec<double> a = testing::random_vector(n, rng);
    const cd q = quad_form(a, U, a);
    CHECK(q.imag() == 0.0);
    CHECK(q.real() >= -1e-12 * U.trace().real() * a.squaredNorm());
  }
}

TEST_CASE("solve_unit examples") {
  const CMat<double> I = CMat<double>::Identity(2, 2);
  CHECK((solve_unit(I, 0) - vec({1, 0})).norm() == 0.0);
  const CVec<double> z = solve_unit(diag({4, 1}), 0);
  CHECK(z(0).real() == doctest::Approx(0.25));
  CHECK(std::abs(z(1)) == 0.0);
  CHECK_THROWS_AS(solve_unit(I, 2), ContractViolation);
}

TEST_CASE("solve_unit residual on random matrices up to condition 1e6") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 8;
    const double cond = std::pow(10.0, (trial % 7));
    const CMat<double> M = testing::random_conditioned(n, cond, rng);
    const int k = trial % n;
    const CVec<double> z = solve_unit(M, k);
    CVec<double> e = CVec<double>::Zero(n);
    e(k) = 1.0;
    CHECK((M * z - e).norm() <= 1e-10 * std::max(1.0, z.norm()));
  }
}

TEST_CASE("solve_unit rejects singular matrices") {
  CMat<double> M(2, 2);
  M << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(solve_unit(M, 0), SingularityError);
  CHECK_THROWS_AS(solve_unit(CMat<double>::Zero(3, 3), 1), SingularityError);
  CMat<double> near = CMat<double>::Identity(2, 2);
  near(1, 1) = 1e-15;
  CHECK_THROWS_AS(solve_unit(near, 1), SingularityError);
}

TEST_CASE("inverse examples and residual") {
  const CMat<double> I = CMat<double>::Identity(3, 3);
  CHECK((inverse(I) - I).norm() == 0.0);
  const CMat<double> d = inverse(diag({2, 0.5}));
  CHECK((d - diag({0.5, 2})).norm() == doctest::Approx(0.0));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const CMat<double> M = testing::random_matrix(3, rng);
    const CMat<double> R = M * inverse(M) - CMat<double>::Identity(3, 3);
    CHECK(R.norm() <= 1e-10);
  }
  CHECK_THROWS_AS(inverse(CMat<double>::Zero(2, 2)), SingularityError);
}

TEST_CASE("counters track solves and inversions") {
  kernel_counters.reset();
  const CMat<double> I = CMat<double>::Identity(2, 2);
  (void)solve_unit(I, 0);
  (void)inverse(I);
  CHECK(kernel_counters.solves == 1);
  CHECK(kernel_counters.inversions == 1);
  CHECK(kernel_counters.cmacs > 0);
}

TEST_CASE("rank1_blend examples") {
  const CMat<double> U2 = 2.0 * CMat<double>::Identity(2, 2);
  const CMat<double> a = rank1_blend(U2, 0.5, 1.0, vec({1, 0}));
  CHECK((a - diag({1.5, 1.0})).norm() == 0.0);

  std::mt19937_64 rng(5);
  const CMat<double> U = testing::random_hpd(3, rng);
  const CMat<double> same = rank1_blend(U, 1.0, 3.0, testing::random_vector(3, rng));
  CHECK((same - U).norm() == 0.0);

  const CMat<double> pure = rank1_blend(testing::random_hpd(2, rng), 0.0, 2.0, vec({1, cd(0, 1)}));
  CMat<double> expected(2, 2);
  expected << cd(2, 0), cd(0, -2), cd(0, 2), cd(2, 0);
  CHECK((pure - expected).norm() == doctest::Approx(0.0));

  CHECK_THROWS_AS(rank1_blend(U2, 0.5, -1.0, vec({1, 0})), ContractViolation);
}

TEST_CASE("rank1_blend keeps Hermitian symmetry and PSD") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + trial % 4;
    CMat<double> U = testing::random_hpd(n, rng, 0.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int step = 0; step < 5; ++step) {
      U = rank1_blend(U, u01(rng) * 0.999, 3.0 * u01(rng), testing::random_vector(n, rng));
    }
    for (int i = 0; i < n; ++i) {
      CHECK(U(i, i).imag() == 0.0);
      for (int j = 0; j < n; ++j) CHECK(U(i, j) == std::conj(U(j, i)));
    }
    CHECK(testing::min_eigenvalue(U) >= -1e-12 * U.trace().real());
  }
}
