#include <doctest.h>

#include "cfgnn/phy.hpp"
#include "test_helpers.hpp"

using namespace cfgnn;

namespace {

ChannelMatrix diag_channel(const Vec& gains2, double noise) {
  const int m = static_cast<int>(gains2.size());
  CMat h = CMat::Zero(m, m);
  for (int i = 0; i < m; ++i) h(i, i) = std::sqrt(gains2(i));
  return ChannelMatrix{h, noise};
}

}  // namespace

TEST_SUITE("phy") {

TEST_CASE("sinr single link has no interference term") {
  ChannelMatrix ch = diag_channel(Vec::Constant(1, 2.0), 1.0);
  Vec p = Vec::Constant(1, 1.0);
  CHECK(sinr(ch, p)(0) == doctest::Approx(2.0));
}

TEST_CASE("sinr is zero at zero power") {
  Rng rng(1);
  ChannelMatrix ch = testutil::random_channel(4, rng);
  const Vec s = sinr(ch, Vec::Zero(4));
  CHECK(s.maxCoeff() == 0.0);
  CHECK(s.minCoeff() == 0.0);
}

TEST_CASE("sinr two-pair hand arithmetic") {
  CMat h(2, 2);
  h.setZero();
  h(0, 0) = 1.0;               // |h11|^2 = 1
  h(1, 0) = std::sqrt(0.5);    // |h21|^2 = 0.5 interferes into Rx 0
  h(1, 1) = 1.0;
  ChannelMatrix ch{h, 0.5};
  Vec p = Vec::Ones(2);
  CHECK(sinr(ch, p)(0) == doctest::Approx(1.0));
}

TEST_CASE("sinr rejects mismatched dimensions") {
  Rng rng(2);
  ChannelMatrix ch = testutil::random_channel(3, rng);
  CHECK_THROWS_AS(sinr(ch, Vec::Ones(4)), std::invalid_argument);
}

TEST_CASE("capacity at SINR 1 and 3") {
  ChannelMatrix ch = diag_channel(Vec::Constant(1, 1.0), 1.0);
  CHECK(capacity(ch, Vec::Ones(1))(0) == doctest::Approx(1.0));
  ChannelMatrix ch3 = diag_channel(Vec::Constant(1, 3.0), 1.0);
  CHECK(capacity(ch3, Vec::Ones(1))(0) == doctest::Approx(2.0));
  CHECK(capacity(ch3, Vec::Zero(1))(0) == 0.0);
}

TEST_CASE("capacity jacobian: scalar calculus, diagonal channel") {
  ChannelMatrix ch = diag_channel(Vec::Constant(1, 2.5), 0.7);
  Vec p = Vec::Constant(1, 0.3);
  const double expected = (1.0 / std::log(2.0)) * 2.5 / (0.7 + 2.5 * 0.3);
  CHECK(capacity_jacobian(ch, p)(0, 0) == doctest::Approx(expected));

  Rng rng(3);
  Vec gains2 = testutil::random_vec(4, rng, 0.5, 2.0);
  ChannelMatrix chd = diag_channel(gains2, 1.0);
  const Mat jac = capacity_jacobian(chd, Vec::Ones(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(jac(i, j) == 0.0);
}

TEST_CASE("capacity jacobian matches central finite differences") {
  Rng rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 5;
    ChannelMatrix ch = testutil::random_channel(m, rng);
    Vec p = testutil::random_vec(m, rng, 0.05, 1.0);
    const Mat analytic = capacity_jacobian(ch, p);
    Mat fd(m, m);
    const double h = 1e-6;  // step 1e-6 * P_max with P_max = 1 here
    for (int j = 0; j < m; ++j) {
      Vec up = p, dn = p;
      up(j) += h;
      dn(j) -= h;
      fd.col(j) = (capacity(ch, up) - capacity(ch, dn)) / (2.0 * h);
    }
    worst = std::max(worst, testutil::rel_error(analytic, fd));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("capacity jacobian sign pattern") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    ChannelMatrix ch = testutil::random_channel(5, rng);
    Vec p = testutil::random_vec(5, rng, 0.0, 1.0);
    const Mat jac = capacity_jacobian(ch, p);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        if (i == j)
          CHECK(jac(i, j) >= 0.0);
        else
          CHECK(jac(i, j) <= 0.0);
      }
  }
}

TEST_CASE("capacity is monotone in own and others' power") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 4;
    ChannelMatrix ch = testutil::random_channel(m, rng);
    Vec p = testutil::random_vec(m, rng, 0.0, 1.0);
    const Vec base = capacity(ch, p);
    const int i = trial % m;
    Vec up = p;
    up(i) += 0.1;
    const Vec bumped = capacity(ch, up);
    CHECK(bumped(i) >= base(i) - 1e-12);
    for (int j = 0; j < m; ++j)
      if (j != i) CHECK(bumped(j) <= base(j) + 1e-12);
  }
}

TEST_CASE("sinr and capacity are permutation covariant") {
  Rng rng(7);
  const int m = 5;
  ChannelMatrix ch = testutil::random_channel(m, rng);
  Vec p = testutil::random_vec(m, rng, 0.0, 1.0);
  const auto idx = testutil::random_permutation(m, rng);
  const Mat perm = testutil::permutation_matrix(idx);

  ChannelMatrix relabeled{CMat(perm * ch.h * perm.transpose()), ch.noise_power};
  const Vec pp = perm * p;
  CHECK(testutil::rel_error(Vec(sinr(relabeled, pp)), Vec(perm * sinr(ch, p))) < 1e-12);
  CHECK(testutil::rel_error(Vec(capacity(relabeled, pp)), Vec(perm * capacity(ch, p))) < 1e-12);
}

TEST_CASE("sum rate and percentile conventions") {
  Vec x(3);
  x << 1, 2, 3;
  CHECK(sum_rate(x) == doctest::Approx(6.0));
  CHECK_THROWS_AS(sum_rate(Vec()), std::invalid_argument);

  CHECK(percentile_rate(Vec::Constant(100, 5.0), 0.05) == doctest::Approx(5.0));

  Vec ladder(100);
  for (int i = 0; i < 100; ++i) ladder(i) = i + 1;
  // reference: position (n-1)q = 4.95 between order statistics 5 and 6
  CHECK(percentile_rate(ladder, 0.05) == doctest::Approx(5.95));

  CHECK_THROWS_AS(percentile_rate(ladder, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(percentile_rate(ladder, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(percentile_rate(Vec(), 0.5), std::invalid_argument);
}

}  // TEST_SUITE
