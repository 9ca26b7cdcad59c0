#include <doctest.h>

#include "cfgnn/baselines.hpp"
#include "test_helpers.hpp"

using namespace cfgnn;

using testutil::grid_search_sum_rate;

TEST_SUITE("baselines") {

TEST_CASE("tdm activates exactly one transmitter") {
  const Vec p = tdm_policy(6, 4, 0.01);
  for (int i = 0; i < 4; ++i) CHECK(p(i) == (i == 2 ? 0.01 : 0.0));

  Vec totals = Vec::Zero(5);
  for (int step = 0; step < 5; ++step) totals += tdm_policy(step, 5, 1.0);
  for (int i = 0; i < 5; ++i) CHECK(totals(i) == 1.0);
}

TEST_CASE("tdm step capacity equals the single-user rate") {
  Rng rng(51);
  const ChannelMatrix ch = testutil::random_channel(4, rng);
  const double p_max = 2.0;
  for (int step = 0; step < 4; ++step) {
    const Vec rates = capacity(ch, tdm_policy(step, 4, p_max));
    for (int i = 0; i < 4; ++i) {
      if (i == step) {
        const double want = std::log2(1.0 + std::norm(ch.h(i, i)) * p_max / ch.noise_power);
        CHECK(rates(i) == doctest::Approx(want));
      } else {
        CHECK(rates(i) == 0.0);
      }
    }
  }
}

TEST_CASE("tdm ergodic rates average over the rotating schedule") {
  Rng rng(52);
  std::vector<ChannelMatrix> steps;
  for (int t = 0; t < 9; ++t) steps.push_back(testutil::random_channel(3, rng));
  const double p_max = 1.0;
  const Vec got = tdm_ergodic_rates(steps, p_max);
  Vec want = Vec::Zero(3);
  for (int t = 0; t < 9; ++t) {
    const int active = t % 3;
    want(active) += std::log2(1.0 + std::norm(steps[t].h(active, active)) * p_max / steps[t].noise_power);
  }
  want /= 9.0;
  CHECK(testutil::rel_error(got, want) < 1e-14);
}

TEST_CASE("wmmse single pair transmits at full power") {
  CMat h(1, 1);
  h(0, 0) = 2.0;
  WmmseConfig cfg;
  cfg.p_max = 0.5;
  const WmmseResult res = wmmse(ChannelMatrix{h, 0.1}, cfg);
  CHECK(res.p(0) == doctest::Approx(0.5));
  CHECK(res.converged);
}

TEST_CASE("wmmse keeps decoupled links at full power") {
  Rng rng(53);
  CMat h = CMat::Zero(4, 4);
  for (int i = 0; i < 4; ++i) h(i, i) = Complex(rng.normal(), rng.normal());
  WmmseConfig cfg;
  cfg.p_max = 1.0;
  const WmmseResult res = wmmse(ChannelMatrix{h, 0.2}, cfg);
  for (int i = 0; i < 4; ++i) CHECK(res.p(i) == doctest::Approx(1.0));
}

TEST_CASE("wmmse silences one pair under crushing symmetric interference") {
  CMat h(2, 2);
  h(0, 0) = 1.0;
  h(1, 1) = 1.05;
  h(0, 1) = 10.0;
  h(1, 0) = 10.0;
  ChannelMatrix ch{h, 0.1};
  WmmseConfig cfg;
  cfg.p_max = 1.0;
  const WmmseResult res = wmmse(ch, cfg);
  CHECK(res.p.minCoeff() < 1e-3);
  CHECK(res.p.maxCoeff() == doctest::Approx(1.0));
  const double grid = grid_search_sum_rate(ch, cfg.p_max, 200);
  CHECK(capacity(ch, res.p).sum() >= 0.99 * grid);
}

TEST_CASE("wmmse reaches the grid-search optimum on strong-interference pairs") {
  Rng rng(54);
  WmmseConfig cfg;
  cfg.p_max = 1.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ChannelMatrix ch = testutil::strong_interference_pair(rng);
    const WmmseResult res = wmmse(ch, cfg);
    CHECK(res.p.minCoeff() < 1e-3);  // the weaker pair ends up silenced
    const double grid = grid_search_sum_rate(ch, cfg.p_max, 200);
    CHECK(std::abs(capacity(ch, res.p).sum() - grid) <= 0.01 * grid);
  }
}

TEST_CASE("wmmse sweeps never decrease the weighted sum-rate") {
  Rng rng(55);
  WmmseConfig cfg;
  cfg.p_max = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ChannelMatrix ch = testutil::random_channel(4, rng);
    const WmmseResult res = wmmse(ch, cfg);
    REQUIRE(!res.objective_history.empty());
    for (std::size_t i = 1; i < res.objective_history.size(); ++i)
      CHECK(res.objective_history[i] >= res.objective_history[i - 1] - 1e-10);
    CHECK(res.p.minCoeff() >= 0.0);
    CHECK(res.p.maxCoeff() <= cfg.p_max + 1e-12);
  }
}

TEST_CASE("wmmse respects rate weights") {
  CMat h(2, 2);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  h(0, 1) = 3.0;
  h(1, 0) = 3.0;
  ChannelMatrix ch{h, 0.1};
  WmmseConfig cfg;
  cfg.p_max = 1.0;
  cfg.weights = Vec(2);
  cfg.weights << 10.0, 0.1;
  const WmmseResult res = wmmse(ch, cfg);
  CHECK(res.p(0) > res.p(1));  // the heavily weighted pair wins the medium
}

TEST_CASE("wmmse reports non-convergence within an iteration cap") {
  // asymmetric strong coupling: the first sweep moves the objective a lot
  CMat h(2, 2);
  h(0, 0) = 1.2;
  h(1, 1) = 0.7;
  h(0, 1) = 6.0;
  h(1, 0) = 6.0;
  ChannelMatrix ch{h, 1.0};
  WmmseConfig cfg;
  cfg.p_max = 1.0;
  cfg.max_iters = 1;
  const WmmseResult res = wmmse(ch, cfg);
  CHECK(!res.converged);
  CHECK(res.iterations == 1);

  cfg.max_iters = 100;
  CHECK(wmmse(ch, cfg).converged);
}

TEST_CASE("tdm argument validation") {
  CHECK_THROWS_AS(tdm_policy(0, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tdm_policy(-1, 3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tdm_ergodic_rates({}, 1.0), std::invalid_argument);
}

}  // TEST_SUITE
