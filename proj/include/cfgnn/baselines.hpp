#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cfgnn/common.hpp"
#include "cfgnn/phy.hpp"

namespace cfgnn {

/// Round-robin schedule: exactly one transmitter at full power per step.
inline Vec tdm_policy(long step, int num_pairs, double p_max) {
  if (num_pairs < 1) throw std::invalid_argument("tdm_policy: num_pairs must be >= 1");
  if (step < 0) throw std::invalid_argument("tdm_policy: step must be nonnegative");
  Vec p = Vec::Zero(num_pairs);
  p(static_cast<int>(step % num_pairs)) = p_max;
  return p;
}

/// Per-link ergodic rates of the round-robin schedule over a sequence of
/// channel steps. Only the active link carries rate at each step, so the
/// direct gain alone determines it.
inline Vec tdm_ergodic_rates(const std::vector<ChannelMatrix>& steps, double p_max, long first_step = 0) {
  if (steps.empty()) throw std::invalid_argument("tdm_ergodic_rates: empty step sequence");
  const int m = steps.front().size();
  Vec acc = Vec::Zero(m);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const int active = static_cast<int>((first_step + static_cast<long>(t)) % m);
    const ChannelMatrix& ch = steps[t];
    acc(active) += std::log2(1.0 + std::norm(ch.h(active, active)) * p_max / ch.noise_power);
  }
  return acc / static_cast<double>(steps.size());
}

struct WmmseConfig {
  int max_iters = 100;
  double tol = 1e-6;      // convergence threshold on the objective
  Vec weights;            // empty means all-ones
  double p_max = dbm_to_watts(10.0);

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("WmmseConfig: max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("WmmseConfig: tol must be positive");
    if (!(p_max > 0.0)) throw std::invalid_argument("WmmseConfig: p_max must be positive");
  }
};

struct WmmseResult {
  Vec p;
  bool converged = false;
  int iterations = 0;
  double weighted_sum_rate = 0.0;       // bits/s/Hz
  std::vector<double> objective_history;  // after each full (u,w,v) sweep
};

/// Scalar-channel weighted MMSE power allocation: alternate exact updates of
/// receiver gains u, MMSE weights w and transmit amplitudes v (clamped to
/// [0, sqrt(p_max)]), which makes the weighted sum-rate nondecreasing per
/// sweep. Starts from full power; stops when the objective change drops
/// below tol, otherwise returns the last iterate with converged=false.
inline WmmseResult wmmse(const ChannelMatrix& ch, const WmmseConfig& cfg) {
  cfg.validate();
  const int m = ch.size();
  if (!ch.h.allFinite()) throw std::invalid_argument("wmmse: channel matrix has non-finite entries");
  if (!(ch.noise_power > 0.0)) throw std::invalid_argument("wmmse: noise power must be positive");
  Vec rate_weights = cfg.weights.size() ? cfg.weights : Vec::Ones(m);
  if (rate_weights.size() != m) throw std::invalid_argument("wmmse: weight vector size does not match channel");
  for (int i = 0; i < m; ++i)
    if (!(rate_weights(i) > 0.0)) throw std::invalid_argument("wmmse: weights must be positive");

  Mat g2(m, m);  // g2(j,i) = |h(j,i)|^2
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) g2(j, i) = std::norm(ch.h(j, i));
  Vec direct(m);
  for (int i = 0; i < m; ++i) direct(i) = std::sqrt(g2(i, i));

  const double v_max = std::sqrt(cfg.p_max);
  Vec v = Vec::Constant(m, v_max);
  Vec u(m), w(m);

  auto objective = [&](const Vec& amps) {
    const Vec p = amps.array().square();
    return (rate_weights.array() * capacity(ch, p).array()).sum();
  };

  WmmseResult res;
  double obj = objective(v);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (int i = 0; i < m; ++i) {
      double den = ch.noise_power;
      for (int j = 0; j < m; ++j) den += g2(j, i) * v(j) * v(j);
      u(i) = direct(i) * v(i) / den;
    }
    for (int i = 0; i < m; ++i) {
      const double mse = 1.0 - u(i) * direct(i) * v(i);  // in (0,1] since noise > 0
      w(i) = 1.0 / mse;
    }
    for (int i = 0; i < m; ++i) {
      double den = 0.0;
      for (int j = 0; j < m; ++j) den += rate_weights(j) * w(j) * u(j) * u(j) * g2(i, j);
      const double num = rate_weights(i) * w(i) * u(i) * direct(i);
      v(i) = den > 0.0 ? std::clamp(num / den, 0.0, v_max) : 0.0;
    }
    const double next = objective(v);
    res.objective_history.push_back(next);
    res.iterations = it;
    const bool settled = std::abs(next - obj) < cfg.tol;
    obj = next;
    if (settled) {
      res.converged = true;
      break;
    }
  }
  res.p = v.array().square();
  res.weighted_sum_rate = obj;
  return res;
}

}  // namespace cfgnn
