#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "cfgnn/common.hpp"
#include "cfgnn/phy.hpp"
#include "cfgnn/regnn.hpp"

namespace cfgnn {

struct TrainerConfig {
  double gamma_theta = 2e-2;   // policy parameters
  double gamma_x = 2e-2;       // ergodic-rate iterate
  double gamma_slack = 1e-3;
  double gamma_lambda = 1e-2;
  double gamma_mu = 1e-2;
  double c_min = 2.0;          // minimum rate, bits/s/Hz
  int batch_size = 200;
  bool shared_slack = true;    // one scalar slack for all constraints

  void validate() const {
    if (!(gamma_theta >= 0.0 && gamma_x >= 0.0 && gamma_slack >= 0.0 && gamma_lambda >= 0.0 &&
          gamma_mu >= 0.0))
      throw std::invalid_argument("TrainerConfig: learning rates must be nonnegative");
    if (batch_size < 1) throw std::invalid_argument("TrainerConfig: batch_size must be >= 1");
  }
};

/// Primal iterates (theta, x, s) and dual multipliers (lambda, mu). The
/// slack s has a single entry in shared mode, m entries otherwise; s, lambda
/// and mu stay nonnegative through every update.
struct TrainerState {
  RegnnParams theta;
  Vec x;
  Vec s;
  Vec lambda;
  Vec mu;
  long iteration = 0;

  int num_pairs() const { return static_cast<int>(x.size()); }
};

inline TrainerState init_state(const RegnnConfig& regnn_cfg, const TrainerConfig& cfg, int num_pairs,
                               std::uint64_t theta_seed) {
  cfg.validate();
  if (num_pairs < 1) throw std::invalid_argument("init_state: num_pairs must be >= 1");
  TrainerState st;
  st.theta = init_params(regnn_cfg, theta_seed);
  st.x = Vec::Zero(num_pairs);
  st.s = Vec::Zero(cfg.shared_slack ? 1 : num_pairs);
  st.lambda = Vec::Zero(num_pairs);
  st.mu = Vec::Zero(num_pairs);
  return st;
}

/// Consecutive fading steps of a single drop: one channel realization and
/// the graph built from it per step.
struct Batch {
  std::vector<ChannelMatrix> channels;
  std::vector<Gso> gsos;

  int size() const { return static_cast<int>(channels.size()); }
  int num_pairs() const { return channels.empty() ? 0 : channels.front().size(); }
};

/// Batch-mean capacities under the current policy, plus everything needed to
/// contract the per-sample policy gradients with a multiplier vector. Holds
/// pointers into the batch and parameters it was built from; consume it
/// before either changes.
struct BatchCapacity {
  Vec mean_rates;            // per-link batch average
  Mat step_rates;            // B x m instantaneous rates
  std::vector<ForwardTape> tapes;
  std::vector<Mat> jacobians;  // dC/dp per step
  const Batch* batch = nullptr;
  const RegnnParams* params = nullptr;

  /// (1/B) sum_b backward(tape_b, S_b, theta, J_b^T lambda): the ascent
  /// direction of lambda . mean_rates with respect to the filter taps.
  RegnnParams policy_grad(const Vec& lambda) const {
    RegnnParams acc = zero_params(params->config);
    const int b = batch->size();
    for (int i = 0; i < b; ++i) {
      const Vec dl_dp = jacobians[i].transpose() * lambda;
      const RegnnParams g = backward(tapes[i], batch->gsos[i], *params, dl_dp);
      for (std::size_t l = 0; l < acc.taps.size(); ++l)
        for (std::size_t k = 0; k < acc.taps[l].size(); ++k) acc.taps[l][k] += g.taps[l][k];
    }
    for (auto& layer : acc.taps)
      for (auto& a : layer) a /= static_cast<double>(b);
    return acc;
  }
};

inline BatchCapacity batch_capacity(const RegnnParams& params, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("batch_capacity: empty batch");
  const int b = batch.size();
  const int m = batch.num_pairs();
  BatchCapacity bc;
  bc.batch = &batch;
  bc.params = &params;
  bc.step_rates.resize(b, m);
  bc.tapes.reserve(b);
  bc.jacobians.reserve(b);
  Vec mean = Vec::Zero(m);
  for (int i = 0; i < b; ++i) {
    ForwardResult fr = forward(batch.gsos[i], params);
    const Vec rates = capacity(batch.channels[i], fr.power);
    bc.step_rates.row(i) = rates.transpose();
    mean += rates;
    bc.jacobians.push_back(capacity_jacobian(batch.channels[i], fr.power));
    bc.tapes.push_back(std::move(fr.tape));
  }
  bc.mean_rates = mean / static_cast<double>(b);
  return bc;
}

namespace detail {

inline Vec broadcast_slack(const TrainerState& st, const TrainerConfig& cfg) {
  return cfg.shared_slack ? Vec::Constant(st.num_pairs(), st.s(0)) : st.s;
}

}  // namespace detail

/// Lagrangian value for diagnostics: U(x) - ||s||^2/2 - lambda.(x - C_hat)
/// - mu.(C_min - s - x), with the scalar slack broadcast in shared mode.
inline double lagrangian(const TrainerState& st, const Batch& batch, const TrainerConfig& cfg) {
  const Vec c_hat = batch_capacity(st.theta, batch).mean_rates;
  const Vec s_vec = detail::broadcast_slack(st, cfg);
  const double slack_penalty = cfg.shared_slack ? st.s(0) * st.s(0) : st.s.squaredNorm();
  const Vec c_min = Vec::Constant(st.num_pairs(), cfg.c_min);
  return st.x.sum() - 0.5 * slack_penalty - st.lambda.dot(st.x - c_hat) -
         st.mu.dot(c_min - s_vec - st.x);
}

/// Gradient-ascent step on the primal variables: theta moves along the
/// lambda-weighted batch policy gradient, x along 1 - lambda + mu (sum-rate
/// utility), and the slack tracks the multiplier mean with a projection
/// keeping it nonnegative.
inline void primal_update(TrainerState& st, const BatchCapacity& bc, const TrainerConfig& cfg) {
  cfg.validate();
  if (cfg.gamma_theta != 0.0) {
    const RegnnParams g = bc.policy_grad(st.lambda);
    for (std::size_t l = 0; l < st.theta.taps.size(); ++l)
      for (std::size_t k = 0; k < st.theta.taps[l].size(); ++k)
        st.theta.taps[l][k] += cfg.gamma_theta * g.taps[l][k];
  }
  st.x += cfg.gamma_x * (Vec::Ones(st.num_pairs()) - st.lambda + st.mu);
  if (cfg.shared_slack) {
    st.s(0) = std::max(0.0, st.s(0) + cfg.gamma_slack * (st.mu.mean() - st.s(0)));
  } else {
    st.s = (st.s + cfg.gamma_slack * (st.mu - st.s)).cwiseMax(0.0);
  }
}

/// Projected descent on the multipliers: lambda prices the ergodic-rate
/// estimate, mu the (slack-relaxed) minimum-rate constraint.
inline void dual_update(TrainerState& st, const BatchCapacity& bc, const TrainerConfig& cfg) {
  cfg.validate();
  st.lambda = (st.lambda - cfg.gamma_lambda * (bc.mean_rates - st.x)).cwiseMax(0.0);
  const Vec s_vec = detail::broadcast_slack(st, cfg);
  const Vec c_min = Vec::Constant(st.num_pairs(), cfg.c_min);
  st.mu = (st.mu - cfg.gamma_mu * (st.x + s_vec - c_min)).cwiseMax(0.0);
}

struct TrainLogRow {
  long iter = 0;
  double slack = 0.0;
  double mean_lambda = 0.0;
  double mean_mu = 0.0;
  double utility = 0.0;
  double batch_sum_rate = 0.0;
  double batch_p5_rate = 0.0;
};

struct TrainResult {
  RegnnParams params;
  std::vector<TrainLogRow> log;
};

using BatchProvider = std::function<Batch(int drop_index)>;
using TrainObserver = std::function<void(const TrainerState&, const TrainLogRow&)>;

/// One primal-dual iteration per drop: the batch capacities are evaluated at
/// the incoming parameters and feed both the primal and dual steps.
inline TrainResult train(const TrainerConfig& cfg, const RegnnConfig& regnn_cfg, int num_pairs,
                         int num_drops, const BatchProvider& provider, std::uint64_t theta_seed,
                         const TrainObserver& observer = {}) {
  cfg.validate();
  if (num_drops < 1) throw std::invalid_argument("train: need at least one drop");
  TrainerState st = init_state(regnn_cfg, cfg, num_pairs, theta_seed);
  TrainResult res;
  res.log.reserve(num_drops);
  for (int d = 0; d < num_drops; ++d) {
    Batch batch = provider(d);
    if (batch.num_pairs() != num_pairs)
      throw std::invalid_argument("train: batch pair count does not match num_pairs");
    const BatchCapacity bc = batch_capacity(st.theta, batch);
    primal_update(st, bc, cfg);
    dual_update(st, bc, cfg);
    st.iteration += 1;

    TrainLogRow row;
    row.iter = st.iteration;
    row.slack = cfg.shared_slack ? st.s(0) : st.s.mean();
    row.mean_lambda = st.lambda.mean();
    row.mean_mu = st.mu.mean();
    row.utility = st.x.sum();
    row.batch_sum_rate = bc.mean_rates.sum();
    row.batch_p5_rate = num_pairs > 1 ? percentile_rate(bc.mean_rates, 0.05) : bc.mean_rates(0);
    res.log.push_back(row);
    if (observer) observer(st, row);
  }
  res.params = std::move(st.theta);
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct DropMetrics {
  double sum_rate = 0.0;   // sum of per-link ergodic rates within the drop
  double p5_rate = 0.0;    // 5th percentile of those per-link rates
  Vec link_rates;
};

struct EvalResult {
  std::vector<DropMetrics> per_drop;
  Vec pooled_link_rates;     // per-link ergodic rates across all drops
  double mean_sum_rate = 0.0;
  double pooled_p5_rate = 0.0;
};

/// Runs any per-step policy over a set of drops and accumulates per-receiver
/// mean rates. policy(channel, gso, step) must return powers in watts.
template <typename Policy>
EvalResult evaluate_policy(Policy&& policy, int num_drops, const BatchProvider& provider) {
  if (num_drops < 1) throw std::invalid_argument("evaluate_policy: need at least one drop");
  EvalResult res;
  res.per_drop.reserve(num_drops);
  std::vector<double> pooled;
  double sum_acc = 0.0;
  for (int d = 0; d < num_drops; ++d) {
    const Batch batch = provider(d);
    const int b = batch.size();
    const int m = batch.num_pairs();
    Vec acc = Vec::Zero(m);
    for (int t = 0; t < b; ++t) {
      const Vec p = policy(batch.channels[t], batch.gsos[t], t);
      acc += capacity(batch.channels[t], p);
    }
    DropMetrics dm;
    dm.link_rates = acc / static_cast<double>(b);
    dm.sum_rate = dm.link_rates.sum();
    dm.p5_rate = m > 1 ? percentile_rate(dm.link_rates, 0.05) : dm.link_rates(0);
    for (int i = 0; i < m; ++i) pooled.push_back(dm.link_rates(i));
    sum_acc += dm.sum_rate;
    res.per_drop.push_back(std::move(dm));
  }
  res.pooled_link_rates = Eigen::Map<Vec>(pooled.data(), static_cast<int>(pooled.size()));
  res.mean_sum_rate = sum_acc / static_cast<double>(num_drops);
  res.pooled_p5_rate = percentile_rate(res.pooled_link_rates, 0.05);
  return res;
}

/// Policy evaluation for trained parameters, with the paper-style binary
/// on/off decision applied at test time when binarize_output is set.
inline EvalResult evaluate(const RegnnParams& params, int num_drops, const BatchProvider& provider,
                           bool binarize_output, double threshold = 0.5) {
  return evaluate_policy(
      [&](const ChannelMatrix&, const Gso& gso, int) {
        Vec p = forward(gso, params).power;
        return binarize_output ? binarize(p, params.config.p_max, threshold) : p;
      },
      num_drops, provider);
}

}  // namespace cfgnn
