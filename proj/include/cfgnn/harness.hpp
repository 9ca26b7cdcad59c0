#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cfgnn/baselines.hpp"
#include "cfgnn/cf_trainer.hpp"
#include "cfgnn/config.hpp"
#include "cfgnn/phy.hpp"
#include "cfgnn/regnn.hpp"
#include "cfgnn/tin_graph.hpp"
#include "cfgnn/topology.hpp"

namespace cfgnn {

struct RadioParams {
  double noise_psd_dbm_hz = -174.0;
  double bandwidth_hz = 1e7;
  double p_max_dbm = 10.0;

  double noise_power() const { return noise_power_watts(noise_psd_dbm_hz, bandwidth_hz); }
  double p_max() const { return dbm_to_watts(p_max_dbm); }
};

struct EvalParams {
  bool binarize = true;
  double threshold = 0.5;
};

struct ExperimentConfig {
  std::vector<int> sizes = {6, 8, 10, 12, 14};
  int train_drops = 4000;
  int test_drops = 500;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  DropParams drop;        // num_pairs and seed overridden per size/index
  FadingParams fading;
  RadioParams radio;
  TinParams tin;
  RegnnConfig regnn;
  TrainerConfig trainer;
  WmmseConfig wmmse;
  EvalParams eval;

  /// Pushes the radio-level power/noise figures into the sub-configs and
  /// checks basic sanity.
  void finalize() {
    tin.p_max = radio.p_max();
    regnn.p_max = radio.p_max();
    wmmse.p_max = radio.p_max();
    if (sizes.empty()) throw std::invalid_argument("ExperimentConfig: sizes must be nonempty");
    if (train_drops < 1 || test_drops < 1)
      throw std::invalid_argument("ExperimentConfig: drop counts must be >= 1");
    drop.validate();
    fading.validate();
    tin.validate();
    regnn.validate();
    trainer.validate();
    wmmse.validate();
  }

  static ExperimentConfig from_config(const KeyValueConfig& kv) {
    ExperimentConfig c;
    c.sizes = kv.get_int_list("experiment.sizes", c.sizes);
    c.train_drops = kv.get_int("experiment.train_drops", c.train_drops);
    c.test_drops = kv.get_int("experiment.test_drops", c.test_drops);
    c.seed = kv.get_u64("experiment.seed", c.seed);
    c.out_dir = kv.get_string("experiment.out_dir", c.out_dir);

    c.drop.area_side = kv.get_double("topology.area_side", c.drop.area_side);
    c.drop.min_tx_separation = kv.get_double("topology.min_tx_separation", c.drop.min_tx_separation);
    c.drop.rx_annulus_inner = kv.get_double("topology.rx_annulus_inner", c.drop.rx_annulus_inner);
    c.drop.rx_annulus_outer = kv.get_double("topology.rx_annulus_outer", c.drop.rx_annulus_outer);
    c.drop.rx_bias_exponent = kv.get_double("topology.rx_bias_exponent", c.drop.rx_bias_exponent);
    c.drop.steps_per_drop = kv.get_int("topology.steps_per_drop", c.drop.steps_per_drop);
    c.drop.shadowing_std_db = kv.get_double("topology.shadowing_std_db", c.drop.shadowing_std_db);
    c.drop.pathloss.ref_db = kv.get_double("topology.pathloss_ref_db", c.drop.pathloss.ref_db);
    c.drop.pathloss.exp_near = kv.get_double("topology.pathloss_exp_near", c.drop.pathloss.exp_near);
    c.drop.pathloss.exp_far = kv.get_double("topology.pathloss_exp_far", c.drop.pathloss.exp_far);
    c.drop.pathloss.break_distance = kv.get_double("topology.pathloss_break_m", c.drop.pathloss.break_distance);
    c.fading.num_sinusoids = kv.get_int("topology.num_sinusoids", c.fading.num_sinusoids);
    c.fading.normalized_doppler = kv.get_double("topology.normalized_doppler", c.fading.normalized_doppler);

    c.radio.noise_psd_dbm_hz = kv.get_double("radio.noise_psd_dbm_hz", c.radio.noise_psd_dbm_hz);
    c.radio.bandwidth_hz = kv.get_double("radio.bandwidth_hz", c.radio.bandwidth_hz);
    c.radio.p_max_dbm = kv.get_double("radio.p_max_dbm", c.radio.p_max_dbm);

    c.tin.m_threshold = kv.get_double("tin.m_threshold", c.tin.m_threshold);
    c.tin.eta = kv.get_double("tin.eta", c.tin.eta);
    c.tin.mask_squared = kv.get_bool("tin.mask_squared", c.tin.mask_squared);

    c.regnn.features = kv.get_int_list("regnn.features", c.regnn.features);
    c.regnn.taps = kv.get_int_list("regnn.taps", c.regnn.taps);

    c.trainer.gamma_theta = kv.get_double("trainer.gamma_theta", c.trainer.gamma_theta);
    c.trainer.gamma_x = kv.get_double("trainer.gamma_x", c.trainer.gamma_x);
    c.trainer.gamma_slack = kv.get_double("trainer.gamma_slack", c.trainer.gamma_slack);
    c.trainer.gamma_lambda = kv.get_double("trainer.gamma_lambda", c.trainer.gamma_lambda);
    c.trainer.gamma_mu = kv.get_double("trainer.gamma_mu", c.trainer.gamma_mu);
    c.trainer.c_min = kv.get_double("trainer.c_min", c.trainer.c_min);
    c.trainer.batch_size = kv.get_int("trainer.batch_size", c.trainer.batch_size);
    c.trainer.shared_slack = kv.get_bool("trainer.shared_slack", c.trainer.shared_slack);

    c.eval.binarize = kv.get_bool("eval.binarize", c.eval.binarize);
    c.eval.threshold = kv.get_double("eval.binarize_threshold", c.eval.threshold);

    c.wmmse.max_iters = kv.get_int("wmmse.max_iters", c.wmmse.max_iters);
    c.wmmse.tol = kv.get_double("wmmse.tol", c.wmmse.tol);

    kv.check_all_consumed();
    c.finalize();
    return c;
  }
};

/// Seed of one drop within the experiment: independent across train/test
/// role, network size and drop index.
inline std::uint64_t drop_seed(std::uint64_t master, bool test, int num_pairs, int index) {
  std::uint64_t s = mix_seed(master, test ? 0xA11CEULL : 0xB0B0ULL);
  s = mix_seed(s, static_cast<std::uint64_t>(num_pairs));
  return mix_seed(s, static_cast<std::uint64_t>(index));
}

/// Builds the per-step (channel, graph) sequence of a single drop.
inline Batch make_batch(DropParams drop_prm, const FadingParams& fading_prm, const RadioParams& radio,
                        const TinParams& tin, int steps) {
  const Drop drop = generate_drop(drop_prm);
  FadingProcess fading(drop_prm.num_pairs, fading_prm, mix_seed(drop_prm.seed, 3));
  const double noise = radio.noise_power();
  Batch batch;
  batch.channels.reserve(steps);
  batch.gsos.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    ChannelMatrix ch = channel_matrix(drop, fading.step(), noise);
    batch.gsos.push_back(build_gso(ch, tin));
    batch.channels.push_back(std::move(ch));
  }
  return batch;
}

inline BatchProvider make_provider(const ExperimentConfig& cfg, int num_pairs, bool test) {
  const int steps = std::min(cfg.trainer.batch_size, cfg.drop.steps_per_drop);
  return [cfg, num_pairs, test, steps](int index) {
    DropParams prm = cfg.drop;
    prm.num_pairs = num_pairs;
    prm.seed = drop_seed(cfg.seed, test, num_pairs, index);
    return make_batch(prm, cfg.fading, cfg.radio, cfg.tin, steps);
  };
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_csv(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string checkpoint_path(const std::string& out_dir, int num_pairs) {
  return out_dir + "/regnn_m" + std::to_string(num_pairs) + ".ckpt";
}

inline std::string train_log_path(const std::string& out_dir, int num_pairs) {
  return out_dir + "/train_m" + std::to_string(num_pairs) + ".csv";
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

inline void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out = detail::open_out(path);
  out << "iter,s,mean_lambda,mean_mu,utility,batch_sum_rate,batch_p5_rate\n";
  for (const auto& row : log) {
    out << row.iter << ',' << detail::fmt_csv(row.slack) << ',' << detail::fmt_csv(row.mean_lambda)
        << ',' << detail::fmt_csv(row.mean_mu) << ',' << detail::fmt_csv(row.utility) << ','
        << detail::fmt_csv(row.batch_sum_rate) << ',' << detail::fmt_csv(row.batch_p5_rate) << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

/// Trains one model per configured network size; emits a checkpoint and a
/// training-log CSV per size under out_dir.
inline void run_train(const ExperimentConfig& cfg, std::ostream& status = std::cout) {
  std::filesystem::create_directories(cfg.out_dir);
  for (int m : cfg.sizes) {
    const BatchProvider provider = make_provider(cfg, m, /*test=*/false);
    const std::uint64_t theta_seed = mix_seed(cfg.seed, 0x7E7AULL + static_cast<std::uint64_t>(m));
    status << "training m=" << m << " on " << cfg.train_drops << " drops\n";
    const TrainResult result = train(cfg.trainer, cfg.regnn, m, cfg.train_drops, provider, theta_seed);
    save_checkpoint(detail::checkpoint_path(cfg.out_dir, m), result.params);
    write_train_log(detail::train_log_path(cfg.out_dir, m), result.log);
    status << "  final slack " << result.log.back().slack << ", wrote "
           << detail::checkpoint_path(cfg.out_dir, m) << "\n";
  }
}

struct EvalRow {
  int size = 0;
  std::string policy;
  double sum_rate = 0.0;
  double p5_rate = 0.0;
  int n_drops = 0;
  std::uint64_t seed = 0;
};

inline void write_eval_summary(const std::string& path, const std::vector<EvalRow>& rows) {
  std::ofstream out = detail::open_out(path);
  out << "size,policy,sum_rate,p5_rate,n_drops,seed\n";
  for (const auto& r : rows) {
    out << r.size << ',' << r.policy << ',' << detail::fmt_csv(r.sum_rate) << ','
        << detail::fmt_csv(r.p5_rate) << ',' << r.n_drops << ',' << r.seed << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline EvalRow summarize(int size, const std::string& policy, const ExperimentConfig& cfg,
                         const EvalResult& ev) {
  return EvalRow{size, policy, ev.mean_sum_rate, ev.pooled_p5_rate, static_cast<int>(ev.per_drop.size()),
                 cfg.seed};
}

/// Evaluates TDM, WMMSE and (optionally) the trained policy on the test
/// drops of every configured size. Rows are also written to a summary CSV.
inline std::vector<EvalRow> run_eval(const ExperimentConfig& cfg, bool include_trained,
                                     const std::string& checkpoint_dir, std::ostream& status = std::cout) {
  std::filesystem::create_directories(cfg.out_dir);
  std::vector<EvalRow> rows;
  for (int m : cfg.sizes) {
    RegnnParams params;
    if (include_trained) {
      const std::string ckpt = detail::checkpoint_path(checkpoint_dir, m);
      if (!std::filesystem::exists(ckpt))
        throw std::runtime_error("run_eval: missing checkpoint for size m=" + std::to_string(m) + " ('" +
                                 ckpt + "')");
      params = load_checkpoint(ckpt);
      // refuse to compare policies across different power budgets
      const double p_max = cfg.radio.p_max();
      if (std::abs(params.config.p_max - p_max) > 1e-9 * p_max)
        throw std::runtime_error("run_eval: checkpoint '" + ckpt + "' was trained with p_max " +
                                 std::to_string(params.config.p_max) + " W but the config sets " +
                                 std::to_string(p_max) + " W");
    }
    const BatchProvider provider = make_provider(cfg, m, /*test=*/true);
    status << "evaluating m=" << m << " on " << cfg.test_drops << " drops\n";

    const double p_max = cfg.radio.p_max();
    const EvalResult tdm = evaluate_policy(
        [&](const ChannelMatrix&, const Gso&, int step) { return tdm_policy(step, m, p_max); },
        cfg.test_drops, provider);
    rows.push_back(summarize(m, "TDM", cfg, tdm));

    const EvalResult wm = evaluate_policy(
        [&](const ChannelMatrix& ch, const Gso&, int) { return wmmse(ch, cfg.wmmse).p; }, cfg.test_drops,
        provider);
    rows.push_back(summarize(m, "WMMSE", cfg, wm));

    if (include_trained) {
      const EvalResult gnn =
          evaluate(params, cfg.test_drops, provider, cfg.eval.binarize, cfg.eval.threshold);
      rows.push_back(summarize(m, "CF-GNN", cfg, gnn));
    }
  }
  const std::string path =
      cfg.out_dir + (include_trained ? "/eval_summary.csv" : "/baseline_summary.csv");
  write_eval_summary(path, rows);
  status << "wrote " << path << "\n";
  return rows;
}

/// Writes `count` drop files for the given size.
inline std::vector<std::string> gen_drops(const ExperimentConfig& cfg, int num_pairs, int count,
                                          std::ostream& status = std::cout) {
  if (count < 1) throw std::invalid_argument("gen_drops: count must be >= 1");
  std::filesystem::create_directories(cfg.out_dir);
  std::vector<std::string> paths;
  for (int i = 0; i < count; ++i) {
    DropParams prm = cfg.drop;
    prm.num_pairs = num_pairs;
    prm.seed = drop_seed(cfg.seed, /*test=*/false, num_pairs, i);
    const Drop drop = generate_drop(prm);
    char name[64];
    std::snprintf(name, sizeof(name), "/drop_m%d_%03d.txt", num_pairs, i);
    const std::string path = cfg.out_dir + name;
    save_drop(path, drop, prm);
    paths.push_back(path);
  }
  status << "wrote " << count << " drop files to " << cfg.out_dir << "\n";
  return paths;
}

// ---------------------------------------------------------------------------
// Self-test: quick invariant suites runnable from the CLI.
// ---------------------------------------------------------------------------

struct SelftestResult {
  int passed = 0;
  int failed = 0;
};

namespace detail {

inline ChannelMatrix random_channel(int m, Rng& rng, double scale = 1.0, double noise = 1.0) {
  CMat h(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) h(i, j) = Complex(rng.normal(), rng.normal()) * scale;
  return ChannelMatrix{h, noise};
}

/// Node relabeling i -> idx[i] as an explicit permutation matrix:
/// (P y)(idx[i]) = y(i) and (P S P^T)(idx[i], idx[j]) = S(i, j).
inline Mat random_permutation_matrix(int m, Rng& rng) {
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  for (int i = m - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(idx[i], idx[j]);
  }
  Mat p = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) p(idx[i], i) = 1.0;
  return p;
}

inline void report(std::ostream& out, SelftestResult& res, const std::string& name, bool ok,
                   const std::string& detail = "") {
  out << (ok ? "[ok]   " : "[FAIL] ") << name;
  if (!detail.empty()) out << " (" << detail << ")";
  out << "\n";
  (ok ? res.passed : res.failed) += 1;
}

}  // namespace detail

inline SelftestResult run_selftest(std::ostream& out = std::cout) {
  SelftestResult res;
  Rng rng(20240517);

  {  // permutation equivariance of the policy network
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const int m = 6;
      TinParams tin;
      tin.p_max = 1.0;
      const ChannelMatrix ch = detail::random_channel(m, rng);
      const Gso gso = build_gso(ch, tin);
      RegnnConfig cfg;
      cfg.p_max = 1.0;
      const RegnnParams params = init_params(cfg, rng.next_u64());
      const Mat perm = detail::random_permutation_matrix(m, rng);
      const Mat ps = perm * gso.s * perm.transpose();
      const Vec direct = perm * forward(gso, params).power;
      const Vec permuted = forward(Gso{ps, gso.normalized}, params).power;
      worst = std::max(worst, (direct - permuted).cwiseAbs().maxCoeff());
    }
    detail::report(out, res, "regnn permutation equivariance", worst <= 1e-9,
                   "max deviation " + detail::fmt_csv(worst));
  }

  {  // analytic policy gradient vs central differences
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const int m = 4;
      TinParams tin;
      tin.p_max = 1.0;
      const ChannelMatrix ch = detail::random_channel(m, rng);
      const Gso gso = build_gso(ch, tin);
      RegnnConfig cfg;
      cfg.p_max = 1.0;
      RegnnParams params = init_params(cfg, rng.next_u64());
      Vec dl_dp(m);
      for (int i = 0; i < m; ++i) dl_dp(i) = rng.normal();
      const ForwardResult fr = forward(gso, params);
      const Vec analytic = backward(fr.tape, gso, params, dl_dp).flatten();
      Vec flat = params.flatten();
      Vec fd(flat.size());
      const double h = 1e-6;
      for (int i = 0; i < flat.size(); ++i) {
        Vec probe = flat;
        probe(i) = flat(i) + h;
        params.unflatten(probe);
        const double up = dl_dp.dot(forward(gso, params).power);
        probe(i) = flat(i) - h;
        params.unflatten(probe);
        const double dn = dl_dp.dot(forward(gso, params).power);
        fd(i) = (up - dn) / (2.0 * h);
      }
      params.unflatten(flat);
      worst = std::max(worst, (analytic - fd).norm() / std::max(1e-12, analytic.norm()));
    }
    detail::report(out, res, "regnn backward vs finite differences", worst <= 1e-4,
                   "max rel error " + detail::fmt_csv(worst));
  }

  {  // capacity jacobian vs central differences
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 5;
      const ChannelMatrix ch = detail::random_channel(m, rng);
      Vec p(m);
      for (int i = 0; i < m; ++i) p(i) = rng.uniform(0.05, 1.0);
      const Mat analytic = capacity_jacobian(ch, p);
      Mat fd(m, m);
      const double h = 1e-6;
      for (int j = 0; j < m; ++j) {
        Vec up = p, dn = p;
        up(j) += h;
        dn(j) -= h;
        fd.col(j) = (capacity(ch, up) - capacity(ch, dn)) / (2.0 * h);
      }
      worst = std::max(worst, (analytic - fd).norm() / std::max(1e-12, analytic.norm()));
    }
    detail::report(out, res, "capacity jacobian vs finite differences", worst <= 1e-4,
                   "max rel error " + detail::fmt_csv(worst));
  }

  {  // graph shift operator contract
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      const int m = 6;
      TinParams tin;
      tin.p_max = 1.0;
      const ChannelMatrix ch = detail::random_channel(m, rng);
      const Gso gso = build_gso(ch, tin);
      const double nrm = Eigen::JacobiSVD<Mat>(gso.s).singularValues()(0);
      if (std::abs(nrm - 1.0) > 1e-6) ok = false;
      const Eigen::MatrixXi ind = tin_indicator(ch, tin);
      for (int i = 0; i < m && ok; ++i)
        for (int j = 0; j < m && ok; ++j) {
          const bool zero = gso.s(i, j) == 0.0;
          const bool masked = ind(i, j) == 0 || std::norm(ch.h(i, j)) == 0.0;
          if (zero != masked) ok = false;
        }
      TinParams huge = tin;
      huge.m_threshold = 1e30;
      const Gso diag = build_gso(ch, huge);
      for (int i = 0; i < m && ok; ++i)
        for (int j = 0; j < m && ok; ++j)
          if (i != j && diag.s(i, j) != 0.0) ok = false;
    }
    detail::report(out, res, "gso normalization and sparsity", ok);
  }

  {  // fading statistics
    FadingParams fp;
    FadingProcess proc(1, fp, 99);
    const int steps = 100000;
    double power = 0.0;
    Complex corr(0.0, 0.0);
    Complex prev(0.0, 0.0);
    for (int t = 0; t < steps; ++t) {
      const Complex g = proc.step()(0, 0);
      power += std::norm(g);
      if (t > 0) corr += g * std::conj(prev);
      prev = g;
    }
    power /= steps;
    const double rho = corr.real() / (power * (steps - 1));
    const double bessel = std::cyl_bessel_j(0.0, 2.0 * kPi * fp.normalized_doppler);
    const bool ok = power > 0.98 && power < 1.02 && std::abs(rho - bessel) < 0.01;
    detail::report(out, res, "fading power and lag-1 autocorrelation", ok,
                   "E|g|^2 " + detail::fmt_csv(power) + ", rho " + detail::fmt_csv(rho));
  }

  {  // wmmse monotone sweeps and feasibility
    bool ok = true;
    WmmseConfig wc;
    wc.p_max = 1.0;
    for (int trial = 0; trial < 10 && ok; ++trial) {
      const ChannelMatrix ch = detail::random_channel(4, rng);
      const WmmseResult r = wmmse(ch, wc);
      for (std::size_t i = 1; i < r.objective_history.size() && ok; ++i)
        if (r.objective_history[i] < r.objective_history[i - 1] - 1e-10) ok = false;
      for (int i = 0; i < r.p.size() && ok; ++i)
        if (r.p(i) < 0.0 || r.p(i) > wc.p_max + 1e-12) ok = false;
    }
    detail::report(out, res, "wmmse monotonicity and feasibility", ok);
  }

  {  // dual-slope path loss reference points
    const bool ok = std::abs(pathloss_db(1.0) - 30.0) < 1e-12 &&
                    std::abs(pathloss_db(100.0) - 70.0) < 1e-12 &&
                    std::abs(pathloss_db(100.0 - 1e-9) - pathloss_db(100.0 + 1e-9)) < 1e-6;
    detail::report(out, res, "path loss reference and continuity", ok);
  }

  {  // projection invariants under random updates
    bool ok = true;
    TrainerConfig tc;
    tc.gamma_theta = 0.0;
    RegnnConfig rc;
    rc.p_max = 1.0;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      const int m = 3;
      TinParams tin;
      tin.p_max = 1.0;
      Batch batch;
      const ChannelMatrix ch = detail::random_channel(m, rng);
      batch.gsos.push_back(build_gso(ch, tin));
      batch.channels.push_back(ch);
      TrainerState st = init_state(rc, tc, m, rng.next_u64());
      for (int i = 0; i < m; ++i) {
        st.x(i) = rng.normal(0, 3);
        st.lambda(i) = std::abs(rng.normal(0, 2));
        st.mu(i) = std::abs(rng.normal(0, 2));
      }
      st.s(0) = std::abs(rng.normal(0, 2));
      const BatchCapacity bc = batch_capacity(st.theta, batch);
      primal_update(st, bc, tc);
      dual_update(st, bc, tc);
      if (st.s.minCoeff() < 0.0 || st.lambda.minCoeff() < 0.0 || st.mu.minCoeff() < 0.0) ok = false;
    }
    detail::report(out, res, "primal/dual projections keep s, lambda, mu nonnegative", ok);
  }

  out << "selftest: " << res.passed << " passed, " << res.failed << " failed\n";
  return res;
}

}  // namespace cfgnn
