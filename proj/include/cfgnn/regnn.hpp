#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cfgnn/common.hpp"
#include "cfgnn/rng.hpp"
#include "cfgnn/tin_graph.hpp"

namespace cfgnn {

/// Architecture of the graph-filter policy network. Layer l maps
/// features[l] input features to features[l+1] output features through a
/// polynomial graph filter with taps[l] taps; hidden layers use a rectifier,
/// the output layer a logistic scaled to (0, p_max). The parameter count is
/// independent of the number of nodes.
struct RegnnConfig {
  std::vector<int> features = {1, 4, 4, 1};  // F_0 .. F_L
  std::vector<int> taps = {4, 4, 4};         // K_1 .. K_L
  double p_max = dbm_to_watts(10.0);

  int num_layers() const { return static_cast<int>(taps.size()); }

  void validate() const {
    if (taps.empty()) throw std::invalid_argument("RegnnConfig: need at least one layer");
    if (features.size() != taps.size() + 1)
      throw std::invalid_argument("RegnnConfig: features must have one more entry than taps");
    if (features.front() != 1 || features.back() != 1)
      throw std::invalid_argument("RegnnConfig: input and output feature counts must be 1");
    for (int k : taps)
      if (k < 1) throw std::invalid_argument("RegnnConfig: every layer needs at least one tap");
    for (int f : features)
      if (f < 1) throw std::invalid_argument("RegnnConfig: feature counts must be >= 1");
    if (!(p_max > 0.0)) throw std::invalid_argument("RegnnConfig: p_max must be positive");
  }
};

/// Filter taps per layer: taps[l][k] is the F_{l} x F_{l+1} mixing matrix of
/// shift order k.
struct RegnnParams {
  RegnnConfig config;
  std::vector<std::vector<Mat>> taps;

  int flat_size() const {
    int n = 0;
    for (const auto& layer : taps)
      for (const auto& a : layer) n += static_cast<int>(a.size());
    return n;
  }

  Vec flatten() const {
    Vec out(flat_size());
    int idx = 0;
    for (const auto& layer : taps) {
      for (const auto& a : layer) {
        for (int r = 0; r < a.rows(); ++r)
          for (int c = 0; c < a.cols(); ++c) out(idx++) = a(r, c);
      }
    }
    return out;
  }

  void unflatten(const Vec& flat) {
    if (flat.size() != flat_size()) throw std::invalid_argument("RegnnParams::unflatten: size mismatch");
    int idx = 0;
    for (auto& layer : taps) {
      for (auto& a : layer) {
        for (int r = 0; r < a.rows(); ++r)
          for (int c = 0; c < a.cols(); ++c) a(r, c) = flat(idx++);
      }
    }
  }
};

inline RegnnParams zero_params(const RegnnConfig& cfg) {
  cfg.validate();
  RegnnParams p;
  p.config = cfg;
  p.taps.resize(cfg.num_layers());
  for (int l = 0; l < cfg.num_layers(); ++l) {
    p.taps[l].assign(cfg.taps[l], Mat::Zero(cfg.features[l], cfg.features[l + 1]));
  }
  return p;
}

/// Gaussian initialization with per-layer std 1/sqrt(K_l * F_in).
inline RegnnParams init_params(const RegnnConfig& cfg, std::uint64_t seed) {
  RegnnParams p = zero_params(cfg);
  Rng rng(seed);
  for (int l = 0; l < cfg.num_layers(); ++l) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.taps[l]) * cfg.features[l]);
    for (auto& a : p.taps[l])
      for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) a(r, c) = rng.normal(0.0, stddev);
  }
  return p;
}

/// Polynomial graph filter: Z = sum_k S^k Y A_k, evaluated by iterated
/// shifting of Y (S^k is never formed).
inline Mat graph_conv(const Gso& gso, const Mat& y, const std::vector<Mat>& taps) {
  if (taps.empty()) throw std::invalid_argument("graph_conv: need at least one tap");
  if (y.rows() != gso.s.rows()) throw std::invalid_argument("graph_conv: signal rows must match graph size");
  for (const auto& a : taps) {
    if (a.rows() != y.cols()) throw std::invalid_argument("graph_conv: tap rows must match signal features");
    if (a.cols() != taps.front().cols()) throw std::invalid_argument("graph_conv: inconsistent tap shapes");
  }
  Mat shifted = y;
  Mat z = shifted * taps[0];
  for (std::size_t k = 1; k < taps.size(); ++k) {
    shifted = gso.s * shifted;
    z += shifted * taps[k];
  }
  return z;
}

/// Intermediates of one forward pass: shifted[l][k] = S^k y_l and the
/// pre-activation outputs, everything backward needs.
struct ForwardTape {
  std::vector<std::vector<Mat>> shifted;
  std::vector<Mat> pre;
};

struct ForwardResult {
  Vec power;
  ForwardTape tape;
};

namespace detail {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// Evaluates the policy on a graph: constant all-ones input signal, hidden
/// rectifiers, output logistic scaled to (0, p_max). Works for any node
/// count with the same parameters.
inline ForwardResult forward(const Gso& gso, const RegnnParams& params) {
  params.config.validate();
  const int m = gso.size();
  const int layers = params.config.num_layers();
  ForwardResult res;
  res.tape.shifted.resize(layers);
  res.tape.pre.resize(layers);

  Mat y = Mat::Ones(m, 1);
  for (int l = 0; l < layers; ++l) {
    const auto& taps = params.taps[l];
    auto& shifted = res.tape.shifted[l];
    shifted.clear();
    shifted.reserve(taps.size());
    shifted.push_back(y);
    Mat z = y * taps[0];
    for (std::size_t k = 1; k < taps.size(); ++k) {
      shifted.push_back(gso.s * shifted.back());
      z += shifted.back() * taps[k];
    }
    res.tape.pre[l] = z;
    if (l + 1 < layers) {
      y = z.cwiseMax(0.0);
    } else {
      y = z;
    }
  }

  res.power.resize(m);
  for (int i = 0; i < m; ++i) res.power(i) = params.config.p_max * detail::logistic(y(i, 0));
  return res;
}

/// Reverse-mode gradient of dl_dp . p with respect to every tap. The adjoint
/// of Y -> S^k Y is Z -> (S^T)^k Z; rectifier subgradient at 0 is taken as 0.
inline RegnnParams backward(const ForwardTape& tape, const Gso& gso, const RegnnParams& params,
                            const Vec& dl_dp) {
  const int layers = params.config.num_layers();
  const int m = gso.size();
  if (static_cast<int>(tape.shifted.size()) != layers || static_cast<int>(tape.pre.size()) != layers)
    throw std::invalid_argument("backward: tape does not match parameter layout");
  for (int l = 0; l < layers; ++l) {
    if (static_cast<int>(tape.shifted[l].size()) != static_cast<int>(params.taps[l].size()) ||
        tape.shifted[l][0].rows() != m || tape.shifted[l][0].cols() != params.config.features[l])
      throw std::invalid_argument("backward: tape does not match parameter layout");
  }
  if (dl_dp.size() != m) throw std::invalid_argument("backward: dl_dp size must match graph size");

  RegnnParams grad = zero_params(params.config);

  // output activation: p = p_max * logistic(z)
  Mat delta(m, 1);
  for (int i = 0; i < m; ++i) {
    const double sig = detail::logistic(tape.pre[layers - 1](i, 0));
    delta(i, 0) = dl_dp(i) * params.config.p_max * sig * (1.0 - sig);
  }

  for (int l = layers - 1; l >= 0; --l) {
    const auto& taps = params.taps[l];
    const auto& shifted = tape.shifted[l];
    for (std::size_t k = 0; k < taps.size(); ++k) {
      grad.taps[l][k] = shifted[k].transpose() * delta;
    }
    if (l == 0) break;
    Mat w = delta;
    Mat dy = w * taps[0].transpose();
    for (std::size_t k = 1; k < taps.size(); ++k) {
      w = gso.s.transpose() * w;
      dy += w * taps[k].transpose();
    }
    const Mat& pre_prev = tape.pre[l - 1];
    delta = (pre_prev.array() > 0.0).cast<double>() * dy.array();
  }
  return grad;
}

/// Maps each entry to 0 or p_max; entries strictly above threshold*p_max
/// transmit at full power. Idempotent.
inline Vec binarize(const Vec& p, double p_max, double threshold = 0.5) {
  if (!(p_max > 0.0)) throw std::invalid_argument("binarize: p_max must be positive");
  Vec out(p.size());
  const double cut = threshold * p_max;
  for (int i = 0; i < p.size(); ++i) out(i) = p(i) > cut ? p_max : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: little-endian binary, config header followed by the flat tap
// array as 64-bit floats.
// ---------------------------------------------------------------------------

namespace detail {

constexpr char kCkptMagic[8] = {'C', 'F', 'G', 'N', 'N', 'C', 'K', 'P'};
constexpr std::uint32_t kCkptVersion = 1;

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const RegnnParams& params) {
  params.config.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open '" + path + "' for writing");
  out.write(detail::kCkptMagic, 8);
  detail::write_u32(out, detail::kCkptVersion);
  const auto& cfg = params.config;
  detail::write_u32(out, static_cast<std::uint32_t>(cfg.num_layers()));
  for (int f : cfg.features) detail::write_u32(out, static_cast<std::uint32_t>(f));
  for (int k : cfg.taps) detail::write_u32(out, static_cast<std::uint32_t>(k));
  detail::write_f64(out, cfg.p_max);
  const Vec flat = params.flatten();
  detail::write_u64(out, static_cast<std::uint64_t>(flat.size()));
  for (int i = 0; i < flat.size(); ++i) detail::write_f64(out, flat(i));
  if (!out) throw std::runtime_error("save_checkpoint: write to '" + path + "' failed");
}

inline RegnnParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCkptMagic, 8) != 0)
    throw std::runtime_error("load_checkpoint: '" + path + "' is not a checkpoint file");
  const std::uint32_t version = detail::read_u32(in);
  if (version != detail::kCkptVersion)
    throw std::runtime_error("load_checkpoint: '" + path + "' has unsupported version " + std::to_string(version));
  RegnnConfig cfg;
  const std::uint32_t layers = detail::read_u32(in);
  cfg.features.resize(layers + 1);
  cfg.taps.resize(layers);
  for (auto& f : cfg.features) f = static_cast<int>(detail::read_u32(in));
  for (auto& k : cfg.taps) k = static_cast<int>(detail::read_u32(in));
  cfg.p_max = detail::read_f64(in);
  if (!in) throw std::runtime_error("load_checkpoint: '" + path + "' truncated header");
  cfg.validate();
  RegnnParams params = zero_params(cfg);
  const std::uint64_t count = detail::read_u64(in);
  if (count != static_cast<std::uint64_t>(params.flat_size()))
    throw std::runtime_error("load_checkpoint: '" + path + "' tap count does not match its config");
  Vec flat(static_cast<int>(count));
  for (std::uint64_t i = 0; i < count; ++i) flat(static_cast<int>(i)) = detail::read_f64(in);
  if (!in) throw std::runtime_error("load_checkpoint: '" + path + "' truncated tap array");
  params.unflatten(flat);
  return params;
}

}  // namespace cfgnn
