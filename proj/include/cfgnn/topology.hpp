#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cfgnn/common.hpp"
#include "cfgnn/rng.hpp"

namespace cfgnn {

/// Dual-slope path loss: one exponent up to the break distance, a steeper
/// one beyond it, continuous at the break.
struct PathlossParams {
  double ref_db = 30.0;         // loss at the 1 m reference
  double exp_near = 2.0;
  double exp_far = 4.0;
  double break_distance = 100.0;
};

inline double pathloss_db(double distance, const PathlossParams& pl = {}) {
  if (!(distance > 0.0)) throw std::invalid_argument("pathloss_db: distance must be positive");
  if (distance <= pl.break_distance) {
    return pl.ref_db + 10.0 * pl.exp_near * std::log10(distance);
  }
  const double at_break = pl.ref_db + 10.0 * pl.exp_near * std::log10(pl.break_distance);
  return at_break + 10.0 * pl.exp_far * std::log10(distance / pl.break_distance);
}

/// Zero-mean log-normal shadowing, drawn in the dB domain.
inline double sample_shadowing(Rng& rng, double std_db = 7.0) { return rng.normal(0.0, std_db); }

struct DropParams {
  int num_pairs = 6;
  double area_side = 500.0;          // meters
  double min_tx_separation = 35.0;   // meters
  double rx_annulus_inner = 10.0;    // meters
  double rx_annulus_outer = 100.0;   // meters
  int steps_per_drop = 200;
  std::uint64_t seed = 0;
  // channel model knobs, fixed per drop
  double shadowing_std_db = 7.0;
  double rx_bias_exponent = 2.0;     // radius = inner + (outer-inner)*u^exponent
  PathlossParams pathloss;

  void validate() const {
    if (num_pairs < 1) throw std::invalid_argument("DropParams: num_pairs must be >= 1");
    if (!(area_side > 0.0)) throw std::invalid_argument("DropParams: area_side must be positive");
    if (!(min_tx_separation > 0.0)) throw std::invalid_argument("DropParams: min_tx_separation must be positive");
    if (!(rx_annulus_inner > 0.0) || !(rx_annulus_inner < rx_annulus_outer))
      throw std::invalid_argument("DropParams: need 0 < rx_annulus_inner < rx_annulus_outer");
    if (steps_per_drop < 1) throw std::invalid_argument("DropParams: steps_per_drop must be >= 1");
    if (!(rx_bias_exponent > 0.0)) throw std::invalid_argument("DropParams: rx_bias_exponent must be positive");
  }
};

/// One realization of node geometry plus long-term (path loss + shadowing)
/// linear power gains; longterm_gain(i,j) is Tx_i -> Rx_j.
struct Drop {
  Mat tx_positions;   // m x 2
  Mat rx_positions;   // m x 2
  Mat longterm_gain;  // m x m

  int num_pairs() const { return static_cast<int>(tx_positions.rows()); }
};

namespace detail {

inline double dist2d(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

}  // namespace detail

/// Generates a random drop. Transmitters are rejection-sampled uniformly in
/// the square until all pairwise separations hold; each receiver sits in an
/// annulus around its transmitter with the radius density biased toward the
/// inner edge. Deterministic for a fixed seed; placement, shadowing and
/// fading use independent sub-streams of that seed.
inline Drop generate_drop(const DropParams& prm) {
  prm.validate();
  const int m = prm.num_pairs;
  Rng placement(mix_seed(prm.seed, 1));
  Rng shadowing(mix_seed(prm.seed, 2));

  constexpr int kMaxRounds = 64;
  constexpr int kAttemptsPerNode = 256;
  Mat tx(m, 2);
  bool placed = false;
  for (int round = 0; round < kMaxRounds && !placed; ++round) {
    placed = true;
    for (int i = 0; i < m && placed; ++i) {
      bool ok = false;
      for (int attempt = 0; attempt < kAttemptsPerNode; ++attempt) {
        const double x = placement.uniform(0.0, prm.area_side);
        const double y = placement.uniform(0.0, prm.area_side);
        bool clear = true;
        for (int j = 0; j < i && clear; ++j) {
          if (detail::dist2d(tx(j, 0), tx(j, 1), x, y) < prm.min_tx_separation) clear = false;
        }
        if (clear) {
          tx(i, 0) = x;
          tx(i, 1) = y;
          ok = true;
          break;
        }
      }
      if (!ok) placed = false;
    }
  }
  if (!placed) {
    throw std::runtime_error("generate_drop: could not satisfy the transmitter separation constraint (area too dense)");
  }

  Mat rx(m, 2);
  for (int i = 0; i < m; ++i) {
    const double u = placement.uniform();
    const double radius = prm.rx_annulus_inner +
                          (prm.rx_annulus_outer - prm.rx_annulus_inner) * std::pow(u, prm.rx_bias_exponent);
    const double angle = placement.uniform(0.0, 2.0 * kPi);
    rx(i, 0) = tx(i, 0) + radius * std::cos(angle);
    rx(i, 1) = tx(i, 1) + radius * std::sin(angle);
  }

  Mat gain(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      // cross links can land arbitrarily close; clamp to the 1 m reference
      const double d = std::max(1.0, detail::dist2d(tx(i, 0), tx(i, 1), rx(j, 0), rx(j, 1)));
      const double shadow_db = sample_shadowing(shadowing, prm.shadowing_std_db);
      gain(i, j) = db_to_linear(-pathloss_db(d, prm.pathloss) + shadow_db);
    }
  }
  return Drop{tx, rx, gain};
}

struct FadingParams {
  int num_sinusoids = 20;
  double normalized_doppler = 0.01;  // f_d * T_s

  void validate() const {
    if (num_sinusoids < 1) throw std::invalid_argument("FadingParams: num_sinusoids must be >= 1");
    if (!(normalized_doppler >= 0.0)) throw std::invalid_argument("FadingParams: normalized_doppler must be >= 0");
  }
};

/// Per-link sum-of-sinusoids Rayleigh fading. Each link carries N complex
/// sinusoids at Doppler frequencies 2*pi*f_d*cos(alpha_n) with the angles
/// spread over (0, pi) plus a random per-link rotation, and independent
/// uniform phases. Ensemble mean-square magnitude is 1 for every step; the
/// lag-k autocorrelation approaches J0(2*pi*f_d*T_s*k).
class FadingProcess {
 public:
  FadingProcess(int num_pairs, const FadingParams& prm, std::uint64_t seed)
      : m_(num_pairs), prm_(prm) {
    prm_.validate();
    if (m_ < 1) throw std::invalid_argument("FadingProcess: num_pairs must be >= 1");
    const int n = prm_.num_sinusoids;
    omega_.resize(static_cast<std::size_t>(m_) * m_ * n);
    phase_.resize(omega_.size());
    Rng rng(seed);
    std::size_t idx = 0;
    for (int link = 0; link < m_ * m_; ++link) {
      const double rotation = rng.uniform(0.0, kPi / (2.0 * n));
      for (int k = 0; k < n; ++k) {
        const double alpha = kPi * (2.0 * k + 1.0) / (2.0 * n) + rotation;
        omega_[idx] = 2.0 * kPi * prm_.normalized_doppler * std::cos(alpha);
        phase_[idx] = rng.uniform(0.0, 2.0 * kPi);
        ++idx;
      }
    }
  }

  int size() const { return m_; }
  long current_step() const { return step_; }
  const FadingParams& params() const { return prm_; }

  /// Gain matrix for the current step index, then advances the index.
  CMat step() {
    const int n = prm_.num_sinusoids;
    const double t = static_cast<double>(step_++);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    CMat g(m_, m_);
    std::size_t idx = 0;
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < m_; ++j) {
        double re = 0.0;
        double im = 0.0;
        for (int k = 0; k < n; ++k) {
          const double arg = omega_[idx] * t + phase_[idx];
          re += std::cos(arg);
          im += std::sin(arg);
          ++idx;
        }
        g(i, j) = Complex(re * scale, im * scale);
      }
    }
    return g;
  }

 private:
  int m_;
  FadingParams prm_;
  long step_ = 0;
  std::vector<double> omega_;
  std::vector<double> phase_;
};

inline double noise_power_watts(double psd_dbm_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("noise_power_watts: bandwidth must be positive");
  return dbm_to_watts(psd_dbm_hz) * bandwidth_hz;
}

/// Combines a drop's long-term gains with one fading realization:
/// |h_ij|^2 = longterm(i,j) * |fading_ij|^2.
inline ChannelMatrix channel_matrix(const Drop& drop, const CMat& fading, double noise_power) {
  const int m = drop.num_pairs();
  if (fading.rows() != m || fading.cols() != m)
    throw std::invalid_argument("channel_matrix: fading dimensions do not match drop");
  if (!(noise_power > 0.0)) throw std::invalid_argument("channel_matrix: noise power must be positive");
  CMat h(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      h(i, j) = std::sqrt(drop.longterm_gain(i, j)) * fading(i, j);
    }
  }
  return ChannelMatrix{h, noise_power};
}

// ---------------------------------------------------------------------------
// Drop files: plain text, positions in meters, long-term gains in dB, all
// generation parameters recorded in the header.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void save_drop(const std::string& path, const Drop& drop, const DropParams& prm) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_drop: cannot open '" + path + "' for writing");
  const int m = drop.num_pairs();
  out << "# cfgnn drop v1\n";
  out << "num_pairs " << prm.num_pairs << "\n";
  out << "area_side " << detail::fmt_full(prm.area_side) << "\n";
  out << "min_tx_separation " << detail::fmt_full(prm.min_tx_separation) << "\n";
  out << "rx_annulus_inner " << detail::fmt_full(prm.rx_annulus_inner) << "\n";
  out << "rx_annulus_outer " << detail::fmt_full(prm.rx_annulus_outer) << "\n";
  out << "steps_per_drop " << prm.steps_per_drop << "\n";
  out << "seed " << prm.seed << "\n";
  out << "shadowing_std_db " << detail::fmt_full(prm.shadowing_std_db) << "\n";
  out << "rx_bias_exponent " << detail::fmt_full(prm.rx_bias_exponent) << "\n";
  out << "pathloss_ref_db " << detail::fmt_full(prm.pathloss.ref_db) << "\n";
  out << "pathloss_exp_near " << detail::fmt_full(prm.pathloss.exp_near) << "\n";
  out << "pathloss_exp_far " << detail::fmt_full(prm.pathloss.exp_far) << "\n";
  out << "pathloss_break_m " << detail::fmt_full(prm.pathloss.break_distance) << "\n";
  for (int i = 0; i < m; ++i) {
    out << "tx " << i << " " << detail::fmt_full(drop.tx_positions(i, 0)) << " "
        << detail::fmt_full(drop.tx_positions(i, 1)) << "\n";
  }
  for (int i = 0; i < m; ++i) {
    out << "rx " << i << " " << detail::fmt_full(drop.rx_positions(i, 0)) << " "
        << detail::fmt_full(drop.rx_positions(i, 1)) << "\n";
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      out << "gain_db " << i << " " << j << " " << detail::fmt_full(linear_to_db(drop.longterm_gain(i, j)))
          << "\n";
    }
  }
  if (!out) throw std::runtime_error("save_drop: write to '" + path + "' failed");
}

struct LoadedDrop {
  Drop drop;
  DropParams params;
};

inline LoadedDrop load_drop(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_drop: cannot open '" + path + "'");
  LoadedDrop result;
  DropParams& prm = result.params;
  int m = -1;
  Mat tx, rx, gain;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto need_m = [&]() {
      if (m < 0) throw std::runtime_error("load_drop: '" + path + "': node data before num_pairs");
    };
    if (key == "num_pairs") {
      ls >> prm.num_pairs;
      m = prm.num_pairs;
      if (m < 1) throw std::runtime_error("load_drop: '" + path + "': invalid num_pairs");
      tx.setZero(m, 2);
      rx.setZero(m, 2);
      gain.setZero(m, m);
    } else if (key == "area_side") {
      ls >> prm.area_side;
    } else if (key == "min_tx_separation") {
      ls >> prm.min_tx_separation;
    } else if (key == "rx_annulus_inner") {
      ls >> prm.rx_annulus_inner;
    } else if (key == "rx_annulus_outer") {
      ls >> prm.rx_annulus_outer;
    } else if (key == "steps_per_drop") {
      ls >> prm.steps_per_drop;
    } else if (key == "seed") {
      ls >> prm.seed;
    } else if (key == "shadowing_std_db") {
      ls >> prm.shadowing_std_db;
    } else if (key == "rx_bias_exponent") {
      ls >> prm.rx_bias_exponent;
    } else if (key == "pathloss_ref_db") {
      ls >> prm.pathloss.ref_db;
    } else if (key == "pathloss_exp_near") {
      ls >> prm.pathloss.exp_near;
    } else if (key == "pathloss_exp_far") {
      ls >> prm.pathloss.exp_far;
    } else if (key == "pathloss_break_m") {
      ls >> prm.pathloss.break_distance;
    } else if (key == "tx" || key == "rx") {
      need_m();
      int idx;
      double x, y;
      ls >> idx >> x >> y;
      if (idx < 0 || idx >= m) throw std::runtime_error("load_drop: '" + path + "': node index out of range");
      Mat& dst = (key == "tx") ? tx : rx;
      dst(idx, 0) = x;
      dst(idx, 1) = y;
    } else if (key == "gain_db") {
      need_m();
      int i, j;
      double v;
      ls >> i >> j >> v;
      if (i < 0 || i >= m || j < 0 || j >= m)
        throw std::runtime_error("load_drop: '" + path + "': gain index out of range");
      gain(i, j) = db_to_linear(v);
    } else {
      throw std::runtime_error("load_drop: '" + path + "': unknown record '" + key + "'");
    }
    if (ls.fail()) throw std::runtime_error("load_drop: '" + path + "': malformed record '" + key + "'");
  }
  if (m < 0) throw std::runtime_error("load_drop: '" + path + "': missing num_pairs");
  result.drop = Drop{tx, rx, gain};
  return result;
}

}  // namespace cfgnn
