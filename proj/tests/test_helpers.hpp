#pragma once

// Shared generators and independent reference computations used by the unit
// and acceptance suites. Everything here deliberately avoids the library's
// own code paths where it serves as an oracle.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <vector>

#include "cfgnn/common.hpp"
#include "cfgnn/phy.hpp"
#include "cfgnn/rng.hpp"

namespace testutil {

using cfgnn::CMat;
using cfgnn::Complex;
using cfgnn::Mat;
using cfgnn::Rng;
using cfgnn::Vec;

inline cfgnn::ChannelMatrix random_channel(int m, Rng& rng, double scale = 1.0, double noise = 1.0) {
  CMat h(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) h(i, j) = Complex(rng.normal(), rng.normal()) * scale;
  return cfgnn::ChannelMatrix{h, noise};
}

/// Channel with strong diagonal and weaker interference, closer to the
/// simulator's operating point.
inline cfgnn::ChannelMatrix random_dominant_channel(int m, Rng& rng, double noise = 1.0) {
  CMat h(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double scale = (i == j) ? 3.0 : 0.5;
      h(i, j) = Complex(rng.normal(), rng.normal()) * scale;
    }
  }
  return cfgnn::ChannelMatrix{h, noise};
}

inline Vec random_vec(int n, Rng& rng, double lo, double hi) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

/// Two-pair instance with symmetric cross-interference far above the direct
/// gains and clearly separated directs, so that silencing the weaker pair is
/// the unambiguous sum-rate optimum. Grid search is a sharp oracle for the
/// iterative solver on this class; on generic iid channels the solver only
/// guarantees a stationary point.
inline cfgnn::ChannelMatrix strong_interference_pair(Rng& rng, double noise = 1.0) {
  auto polar = [&](double mag) {
    const double ph = rng.uniform(0.0, 2.0 * cfgnn::kPi);
    return Complex(mag * std::cos(ph), mag * std::sin(ph));
  };
  double d0, d1;
  do {
    d0 = rng.uniform(0.5, 1.5);
    d1 = rng.uniform(0.5, 1.5);
  } while (std::min(d0, d1) / std::max(d0, d1) > 0.8);
  CMat h(2, 2);
  h(0, 0) = polar(d0);
  h(1, 1) = polar(d1);
  h(0, 1) = polar(rng.uniform(5.0, 10.0));
  h(1, 0) = h(0, 1);
  return cfgnn::ChannelMatrix{h, noise};
}

/// Exhaustive two-pair sum-rate search on a points x points power grid.
inline double grid_search_sum_rate(const cfgnn::ChannelMatrix& ch, double p_max, int points) {
  double best = 0.0;
  Vec p(2);
  for (int a = 0; a < points; ++a) {
    p(0) = p_max * a / (points - 1);
    for (int b = 0; b < points; ++b) {
      p(1) = p_max * b / (points - 1);
      best = std::max(best, cfgnn::capacity(ch, p).sum());
    }
  }
  return best;
}

inline std::vector<int> random_permutation(int m, Rng& rng) {
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  for (int i = m - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

/// Relabeling i -> idx[i]: (P y)(idx[i]) = y(i), (P S P^T)(idx[i], idx[j]) = S(i,j).
inline Mat permutation_matrix(const std::vector<int>& idx) {
  const int m = static_cast<int>(idx.size());
  Mat p = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) p(idx[i], i) = 1.0;
  return p;
}

/// Dense SVD spectral norm, the oracle for the power-iteration route.
inline double svd_spectral_norm(const Mat& a) {
  return Eigen::JacobiSVD<Mat>(a).singularValues()(0);
}

inline double rel_error(const Vec& got, const Vec& want) {
  return (got - want).norm() / std::max(1e-300, want.norm());
}

inline double rel_error(const Mat& got, const Mat& want) {
  return (got - want).norm() / std::max(1e-300, want.norm());
}

}  // namespace testutil
