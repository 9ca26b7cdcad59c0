#pragma once

#include <cmath>

#include "cfgnn/common.hpp"
#include "cfgnn/rng.hpp"

namespace cfgnn {

/// Parameters of the treating-interference-as-noise edge test. An
/// interference link Tx_i -> Rx_j survives when its SNR is at least
/// m_threshold times the weaker direct SNR raised to eta. Noise power is
/// taken from the channel matrix itself.
struct TinParams {
  double m_threshold = 1.0;
  double eta = 0.6;
  double p_max = dbm_to_watts(10.0);
  bool mask_squared = true;  // edge weights |h|^2 (default) or |h|

  void validate() const {
    if (!(m_threshold > 0.0)) throw std::invalid_argument("TinParams: m_threshold must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("TinParams: eta must lie in (0,1]");
    if (!(p_max > 0.0)) throw std::invalid_argument("TinParams: p_max must be positive");
  }
};

/// Graph shift operator built from a channel realization.
struct Gso {
  Mat s;
  bool normalized = false;

  int size() const { return static_cast<int>(s.rows()); }
};

/// Largest singular value by power iteration on A^T A. Deterministic
/// all-ones start; one fixed-seed random restart if the first start lies in
/// the null space. Relative tolerance 1e-8 or 1000 iterations, whichever
/// comes first.
inline double spectral_norm(const Mat& a, double rel_tol = 1e-8, int max_iters = 1000) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  if (!a.allFinite()) throw std::invalid_argument("spectral_norm: matrix has non-finite entries");
  Vec v = Vec::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
  double sigma = 0.0;
  double prev = -1.0;
  bool restarted = false;
  for (int it = 0; it < max_iters; ++it) {
    Vec w = a.transpose() * (a * v);
    const double wn = w.norm();
    if (wn == 0.0) {
      if (restarted) return 0.0;
      Rng rng(0x5eedUL);
      for (int i = 0; i < v.size(); ++i) v(i) = rng.normal();
      const double vn = v.norm();
      if (vn == 0.0) return 0.0;
      v /= vn;
      restarted = true;
      prev = -1.0;
      continue;
    }
    v = w / wn;
    sigma = (a * v).norm();
    if (prev >= 0.0 && std::abs(sigma - prev) <= rel_tol * sigma) break;
    prev = sigma;
  }
  return sigma;
}

/// Binary conflict-graph indicator. Off-diagonal entries keep an edge when
/// p_max |h_ij|^2 / sigma^2 >= M * (p_max min(|h_ii|^2,|h_jj|^2) / sigma^2)^eta,
/// non-strict so an exact tie keeps the edge. Direct links are always kept.
inline Eigen::MatrixXi tin_indicator(const ChannelMatrix& ch, const TinParams& prm) {
  prm.validate();
  if (!(ch.noise_power > 0.0)) throw std::invalid_argument("tin_indicator: noise power must be positive");
  const int m = ch.size();
  Eigen::MatrixXi ind(m, m);
  const double inv_noise = 1.0 / ch.noise_power;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) {
        ind(i, j) = 1;
        continue;
      }
      const double cross_snr = prm.p_max * std::norm(ch.h(i, j)) * inv_noise;
      const double weak_direct = std::min(std::norm(ch.h(i, i)), std::norm(ch.h(j, j)));
      const double rhs = prm.m_threshold * std::pow(prm.p_max * weak_direct * inv_noise, prm.eta);
      ind(i, j) = cross_snr >= rhs ? 1 : 0;
    }
  }
  return ind;
}

/// Masked squared-magnitude matrix, normalized by its 2-norm. Sparsity
/// pattern and node ordering follow the channel matrix.
inline Gso build_gso(const ChannelMatrix& ch, const TinParams& prm) {
  const Eigen::MatrixXi ind = tin_indicator(ch, prm);
  const int m = ch.size();
  Mat w(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (ind(i, j) == 0) {
        w(i, j) = 0.0;
        continue;
      }
      const double mag2 = std::norm(ch.h(i, j));
      w(i, j) = prm.mask_squared ? mag2 : std::sqrt(mag2);
    }
  }
  const double nrm = spectral_norm(w);
  if (!(nrm > 0.0)) throw std::runtime_error("build_gso: masked channel matrix is identically zero");
  return Gso{w / nrm, true};
}

}  // namespace cfgnn
