#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cfgnn/common.hpp"

namespace cfgnn {

namespace detail {

inline void check_link_dims(const ChannelMatrix& ch, const Vec& p, const char* where) {
  if (ch.h.rows() != ch.h.cols()) throw std::invalid_argument(std::string(where) + ": channel matrix must be square");
  if (p.size() != ch.h.rows()) throw std::invalid_argument(std::string(where) + ": power vector size does not match channel");
  if (!(ch.noise_power > 0.0)) throw std::invalid_argument(std::string(where) + ": noise power must be positive");
  if (p.size() > 0 && !(p.minCoeff() >= 0.0))
    throw std::invalid_argument(std::string(where) + ": transmit powers must be nonnegative");
}

}  // namespace detail

/// SINR at each receiver for transmit powers p (watts). Interference into
/// Rx_i comes from column i of the channel matrix: h(j,i) carries Tx_j -> Rx_i.
inline Vec sinr(const ChannelMatrix& ch, const Vec& p) {
  detail::check_link_dims(ch, p, "sinr");
  const int m = ch.size();
  Vec out(m);
  for (int i = 0; i < m; ++i) {
    double den = ch.noise_power;
    for (int j = 0; j < m; ++j) {
      if (j != i) den += std::norm(ch.h(j, i)) * p(j);
    }
    out(i) = std::norm(ch.h(i, i)) * p(i) / den;
  }
  return out;
}

/// Per-link spectral efficiency log2(1 + SINR) in bits/s/Hz.
inline Vec capacity(const ChannelMatrix& ch, const Vec& p) {
  Vec s = sinr(ch, p);
  for (int i = 0; i < s.size(); ++i) s(i) = std::log2(1.0 + s(i));
  return s;
}

/// Closed-form Jacobian of the capacity vector: entry (i,j) = dC_i/dp_j.
/// Diagonal entries are nonnegative, off-diagonal nonpositive.
inline Mat capacity_jacobian(const ChannelMatrix& ch, const Vec& p) {
  detail::check_link_dims(ch, p, "capacity_jacobian");
  const int m = ch.size();
  const double inv_ln2 = 1.0 / std::log(2.0);
  Mat jac(m, m);
  for (int i = 0; i < m; ++i) {
    double den = ch.noise_power;
    for (int k = 0; k < m; ++k) {
      if (k != i) den += std::norm(ch.h(k, i)) * p(k);
    }
    const double direct = std::norm(ch.h(i, i));
    const double total = den + direct * p(i);
    const double snr = direct * p(i) / den;
    for (int j = 0; j < m; ++j) {
      if (j == i) {
        jac(i, j) = inv_ln2 * direct / total;
      } else {
        jac(i, j) = -inv_ln2 * snr * std::norm(ch.h(j, i)) / total;
      }
    }
  }
  return jac;
}

inline double sum_rate(const Vec& rates) {
  if (rates.size() == 0) throw std::invalid_argument("sum_rate: empty rate vector");
  return rates.sum();
}

/// Empirical q-quantile with linear interpolation between order statistics:
/// position (n-1)*q in the sorted sample, fractional part interpolated.
inline double percentile_rate(const Vec& rates, double q) {
  if (rates.size() == 0) throw std::invalid_argument("percentile_rate: empty rate vector");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("percentile_rate: q must lie in (0,1)");
  std::vector<double> sorted(rates.data(), rates.data() + rates.size());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace cfgnn
