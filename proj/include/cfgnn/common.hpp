#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace cfgnn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Instantaneous channel state: h(i,j) is the complex gain from Tx_i to Rx_j,
/// noise_power is the receiver noise variance in watts.
struct ChannelMatrix {
  CMat h;
  double noise_power = 0.0;

  int size() const { return static_cast<int>(h.rows()); }
};

}  // namespace cfgnn
