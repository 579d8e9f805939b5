#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "orbtrack/dynamics.hpp"
#include "orbtrack/observation.hpp"
#include "orbtrack/types.hpp"

namespace testutil {

inline constexpr double kPi = std::numbers::pi;

inline orbtrack::StateVector case1_state() {
  orbtrack::StateVector s;
  s << 7800.0, 0.0, 0.0, 0.0, 6.8443 * std::cos(kPi / 4), 6.8443 * std::sin(kPi / 4);
  return s;
}

inline orbtrack::StateVector circular_state(double r, double mu = 398600.4418) {
  orbtrack::StateVector s;
  s << r, 0.0, 0.0, 0.0, std::sqrt(mu / r), 0.0;
  return s;
}

/// State whose station-frame line of sight at t = 0 has the given angles and range.
inline orbtrack::StateVector state_at_angles(double theta, double phi, double range,
                                             const orbtrack::StationModel& station = {}) {
  const orbtrack::Vector3 rho(range * std::cos(theta) * std::cos(phi), range * std::cos(theta) * std::sin(phi),
                              range * std::sin(theta));
  orbtrack::StateVector s;
  s << station.r_station_ecef + rho, 0.0, 7.5, 0.0;
  return s;
}

inline orbtrack::Matrix6 random_spd(std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> n;
  orbtrack::Matrix6 a;
  for (int i = 0; i < 36; ++i) a(i) = n(gen);
  return scale * (a * a.transpose() + 0.1 * orbtrack::Matrix6::Identity());
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace testutil
