#pragma once

#include <Eigen/Dense>

namespace orbtrack {

/// Inertial Cartesian state [x1 x2 x3 v1 v2 v3] in km and km/s.
using StateVector = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;
using Matrix26 = Eigen::Matrix<double, 2, 6>;

inline Vector3 position_of(const StateVector& x) { return x.head<3>(); }
inline Vector3 velocity_of(const StateVector& x) { return x.tail<3>(); }

inline StateVector make_state(const Vector3& r, const Vector3& v) {
  StateVector x;
  x << r, v;
  return x;
}

/// Mean and covariance of a Gaussian state pdf at time t (s).
struct GaussianBelief {
  StateVector mean = StateVector::Zero();
  Matrix6 cov = Matrix6::Zero();
  double t = 0.0;
};

}  // namespace orbtrack
