#include "orbtrack/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "orbtrack/errors.hpp"
#include "orbtrack/linalg.hpp"

namespace orbtrack {

void StationModel::validate() const {
  if (!r_station_ecef.allFinite()) throw Error(ErrorKind::Configuration, "station position must be finite");
  if (!(omega > 0.0)) throw Error(ErrorKind::Configuration, "station omega must be positive");
  auto halfwidth_ok = [](double h) { return h > 0.0 && h <= std::numbers::pi; };
  if (!halfwidth_ok(fov_azimuth_halfwidth) || !halfwidth_ok(fov_polar_halfwidth))
    throw Error(ErrorKind::Configuration, "FOV halfwidths must lie in (0, pi]");
  if (!(detection_prob >= 0.0 && detection_prob <= 1.0))
    throw Error(ErrorKind::Configuration, "detection_prob must lie in [0, 1]");
  if (!noise_cov.allFinite() || !is_symmetric(noise_cov, 1e-12) || min_eigenvalue(noise_cov) < 0.0)
    throw Error(ErrorKind::Configuration, "noise_cov must be symmetric positive semi-definite");
}

Matrix3 station_rotation(double t, double omega) {
  const double c = std::cos(omega * t);
  const double s = std::sin(omega * t);
  Matrix3 rot;
  rot << c, s, 0.0,
        -s, c, 0.0,
        0.0, 0.0, 1.0;
  return rot;
}

Vector3 station_position_inertial(double t, const StationModel& station) {
  return station_rotation(t, station.omega).transpose() * station.r_station_ecef;
}

Vector3 relative_position_station(const StateVector& state, double t, const StationModel& station) {
  const Vector3 rho_inertial = position_of(state) - station_position_inertial(t, station);
  return station_rotation(t, station.omega) * rho_inertial;
}

Vector2 measure_ideal(const StateVector& state, double t, const StationModel& station) {
  const Vector3 rho = relative_position_station(state, t, station);
  const double range = rho.norm();
  if (!(range > 0.0)) throw Error(ErrorKind::DegenerateGeometry, "object coincides with the station");
  const double theta = std::asin(std::clamp(rho.z() / range, -1.0, 1.0));
  const double phi = std::atan2(rho.y(), rho.x());
  return {theta, phi};
}

bool in_fov(const StateVector& state, double t, const StationModel& station) {
  const Vector3 rho = relative_position_station(state, t, station);
  if (!(rho.norm() > 0.0)) return false;
  const Vector2 angles = measure_ideal(state, t, station);
  return std::abs(angles(1)) <= station.fov_azimuth_halfwidth && std::abs(angles(0)) <= station.fov_polar_halfwidth;
}

std::optional<Measurement> try_measure(const StateVector& state, double t, const StationModel& station,
                                       RandomStream& rng) {
  if (!in_fov(state, t, station)) return std::nullopt;
  if (!(rng.uniform() < station.detection_prob)) return std::nullopt;
  const Vector2 ideal = measure_ideal(state, t, station);
  const Matrix2 factor = covariance_sqrt(station.noise_cov);
  const Vector2 noisy = ideal + factor * rng.standard_normal_2();
  Measurement z;
  z.t = t;
  z.theta = std::clamp(noisy(0), -0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
  z.phi = wrap_angle(noisy(1));
  return z;
}

Vector2 angle_residual(const Vector2& z, const Vector2& predicted) {
  return {z(0) - predicted(0), wrap_angle(z(1) - predicted(1))};
}

double measurement_log_likelihood(const Measurement& z, const StateVector& state, double t,
                                  const StationModel& station) {
  const Eigen::LLT<Matrix2> llt(station.noise_cov);
  if (llt.info() != Eigen::Success || !(station.noise_cov.determinant() > 0.0))
    throw Error(ErrorKind::Configuration, "measurement noise covariance is singular");
  const Vector2 residual = angle_residual(z.angles(), measure_ideal(state, t, station));
  const double quad = residual.dot(llt.solve(residual));
  const Matrix2 l = llt.matrixL();
  const double log_det = 2.0 * (std::log(l(0, 0)) + std::log(l(1, 1)));
  return -0.5 * quad - std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
}

Matrix26 measurement_jacobian(const StateVector& state, double t, const StationModel& station) {
  Matrix26 jac;
  for (int i = 0; i < 6; ++i) {
    const double h = std::max(1e-6, 1e-7 * std::abs(state(i)));
    StateVector plus = state;
    StateVector minus = state;
    plus(i) += h;
    minus(i) -= h;
    const double width = plus(i) - minus(i);
    jac.col(i) = angle_residual(measure_ideal(plus, t, station), measure_ideal(minus, t, station)) / width;
  }
  return jac;
}

}  // namespace orbtrack
