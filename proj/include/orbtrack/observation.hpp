#pragma once

#include <numbers>
#include <optional>

#include "orbtrack/random.hpp"
#include "orbtrack/types.hpp"

namespace orbtrack {

/// 3.9 arcsec expressed in radians.
inline constexpr double kArcsec39 = 3.9 / 3600.0 * std::numbers::pi / 180.0;

/// Equatorial ground sensor. The station frame is aligned with the inertial
/// frame at t = 0 and spins about the polar axis at omega.
struct StationModel {
  Vector3 r_station_ecef{6378.137, 0.0, 0.0};  // km
  double omega = 7.2921159e-5;                 // rad/s
  double fov_azimuth_halfwidth = 75.0 * std::numbers::pi / 180.0;
  double fov_polar_halfwidth = 90.0 * std::numbers::pi / 180.0;
  double detection_prob = 0.9;
  Matrix2 noise_cov = kArcsec39 * kArcsec39 * Matrix2::Identity();  // rad^2

  void validate() const;
  bool operator==(const StationModel&) const = default;
};

/// Time-tagged angle pair; theta in [-pi/2, pi/2], phi in (-pi, pi].
struct Measurement {
  double t = 0.0;
  double theta = 0.0;
  double phi = 0.0;

  Vector2 angles() const { return {theta, phi}; }
};

/// Inertial-to-station rotation C(t) about the polar axis.
Matrix3 station_rotation(double t, double omega);

/// Station position in the inertial frame at time t.
Vector3 station_position_inertial(double t, const StationModel& station);

/// Station-frame line-of-sight vector C(t) (r - r_s(t)).
Vector3 relative_position_station(const StateVector& state, double t, const StationModel& station);

/// Noise-free (theta, phi) = (asin(rho_z / rho), atan2(rho_y, rho_x)).
/// Throws Error(DegenerateGeometry) when the object sits on the station.
Vector2 measure_ideal(const StateVector& state, double t, const StationModel& station);

/// Closed box |phi| <= azimuth halfwidth and |theta| <= polar halfwidth.
bool in_fov(const StateVector& state, double t, const StationModel& station);

/// FOV gate, Bernoulli detection, then additive Gaussian noise with theta
/// clamped and phi wrapped back into range. No draws are made outside the FOV.
std::optional<Measurement> try_measure(const StateVector& state, double t, const StationModel& station,
                                       RandomStream& rng);

/// Log of the bivariate Gaussian density of z - H(state) with the phi
/// residual wrapped to (-pi, pi].
double measurement_log_likelihood(const Measurement& z, const StateVector& state, double t,
                                  const StationModel& station);

/// Residual z - H(state) with phi wrapped.
Vector2 angle_residual(const Vector2& z, const Vector2& predicted);

/// Central-difference dH/dX at (state, t), steps as in flow_jacobian.
Matrix26 measurement_jacobian(const StateVector& state, double t, const StationModel& station);

}  // namespace orbtrack
