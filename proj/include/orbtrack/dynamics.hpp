#pragma once

#include <functional>
#include <optional>

#include "orbtrack/random.hpp"
#include "orbtrack/types.hpp"

namespace orbtrack {

/// Earth model constants (WGS-84 values by default). A j2 of zero disables
/// the oblateness term.
struct PhysicalConstants {
  double mu = 398600.4418;       // km^3/s^2
  double j2 = 1.08262668e-3;     // dimensionless
  double r_eq = 6378.137;        // km
  double omega_earth = 7.2921159e-5;  // rad/s

  void validate() const;
  bool operator==(const PhysicalConstants&) const = default;
};

/// Exponential-atmosphere drag model. area_to_mass == 0 disables drag.
struct DragParams {
  double area_to_mass = 0.01;        // m^2/kg
  double cd = 2.2;                   // dimensionless
  double rho0 = 3.614e-13;           // kg/m^3
  double r0 = 6378.137 + 700.0;      // km
  double scale_height = 88.667;      // km

  bool enabled() const { return area_to_mass > 0.0; }
  void validate() const;
  bool operator==(const DragParams&) const = default;
};

/// White-noise intensity of the additive forcing w(t): over a step of length
/// dt the state receives a N(0, dt * covariance) perturbation.
class ProcessNoise {
 public:
  explicit ProcessNoise(const Matrix6& covariance);
  static ProcessNoise isotropic(double variance) { return ProcessNoise(variance * Matrix6::Identity()); }

  const Matrix6& covariance() const { return covariance_; }
  /// Lower factor L with L * L^T == covariance.
  const Matrix6& factor() const { return factor_; }

 private:
  Matrix6 covariance_;
  Matrix6 factor_;
};

struct ForceModel {
  PhysicalConstants constants;
  DragParams drag;
};

/// Two-body force model with J2 and drag switched off.
ForceModel two_body(const PhysicalConstants& constants = {});

double atmospheric_density(double r, const DragParams& drag);

/// a_g + a_J2 + a_D in km/s^2. Drag acts on the velocity relative to the
/// co-rotating atmosphere, v - omega x r.
Vector3 total_acceleration(const StateVector& state, const ForceModel& model);

/// Right-hand side f(X) = [v; a(X)].
StateVector state_derivative(const StateVector& state, const ForceModel& model);

/// Called after every integrator step with (t, state); return false to stop.
using StepObserver = std::function<bool(double, const StateVector&)>;

/// Fixed-step RK4 from t0 to t1. Full steps of dt are taken from t0 and a
/// final partial step closes the interval. With noise and rng supplied,
/// sqrt(h) * L * xi is added to the state after each step of length h.
StateVector propagate(const StateVector& state, double t0, double t1, double dt, const ForceModel& model,
                      const ProcessNoise* noise = nullptr, RandomStream* rng = nullptr,
                      const StepObserver& observer = {});

/// Central-difference Jacobian of the noise-free flow map with column steps
/// h_i = max(1e-6, 1e-7 |x_i|).
Matrix6 flow_jacobian(const StateVector& state, double t0, double t1, double dt, const ForceModel& model);

double specific_energy(const StateVector& state, double mu);
Vector3 angular_momentum(const StateVector& state);

/// Semi-major axis from vis-viva; throws Error(Domain) for non-elliptic states.
double semi_major_axis(const StateVector& state, double mu);

/// T = 2 pi sqrt(a^3 / mu).
double keplerian_period(const StateVector& state, const PhysicalConstants& constants);

/// Propagation settings shared by the filters: forces, step and the
/// (optional) process noise intensity.
struct MotionModel {
  ForceModel forces;
  double dt = 10.0;
  std::optional<ProcessNoise> noise;

  StateVector propagate(const StateVector& state, double t0, double t1) const;
  StateVector propagate_noisy(const StateVector& state, double t0, double t1, RandomStream& rng) const;
  /// Noise covariance accumulated over an interval of the given length.
  Matrix6 noise_covariance(double duration) const;
};

void validate_state(const StateVector& state);

}  // namespace orbtrack
