#include "orbtrack/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "orbtrack/errors.hpp"
#include "orbtrack/linalg.hpp"

namespace orbtrack {

namespace {

constexpr double kMinStep = 1e-6;

// rho [kg/m^3] * A/m [m^2/kg] * v^2 [m^2/s^2] is m/s^2. With v in km/s that
// picks up 1e6, and converting the result to km/s^2 divides by 1e3.
constexpr double kDragUnitScale = 1000.0;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw Error(ErrorKind::Configuration, std::string(name) + " must be positive and finite");
}

StateVector rk4_step(const StateVector& x, double h, const ForceModel& model) {
  const StateVector k1 = state_derivative(x, model);
  const StateVector k2 = state_derivative(x + 0.5 * h * k1, model);
  const StateVector k3 = state_derivative(x + 0.5 * h * k2, model);
  const StateVector k4 = state_derivative(x + h * k3, model);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

void PhysicalConstants::validate() const {
  require_positive(mu, "mu");
  require_positive(r_eq, "r_eq");
  require_positive(omega_earth, "omega_earth");
  if (!(j2 >= 0.0 && j2 < 1.0)) throw Error(ErrorKind::Configuration, "j2 must lie in [0, 1)");
}

void DragParams::validate() const {
  if (!(area_to_mass >= 0.0) || !std::isfinite(area_to_mass))
    throw Error(ErrorKind::Configuration, "area_to_mass must be non-negative");
  require_positive(cd, "cd");
  require_positive(rho0, "rho0");
  require_positive(r0, "r0");
  require_positive(scale_height, "scale_height");
}

ProcessNoise::ProcessNoise(const Matrix6& covariance) : covariance_(covariance) {
  if (!covariance.allFinite()) throw Error(ErrorKind::Configuration, "process noise has non-finite entries");
  if (!is_symmetric(covariance, 1e-12)) throw Error(ErrorKind::Configuration, "process noise is not symmetric");
  if (min_eigenvalue(covariance) < -1e-12 * std::max(covariance.cwiseAbs().maxCoeff(), 1e-300))
    throw Error(ErrorKind::Configuration, "process noise is not positive semi-definite");
  factor_ = covariance_sqrt(covariance);
}

ForceModel two_body(const PhysicalConstants& constants) {
  ForceModel model;
  model.constants = constants;
  model.constants.j2 = 0.0;
  model.drag.area_to_mass = 0.0;
  return model;
}

double atmospheric_density(double r, const DragParams& drag) {
  return drag.rho0 * std::exp(-(r - drag.r0) / drag.scale_height);
}

void validate_state(const StateVector& state) {
  if (!state.allFinite()) throw Error(ErrorKind::InvalidState, "state has non-finite components");
  if (!(position_of(state).norm() > 0.0)) throw Error(ErrorKind::InvalidState, "position norm must be positive");
}

Vector3 total_acceleration(const StateVector& state, const ForceModel& model) {
  const Vector3 r_vec = position_of(state);
  const double r = r_vec.norm();
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidState, "position norm must be positive");

  const PhysicalConstants& c = model.constants;
  const double r2 = r * r;
  Vector3 acc = -c.mu / (r2 * r) * r_vec;

  if (c.j2 != 0.0) {
    const double zr = r_vec.z() / r;
    const double zr2 = zr * zr;
    const double req_r = c.r_eq / r;
    const double scale = -1.5 * c.j2 * (c.mu / r2) * req_r * req_r;
    acc.x() += scale * (1.0 - 5.0 * zr2) * r_vec.x() / r;
    acc.y() += scale * (1.0 - 5.0 * zr2) * r_vec.y() / r;
    acc.z() += scale * (3.0 - 5.0 * zr2) * zr;
  }

  const DragParams& d = model.drag;
  if (d.enabled()) {
    const Vector3 omega(0.0, 0.0, c.omega_earth);
    const Vector3 v_rel = velocity_of(state) - omega.cross(r_vec);
    const double speed = v_rel.norm();
    if (speed > 0.0) {
      const double rho = atmospheric_density(r, d);
      acc -= 0.5 * d.area_to_mass * d.cd * rho * kDragUnitScale * speed * v_rel;
    }
  }
  return acc;
}

StateVector state_derivative(const StateVector& state, const ForceModel& model) {
  StateVector dx;
  dx.head<3>() = velocity_of(state);
  dx.tail<3>() = total_acceleration(state, model);
  return dx;
}

StateVector propagate(const StateVector& state, double t0, double t1, double dt, const ForceModel& model,
                      const ProcessNoise* noise, RandomStream* rng, const StepObserver& observer) {
  if (!(dt >= kMinStep)) throw Error(ErrorKind::Configuration, "integrator step below 1e-6 s");
  if (!(t1 >= t0)) throw Error(ErrorKind::Configuration, "propagation end precedes start");
  if (noise != nullptr && rng == nullptr) throw Error(ErrorKind::Configuration, "process noise requires a generator");

  const double span = t1 - t0;
  auto full_steps = static_cast<long long>(std::floor(span / dt + 1e-9));
  double remainder = span - static_cast<double>(full_steps) * dt;
  if (remainder < 1e-9 * dt) remainder = 0.0;

  StateVector x = state;
  double t = t0;
  auto advance = [&](double h) {
    x = rk4_step(x, h, model);
    if (noise != nullptr) x += std::sqrt(h) * (noise->factor() * rng->standard_normal_state());
    if (!x.allFinite()) throw Error(ErrorKind::Propagation, "state became non-finite during integration");
    t += h;
    return !observer || observer(t, x);
  };

  for (long long i = 0; i < full_steps; ++i) {
    if (!advance(dt)) return x;
  }
  if (remainder > 0.0) advance(remainder);
  return x;
}

Matrix6 flow_jacobian(const StateVector& state, double t0, double t1, double dt, const ForceModel& model) {
  Matrix6 jac;
  for (int i = 0; i < 6; ++i) {
    const double h = std::max(1e-6, 1e-7 * std::abs(state(i)));
    StateVector plus = state;
    StateVector minus = state;
    plus(i) += h;
    minus(i) -= h;
    // Use the realised perturbation so representation error does not bias the quotient.
    const double width = plus(i) - minus(i);
    jac.col(i) = (propagate(plus, t0, t1, dt, model) - propagate(minus, t0, t1, dt, model)) / width;
  }
  return jac;
}

double specific_energy(const StateVector& state, double mu) {
  return 0.5 * velocity_of(state).squaredNorm() - mu / position_of(state).norm();
}

Vector3 angular_momentum(const StateVector& state) { return position_of(state).cross(velocity_of(state)); }

double semi_major_axis(const StateVector& state, double mu) {
  validate_state(state);
  const double energy = specific_energy(state, mu);
  if (!(energy < 0.0)) throw Error(ErrorKind::Domain, "state is not on an elliptic orbit");
  return -mu / (2.0 * energy);
}

double keplerian_period(const StateVector& state, const PhysicalConstants& constants) {
  const double a = semi_major_axis(state, constants.mu);
  return 2.0 * std::numbers::pi * std::sqrt(a * a * a / constants.mu);
}

StateVector MotionModel::propagate(const StateVector& state, double t0, double t1) const {
  return orbtrack::propagate(state, t0, t1, dt, forces);
}

StateVector MotionModel::propagate_noisy(const StateVector& state, double t0, double t1, RandomStream& rng) const {
  if (!noise) return propagate(state, t0, t1);
  return orbtrack::propagate(state, t0, t1, dt, forces, &*noise, &rng);
}

Matrix6 MotionModel::noise_covariance(double duration) const {
  if (!noise) return Matrix6::Zero();
  return duration * noise->covariance();
}

}  // namespace orbtrack
