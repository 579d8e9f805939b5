#include "orbtrack/depletion_analysis.hpp"

#include <cmath>
#include <numbers>

#include "orbtrack/errors.hpp"
#include "orbtrack/linalg.hpp"

namespace orbtrack {

namespace {

double log_peak_inverse(const DepletionConfig& config) {
  // log(1 / (b sqrt((2 pi)^k |R|))) with k = 2
  return -std::log(config.b) - 0.5 * (2.0 * std::log(2.0 * std::numbers::pi) + std::log(config.r.determinant()));
}

}  // namespace

void DepletionConfig::validate() const {
  validate_state(s0);
  if (!is_symmetric(p, 1e-10) || min_eigenvalue(p) < -1e-12 * std::max(1.0, max_eigenvalue(p)))
    throw Error(ErrorKind::Configuration, "p must be symmetric PSD");
  if (!is_symmetric(r, 1e-10) || !(min_eigenvalue(r) > 0.0))
    throw Error(ErrorKind::Configuration, "r must be symmetric positive definite");
  if (!(b > 0.0) || !std::isfinite(b)) throw Error(ErrorKind::Configuration, "b must be positive");
  if (!(dt > 0.0)) throw Error(ErrorKind::Configuration, "dt must be positive");
  constants.validate();
  station.validate();
}

RowVector6 period_gradient(const StateVector& s0, const PhysicalConstants& constants) {
  const double a = semi_major_axis(s0, constants.mu);
  const Vector3 r = position_of(s0);
  const double rn = r.norm();
  const double dT_da = 3.0 * std::numbers::pi * std::sqrt(a / constants.mu);
  RowVector6 grad;
  grad.head<3>() = (2.0 * a * a / (rn * rn * rn)) * r.transpose();
  grad.tail<3>() = (2.0 * a * a / constants.mu) * velocity_of(s0).transpose();
  return dT_da * grad;
}

Matrix26 sensitivity_matrix(const DepletionConfig& config, const RowVector6& dT_dS) {
  const double period = keplerian_period(config.s0, config.constants);
  const Matrix26 g = measurement_jacobian(config.s0, config.t0 + period, config.station);
  const StateVector f = state_derivative(config.s0, two_body(config.constants));
  return g * (Matrix6::Identity() - f * dT_dS);
}

Matrix26 sensitivity_matrix(const DepletionConfig& config) {
  return sensitivity_matrix(config, period_gradient(config.s0, config.constants));
}

Matrix2 composite_covariance(const DepletionConfig& config, const Matrix26& sensitivity) {
  const Matrix2 c = 2.0 * sensitivity * config.p * sensitivity.transpose() + config.r;
  return 0.5 * (c + c.transpose());
}

EllipseRadii ellipse_radii(const DepletionConfig& config, const Matrix26& sensitivity) {
  const double log_term = log_peak_inverse(config);
  if (!(log_term > 0.0)) throw Error(ErrorKind::EmptyThreshold, "threshold b is at or above the likelihood peak");
  const double n_sq = config.strict_radius_form ? log_term : 2.0 * log_term;
  const double alpha_min = min_eigenvalue(config.r);
  const double lambda_max = max_eigenvalue(composite_covariance(config, sensitivity));
  return {std::sqrt(n_sq), std::sqrt(alpha_min / lambda_max * n_sq)};
}

double chi2_2dof_cdf(double m) { return -std::expm1(-0.5 * m * m); }

double periodicity_residual(const DepletionConfig& config) {
  const double period = keplerian_period(config.s0, config.constants);
  const StateVector back =
      propagate(config.s0, config.t0, config.t0 + period, config.dt, two_body(config.constants));
  return (position_of(back) - position_of(config.s0)).norm();
}

DepletionResult depletion_lower_bound(const DepletionConfig& config, double periodicity_tolerance) {
  config.validate();
  const double residual = periodicity_residual(config);
  if (!(residual <= periodicity_tolerance))
    throw Error(ErrorKind::Numerical, "s0 does not return to itself after one period (" +
                                          std::to_string(residual) + " km)");
  DepletionResult result;
  result.period = keplerian_period(config.s0, config.constants);
  result.sensitivity = sensitivity_matrix(config);
  result.composite_cov = composite_covariance(config, result.sensitivity);
  try {
    const EllipseRadii radii = ellipse_radii(config, result.sensitivity);
    result.n_radius = radii.n;
    result.m_radius = radii.m;
    result.lower_bound = chi2_2dof_cdf(radii.m);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::EmptyThreshold) throw;
    result.empty_threshold = true;
  }
  return result;
}

RetentionEstimate monte_carlo_retention(const DepletionConfig& config, std::size_t n_samples, RandomStream& rng) {
  config.validate();
  if (n_samples < 1000) throw Error(ErrorKind::Configuration, "monte carlo retention needs at least 1000 samples");
  const double period = keplerian_period(config.s0, config.constants);
  const double t1 = config.t0 + period;
  const ForceModel forces = two_body(config.constants);
  const Matrix6 p_root = covariance_sqrt(config.p);
  const Matrix2 r_root = covariance_sqrt(config.r);
  const Eigen::LLT<Matrix2> r_llt(config.r);
  const double log_threshold = std::log(config.b);
  const double log_norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(config.r.determinant());

  RetentionEstimate out;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const StateVector s = config.s0 + p_root * rng.standard_normal_state();
    const StateVector s_true = config.s0 + p_root * rng.standard_normal_state();
    const Vector2 nu = r_root * rng.standard_normal_2();
    try {
      const Vector2 y = measure_ideal(propagate(s_true, config.t0, t1, config.dt, forces), t1, config.station) + nu;
      const Vector2 predicted = measure_ideal(propagate(s, config.t0, t1, config.dt, forces), t1, config.station);
      const Vector2 dy = angle_residual(y, predicted);
      const double log_l = log_norm - 0.5 * dy.dot(r_llt.solve(dy));
      ++out.accepted;
      if (log_l > log_threshold) ++out.retained;
    } catch (const Error&) {
      ++out.failures;
    }
  }
  if (out.accepted > 0) {
    const double n = static_cast<double>(out.accepted);
    out.retention = static_cast<double>(out.retained) / n;
    out.binomial_sigma = std::sqrt(out.retention * (1.0 - out.retention) / n);
  }
  return out;
}

}  // namespace orbtrack
