#pragma once

#include <cstddef>

#include "orbtrack/dynamics.hpp"
#include "orbtrack/observation.hpp"
#include "orbtrack/random.hpp"
#include "orbtrack/types.hpp"

namespace orbtrack {

using RowVector6 = Eigen::Matrix<double, 1, 6>;

struct DepletionConfig {
  StateVector s0 = StateVector::Zero();  // mean initial state
  Matrix6 p = Matrix6::Zero();           // initial covariance
  Matrix2 r = Matrix2::Identity();       // measurement covariance (rad^2)
  double b = 1.0;                        // likelihood threshold (density units)
  // n^2 = log(...) without the usual factor 2 when true, 2 log(...) when false.
  bool strict_radius_form = true;
  PhysicalConstants constants;
  StationModel station;
  double t0 = 0.0;   // epoch of s0
  double dt = 10.0;  // integrator step for the periodicity check and the oracle

  void validate() const;
};

struct DepletionResult {
  double m_radius = 0.0;
  double n_radius = 0.0;
  Matrix26 sensitivity = Matrix26::Zero();
  Matrix2 composite_cov = Matrix2::Zero();
  double lower_bound = 0.0;
  double period = 0.0;
  bool empty_threshold = false;  // b at or above the density peak
};

/// dT/dS of the two-body period at s0 (s per km, s per km/s).
RowVector6 period_gradient(const StateVector& s0, const PhysicalConstants& constants);

/// M = G (I - f(s0) dT/dS) with G the measurement Jacobian at s0 one period
/// after t0. The gradient argument lets callers substitute dT/dS.
Matrix26 sensitivity_matrix(const DepletionConfig& config, const RowVector6& dT_dS);
Matrix26 sensitivity_matrix(const DepletionConfig& config);

/// C = 2 M P M^T + R.
Matrix2 composite_covariance(const DepletionConfig& config, const Matrix26& sensitivity);

struct EllipseRadii {
  double n = 0.0;
  double m = 0.0;
};

/// Throws Error(EmptyThreshold) when b is at or above the density peak.
EllipseRadii ellipse_radii(const DepletionConfig& config, const Matrix26& sensitivity);

/// 2-dof chi-square CDF at m^2.
double chi2_2dof_cdf(double m);

/// Position error after noise-free two-body propagation of s0 over one period.
double periodicity_residual(const DepletionConfig& config);

/// Full bound computation. Checks periodicity first (Error(Numerical) when the
/// return error exceeds `periodicity_tolerance` km). An empty threshold set
/// gives a zero bound with empty_threshold set.
DepletionResult depletion_lower_bound(const DepletionConfig& config, double periodicity_tolerance = 1e-3);

struct RetentionEstimate {
  double retention = 0.0;  // fraction of accepted samples with L(S) > b
  std::size_t accepted = 0;
  std::size_t retained = 0;
  std::size_t failures = 0;  // samples whose propagation failed
  double binomial_sigma = 0.0;
};

/// Monte Carlo oracle: S, S* ~ N(s0, P), nu ~ N(0, R), both propagated one
/// period of s0 under two-body dynamics; y = g(S*) + nu and S is retained
/// when the Gaussian likelihood of y given S exceeds b.
RetentionEstimate monte_carlo_retention(const DepletionConfig& config, std::size_t n_samples, RandomStream& rng);

}  // namespace orbtrack
