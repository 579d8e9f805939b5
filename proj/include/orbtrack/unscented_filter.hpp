#pragma once

#include <array>
#include <functional>

#include "orbtrack/dynamics.hpp"
#include "orbtrack/observation.hpp"
#include "orbtrack/types.hpp"

namespace orbtrack {

/// Scaled unscented transform parameters. lambda = alpha^2 (n + kappa) - n.
struct UtParams {
  double alpha = 1.0;
  double beta = 2.0;
  double kappa = -3.0;

  void validate() const;
  bool operator==(const UtParams&) const = default;
};

inline constexpr int kSigmaCount = 13;

struct SigmaPoints {
  std::array<StateVector, kSigmaCount> points;
  std::array<double, kSigmaCount> mean_weights;
  std::array<double, kSigmaCount> cov_weights;
};

/// 2n+1 points mean, mean +/- sqrt(n + lambda) S_i with S S^T = cov.
SigmaPoints sigma_points(const GaussianBelief& belief, const UtParams& params);

/// Weighted mean and covariance of a sigma-point set (used to close the loop in tests
/// and by the filter).
GaussianBelief recombine(const SigmaPoints& sigma, double t);

/// Noise-free state transition from t0 to t1.
using Transition = std::function<StateVector(const StateVector&, double, double)>;

/// Propagates every sigma point through `transition`, recombines and adds
/// (t1 - t0) * noise_rate.
GaussianBelief ukf_predict(const GaussianBelief& belief, double t1, const Transition& transition,
                           const Matrix6& noise_rate, const UtParams& params);

GaussianBelief ukf_predict(const GaussianBelief& belief, double t1, const MotionModel& model,
                           const UtParams& params);

/// Generic two-dimensional measurement h(x, t) with noise covariance r.
/// When wrap_second is set the second component is treated as an angle.
struct MeasurementModel {
  std::function<Vector2(const StateVector&, double)> h;
  Matrix2 r = Matrix2::Identity();
  bool wrap_second = true;
};

MeasurementModel station_measurement_model(const StationModel& station);

GaussianBelief ukf_update(const GaussianBelief& belief, const Vector2& z, const MeasurementModel& model,
                          const UtParams& params);

/// Angle update from the ground station; z.t must equal belief.t.
GaussianBelief ukf_update(const GaussianBelief& belief, const Measurement& z, const StationModel& station,
                          const UtParams& params);

}  // namespace orbtrack
