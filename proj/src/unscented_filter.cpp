#include "orbtrack/unscented_filter.hpp"

#include <cmath>

#include "orbtrack/errors.hpp"
#include "orbtrack/linalg.hpp"

namespace orbtrack {

namespace {

constexpr int kDim = 6;

Vector2 measurement_difference(const Vector2& a, const Vector2& b, bool wrap_second) {
  if (wrap_second) return angle_residual(a, b);
  return a - b;
}

}  // namespace

void UtParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::Configuration, "UT alpha must lie in (0, 1]");
  if (!std::isfinite(beta) || !std::isfinite(kappa)) throw Error(ErrorKind::Configuration, "UT parameters must be finite");
  if (!(alpha * alpha * (kDim + kappa) > 0.0))
    throw Error(ErrorKind::Configuration, "UT spread alpha^2 (n + kappa) must be positive");
}

SigmaPoints sigma_points(const GaussianBelief& belief, const UtParams& params) {
  params.validate();
  const double spread = params.alpha * params.alpha * (kDim + params.kappa);
  const double lambda = spread - kDim;
  const Matrix6 root = covariance_sqrt(belief.cov) * std::sqrt(spread);

  SigmaPoints sigma;
  sigma.points[0] = belief.mean;
  sigma.mean_weights[0] = lambda / spread;
  sigma.cov_weights[0] = lambda / spread + (1.0 - params.alpha * params.alpha + params.beta);
  const double w = 0.5 / spread;
  for (int i = 0; i < kDim; ++i) {
    sigma.points[1 + i] = belief.mean + root.col(i);
    sigma.points[1 + kDim + i] = belief.mean - root.col(i);
    sigma.mean_weights[1 + i] = sigma.mean_weights[1 + kDim + i] = w;
    sigma.cov_weights[1 + i] = sigma.cov_weights[1 + kDim + i] = w;
  }
  return sigma;
}

GaussianBelief recombine(const SigmaPoints& sigma, double t) {
  GaussianBelief out;
  out.t = t;
  out.mean.setZero();
  for (int i = 0; i < kSigmaCount; ++i) out.mean += sigma.mean_weights[i] * sigma.points[i];
  out.cov.setZero();
  for (int i = 0; i < kSigmaCount; ++i) {
    const StateVector d = sigma.points[i] - out.mean;
    out.cov += sigma.cov_weights[i] * d * d.transpose();
  }
  out.cov = symmetrize(out.cov);
  return out;
}

GaussianBelief ukf_predict(const GaussianBelief& belief, double t1, const Transition& transition,
                           const Matrix6& noise_rate, const UtParams& params) {
  if (!(t1 >= belief.t)) throw Error(ErrorKind::Configuration, "prediction time precedes belief time");
  if (t1 == belief.t) return belief;
  SigmaPoints sigma = sigma_points(belief, params);
  for (auto& point : sigma.points) point = transition(point, belief.t, t1);
  GaussianBelief out = recombine(sigma, t1);
  out.cov += (t1 - belief.t) * noise_rate;
  return out;
}

GaussianBelief ukf_predict(const GaussianBelief& belief, double t1, const MotionModel& model,
                           const UtParams& params) {
  const Transition transition = [&model](const StateVector& x, double t0, double t) {
    return model.propagate(x, t0, t);
  };
  const Matrix6 rate = model.noise ? model.noise->covariance() : Matrix6::Zero();
  return ukf_predict(belief, t1, transition, rate, params);
}

MeasurementModel station_measurement_model(const StationModel& station) {
  MeasurementModel model;
  model.h = [station](const StateVector& x, double t) { return measure_ideal(x, t, station); };
  model.r = station.noise_cov;
  model.wrap_second = true;
  return model;
}

GaussianBelief ukf_update(const GaussianBelief& belief, const Vector2& z, const MeasurementModel& model,
                          const UtParams& params) {
  const SigmaPoints sigma = sigma_points(belief, params);

  std::array<Vector2, kSigmaCount> predicted;
  for (int i = 0; i < kSigmaCount; ++i) predicted[i] = model.h(sigma.points[i], belief.t);

  // Mean of the predicted measurements, taken relative to the central point so
  // angle wrap-around does not split the average.
  Vector2 z_hat = predicted[0];
  {
    Vector2 offset = Vector2::Zero();
    for (int i = 0; i < kSigmaCount; ++i)
      offset += sigma.mean_weights[i] * measurement_difference(predicted[i], predicted[0], model.wrap_second);
    z_hat += offset;
  }

  Matrix2 innovation_cov = model.r;
  Eigen::Matrix<double, 6, 2> cross = Eigen::Matrix<double, 6, 2>::Zero();
  for (int i = 0; i < kSigmaCount; ++i) {
    const Vector2 dz = measurement_difference(predicted[i], z_hat, model.wrap_second);
    innovation_cov += sigma.cov_weights[i] * dz * dz.transpose();
    cross += sigma.cov_weights[i] * (sigma.points[i] - belief.mean) * dz.transpose();
  }
  innovation_cov = 0.5 * (innovation_cov + innovation_cov.transpose());

  const Eigen::LLT<Matrix2> llt(innovation_cov);
  if (llt.info() != Eigen::Success || !innovation_cov.allFinite())
    throw Error(ErrorKind::Numerical, "innovation covariance is singular");

  const Eigen::Matrix<double, 6, 2> gain = llt.solve(cross.transpose()).transpose();
  const Vector2 innovation = measurement_difference(z, z_hat, model.wrap_second);

  GaussianBelief out;
  out.t = belief.t;
  out.mean = belief.mean + gain * innovation;
  out.cov = symmetrize(belief.cov - gain * innovation_cov * gain.transpose());
  return out;
}

GaussianBelief ukf_update(const GaussianBelief& belief, const Measurement& z, const StationModel& station,
                          const UtParams& params) {
  if (std::abs(z.t - belief.t) > 1e-9 * std::max(1.0, std::abs(z.t)))
    throw Error(ErrorKind::Configuration, "measurement time does not match belief time");
  return ukf_update(belief, z.angles(), station_measurement_model(station), params);
}

}  // namespace orbtrack
