#include "orbtrack/consistency_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "orbtrack/errors.hpp"
#include "orbtrack/linalg.hpp"

namespace orbtrack {

Matrix6 pcrb_step(const Matrix6& bound, const PcrbStep& step) {
  const Matrix6 eye = Matrix6::Identity();
  const Matrix6 k_inv = (eye + bound * step.f_spread).partialPivLu().solve(bound);
  const Matrix6 predicted = step.q + step.f_mean * k_inv * step.f_mean.transpose();
  const Matrix6 next = (eye + predicted * step.info).partialPivLu().solve(predicted);
  return 0.5 * (next + next.transpose());
}

std::vector<Matrix6> pcrb_recursion(const Matrix6& p0, const std::vector<PcrbStep>& steps) {
  std::vector<Matrix6> bounds{p0};
  bounds.reserve(steps.size() + 1);
  for (const auto& s : steps) bounds.push_back(pcrb_step(bounds.back(), s));
  return bounds;
}

std::vector<Matrix6> pcrb_series(const PcrbSetup& setup, RandomStream& rng) {
  if (!setup.model.noise) throw Error(ErrorKind::Configuration, "PCRB needs process noise");
  if (setup.draws < 1) throw Error(ErrorKind::Configuration, "PCRB needs at least one draw");
  if (setup.times.empty() || std::abs(setup.times.front() - setup.initial.t) > 1e-9)
    throw Error(ErrorKind::Configuration, "PCRB epochs must start at the initial belief time");

  const Matrix6 root = covariance_sqrt(setup.initial.cov);
  std::vector<StateVector> draws;
  draws.reserve(setup.draws);
  for (std::size_t i = 0; i < setup.draws; ++i) draws.push_back(setup.initial.mean + root * rng.standard_normal_state());

  const Matrix2 r_inv = spd_inverse(setup.station.noise_cov);
  const double weight = 1.0 / static_cast<double>(setup.draws);
  std::vector<Matrix6> bounds{setup.initial.cov};
  for (std::size_t k = 1; k < setup.times.size(); ++k) {
    const double t0 = setup.times[k - 1];
    const double t1 = setup.times[k];
    PcrbStep step;
    step.q = setup.model.noise_covariance(t1 - t0);
    const Matrix6 q_inv = spd_inverse(step.q);

    std::vector<Matrix6> jacobians;
    jacobians.reserve(draws.size());
    step.f_mean.setZero();
    for (auto& x : draws) {
      jacobians.push_back(flow_jacobian(x, t0, t1, setup.model.dt, setup.model.forces));
      step.f_mean += weight * jacobians.back();
      x = setup.model.propagate_noisy(x, t0, t1, rng);
      if (in_fov(x, t1, setup.station)) {
        const Matrix26 h = measurement_jacobian(x, t1, setup.station);
        step.info += weight * setup.station.detection_prob * h.transpose() * r_inv * h;
      }
    }
    for (const auto& f : jacobians) {
      const Matrix6 d = f - step.f_mean;
      step.f_spread += weight * d.transpose() * q_inv * d;
    }
    bounds.push_back(pcrb_step(bounds.back(), step));
  }
  return bounds;
}

std::vector<Matrix6> mean_squared_error_series(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw Error(ErrorKind::InsufficientData, "no runs to average");
  const auto& grid = runs.front().epochs;
  for (const auto& run : runs) {
    if (run.epochs.size() != grid.size()) throw Error(ErrorKind::Alignment, "runs have different epoch counts");
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (std::abs(run.epochs[k].t - grid[k].t) > 1e-9 * std::max(1.0, std::abs(grid[k].t)))
        throw Error(ErrorKind::Alignment, "runs disagree on epoch times");
  }
  const double weight = 1.0 / static_cast<double>(runs.size());
  std::vector<Matrix6> out(grid.size(), Matrix6::Zero());
  for (const auto& run : runs) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const StateVector e = run.epochs[k].mean - run.epochs[k].truth;
      out[k] += weight * e * e.transpose();
    }
  }
  return out;
}

std::vector<Matrix6> rmse_matrix_series(const std::vector<RunRecord>& runs) {
  if (runs.size() < 2) throw Error(ErrorKind::InsufficientData, "RMSE matrices need at least two runs");
  return mean_squared_error_series(runs);
}

double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
}

double nees(const StateVector& truth, const GaussianBelief& belief) {
  const Eigen::LLT<Matrix6> llt(belief.cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "NEES covariance is not positive definite");
  const StateVector e = truth - belief.mean;
  return e.dot(llt.solve(e));
}

ConsistencyReport consistency_report(const std::vector<RunRecord>& runs, const std::vector<Matrix6>& pcrb) {
  const std::vector<Matrix6> mse = mean_squared_error_series(runs);
  if (mse.size() != pcrb.size()) throw Error(ErrorKind::Alignment, "PCRB and run epoch counts differ");

  ConsistencyReport report;
  for (std::size_t k = 0; k < mse.size(); ++k) {
    const Matrix6 a = mse[k] - pcrb[k];
    const Matrix6 sym = 0.5 * (a + a.transpose());
    const double norm = spectral_norm(sym);
    const double lambda = min_eigenvalue(sym);
    report.times.push_back(runs.front().epochs[k].t);
    report.spectral_norms.push_back(norm);
    report.lambda_mins.push_back(lambda);
    if (lambda < -1e-6 * norm) {
      ++report.negative_epochs;
    } else if (lambda < 0.0) {
      ++report.roundoff_epochs;
    }
  }

  std::size_t outside = 0;
  for (const auto& run : runs) {
    for (const auto& epoch : run.epochs) {
      if (!epoch.updated) continue;
      double beta = std::numeric_limits<double>::infinity();
      try {
        beta = nees(epoch.truth, {epoch.mean, epoch.cov, epoch.t});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numerical) throw;
        ++report.singular_nees;
      }
      report.nees_times.push_back(epoch.t);
      report.nees_values.push_back(beta);
      if (beta < kNeesLow || beta > kNeesHigh) ++outside;
    }
  }
  if (!report.nees_values.empty())
    report.nees_outside_fraction = static_cast<double>(outside) / static_cast<double>(report.nees_values.size());
  return report;
}

ShapeDiagnostics shape_diagnostics(const ConsistencyReport& report, const std::vector<bool>& in_fov) {
  if (in_fov.size() != report.times.size()) throw Error(ErrorKind::Alignment, "FOV flags do not match the report");
  ShapeDiagnostics out;
  std::vector<double> inside;
  std::size_t best_begin = 0, best_len = 0;
  for (std::size_t k = 0; k < in_fov.size();) {
    if (in_fov[k]) {
      inside.push_back(report.spectral_norms[k]);
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end < in_fov.size() && !in_fov[end]) ++end;
    if (end - k > best_len) {
      best_begin = k;
      best_len = end - k;
    }
    k = end;
  }
  if (!inside.empty()) {
    const auto mid = inside.begin() + static_cast<std::ptrdiff_t>(inside.size() / 2);
    std::nth_element(inside.begin(), mid, inside.end());
    out.in_fov_median = *mid;
  }
  if (best_len > 0) {
    out.gap_start = report.times[best_begin];
    out.gap_end = report.times[best_begin + best_len - 1];
    out.gap_max = *std::max_element(report.spectral_norms.begin() + static_cast<std::ptrdiff_t>(best_begin),
                                    report.spectral_norms.begin() + static_cast<std::ptrdiff_t>(best_begin + best_len));
  }
  return out;
}

void write_report_csv(std::ostream& out, const ConsistencyReport& report) {
  const auto old_precision = out.precision(17);
  out << "t,spec_norm,lambda_min\n";
  for (std::size_t k = 0; k < report.times.size(); ++k)
    out << report.times[k] << ',' << report.spectral_norms[k] << ',' << report.lambda_mins[k] << '\n';
  out.precision(old_precision);
}

void write_nees_csv(std::ostream& out, const ConsistencyReport& report) {
  const auto old_precision = out.precision(17);
  out << "t,beta\n";
  for (std::size_t k = 0; k < report.nees_values.size(); ++k)
    out << report.nees_times[k] << ',' << report.nees_values[k] << '\n';
  out.precision(old_precision);
}

}  // namespace orbtrack
