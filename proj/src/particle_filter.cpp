#include "orbtrack/particle_filter.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "orbtrack/errors.hpp"
#include "orbtrack/linalg.hpp"

namespace orbtrack {

namespace {

// log of the smallest positive (subnormal) double; a likelihood below this is zero.
const double kLogUnderflow = std::log(std::numeric_limits<double>::denorm_min());

}  // namespace

void ParticleEnsemble::validate() const {
  if (states.size() < 2) throw Error(ErrorKind::Configuration, "ensemble needs at least two particles");
  if (weights.size() != states.size()) throw Error(ErrorKind::Configuration, "ensemble weight count mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::Configuration, "ensemble weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::Configuration, "ensemble weights must sum to one");
}

ParticleEnsemble sample_from_gaussian(const GaussianBelief& belief, std::size_t n, RandomStream& rng) {
  if (n < 2) throw Error(ErrorKind::Configuration, "particle count must be at least two");
  const Matrix6 root = covariance_sqrt(belief.cov);
  ParticleEnsemble ens;
  ens.t = belief.t;
  ens.states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ens.states.push_back(belief.mean + root * rng.standard_normal_state());
  ens.weights.assign(n, 1.0 / static_cast<double>(n));
  return ens;
}

ParticleEnsemble propagate_ensemble(const ParticleEnsemble& ensemble, double t1, const MotionModel& model,
                                    RandomStream& rng) {
  if (!(t1 >= ensemble.t)) throw Error(ErrorKind::Configuration, "ensemble propagation end precedes start");
  if (t1 == ensemble.t) return ensemble;
  ParticleEnsemble out;
  out.t = t1;
  out.weights = ensemble.weights;
  out.states.reserve(ensemble.size());
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    try {
      out.states.push_back(model.propagate_noisy(ensemble.states[i], ensemble.t, t1, rng));
    } catch (const Error& e) {
      throw Error(ErrorKind::Propagation, "particle " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

ParticleEnsemble reweight(const ParticleEnsemble& ensemble, const Measurement& z, const StationModel& station) {
  if (std::abs(z.t - ensemble.t) > 1e-9 * std::max(1.0, std::abs(z.t)))
    throw Error(ErrorKind::Configuration, "measurement time does not match ensemble time");

  const std::size_t n = ensemble.size();
  std::vector<double> log_w(n);
  double best_likelihood = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double log_lik = measurement_log_likelihood(z, ensemble.states[i], ensemble.t, station);
    best_likelihood = std::max(best_likelihood, log_lik);
    log_w[i] = ensemble.weights[i] > 0.0 ? std::log(ensemble.weights[i]) + log_lik
                                         : -std::numeric_limits<double>::infinity();
  }
  if (!(best_likelihood >= kLogUnderflow))
    throw Error(ErrorKind::TotalDepletion, "all particle likelihoods underflow");

  const double max_log = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(max_log)) throw Error(ErrorKind::TotalDepletion, "no particle retains weight");

  ParticleEnsemble out;
  out.t = ensemble.t;
  out.states = ensemble.states;
  out.weights.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.weights[i] = std::exp(log_w[i] - max_log);
    sum += out.weights[i];
  }
  for (double& w : out.weights) w /= sum;
  return out;
}

double effective_sample_size(const ParticleEnsemble& ensemble) {
  double sum_sq = 0.0;
  for (double w : ensemble.weights) sum_sq += w * w;
  return 1.0 / sum_sq;
}

GaussianBelief weighted_moments(const ParticleEnsemble& ensemble) {
  ensemble.validate();
  double sum_sq = 0.0;
  for (double w : ensemble.weights) sum_sq += w * w;
  if (1.0 - sum_sq < 1e-9) throw Error(ErrorKind::DegenerateEnsemble, "effective sample size is one");

  GaussianBelief out;
  out.t = ensemble.t;
  out.mean.setZero();
  for (std::size_t i = 0; i < ensemble.size(); ++i) out.mean += ensemble.weights[i] * ensemble.states[i];

  Matrix6 scatter = Matrix6::Zero();
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const StateVector d = ensemble.states[i] - out.mean;
    scatter += ensemble.weights[i] * d * d.transpose();
  }
  if (scatter.isZero(0.0)) throw Error(ErrorKind::DegenerateEnsemble, "all weighted particles coincide");
  out.cov = symmetrize(scatter / (1.0 - sum_sq));
  return out;
}

ParticleEnsemble systematic_resample(const ParticleEnsemble& ensemble, RandomStream& rng) {
  ensemble.validate();
  const std::size_t n = ensemble.size();
  std::vector<double> cumulative(n);
  std::partial_sum(ensemble.weights.begin(), ensemble.weights.end(), cumulative.begin());
  const double total = cumulative.back();
  for (double& c : cumulative) c /= total;

  ParticleEnsemble out;
  out.t = ensemble.t;
  out.states.reserve(n);
  const double step = 1.0 / static_cast<double>(n);
  const double offset = rng.uniform() * step;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = offset + static_cast<double>(i) * step;
    while (j + 1 < n && u >= cumulative[j]) ++j;
    out.states.push_back(ensemble.states[j]);
  }
  out.weights.assign(n, step);
  return out;
}

void write_ensemble_csv(std::ostream& out, const ParticleEnsemble& ensemble) {
  const auto old_precision = out.precision(17);
  out << "t,x1,x2,x3,v1,v2,v3,weight\n";
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    out << ensemble.t;
    for (int k = 0; k < 6; ++k) out << ',' << ensemble.states[i](k);
    out << ',' << ensemble.weights[i] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace orbtrack
