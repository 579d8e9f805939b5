#pragma once

#include <iosfwd>
#include <vector>

#include "orbtrack/dynamics.hpp"
#include "orbtrack/observation.hpp"
#include "orbtrack/random.hpp"
#include "orbtrack/types.hpp"

namespace orbtrack {

/// N weighted state samples at time t. Weights are normalized.
struct ParticleEnsemble {
  std::vector<StateVector> states;
  std::vector<double> weights;
  double t = 0.0;

  std::size_t size() const { return states.size(); }
  void validate() const;
};

ParticleEnsemble sample_from_gaussian(const GaussianBelief& belief, std::size_t n, RandomStream& rng);

/// Moves every particle to t1 (with process noise when the model has it);
/// weights are copied through untouched.
ParticleEnsemble propagate_ensemble(const ParticleEnsemble& ensemble, double t1, const MotionModel& model,
                                    RandomStream& rng);

/// Multiplies weights by the measurement likelihood and renormalizes in log
/// space. Throws Error(TotalDepletion) when every particle's likelihood
/// underflows double precision.
ParticleEnsemble reweight(const ParticleEnsemble& ensemble, const Measurement& z, const StationModel& station);

/// Weighted mean and reliability-weighted covariance
/// sum w_i (x_i - mu)(x_i - mu)^T / (1 - sum w_i^2).
GaussianBelief weighted_moments(const ParticleEnsemble& ensemble);

/// Low-variance resampling with a single uniform offset; output weights are 1/N.
ParticleEnsemble systematic_resample(const ParticleEnsemble& ensemble, RandomStream& rng);

/// 1 / sum w_i^2.
double effective_sample_size(const ParticleEnsemble& ensemble);

/// One CSV row per particle: t, x1..v3, weight.
void write_ensemble_csv(std::ostream& out, const ParticleEnsemble& ensemble);

}  // namespace orbtrack
