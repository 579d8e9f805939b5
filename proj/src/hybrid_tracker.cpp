#include "orbtrack/hybrid_tracker.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "orbtrack/errors.hpp"

namespace orbtrack {

double TrackerState::t() const {
  return mode() == TrackerMode::Gaussian ? belief().t : ensemble().t;
}

StateVector TrackerState::estimate_mean() const {
  if (mode() == TrackerMode::Gaussian) return belief().mean;
  const ParticleEnsemble& ens = ensemble();
  StateVector mean = StateVector::Zero();
  for (std::size_t i = 0; i < ens.size(); ++i) mean += ens.weights[i] * ens.states[i];
  return mean;
}

GaussianBelief TrackerState::summary() const {
  if (mode() == TrackerMode::Gaussian) return belief();
  return weighted_moments(ensemble());
}

bool fov_gate(const TrackerState& tracker, double t, const StationModel& station) {
  return in_fov(tracker.estimate_mean(), t, station);
}

namespace {

void particle_update(StepResult& result, const ParticleEnsemble& prior, const Measurement& z,
                     const TrackerConfig& config, RandomStream& rng) {
  const ParticleEnsemble weighted = reweight(prior, z, config.station);
  result.ess = effective_sample_size(weighted);
  const GaussianBelief matched = weighted_moments(weighted);
  result.resampled = systematic_resample(weighted, rng);
  result.state = TrackerState(matched);
  result.moment_matched = true;
  result.measurement_used = true;
}

StepResult step_impl(const TrackerState& tracker, double t_next, const std::optional<Measurement>& z,
                     const TrackerConfig& config, RandomStream& rng) {
  if (tracker.mode() == TrackerMode::Gaussian) {
    const GaussianBelief& belief = tracker.belief();
    if (config.policy == FilterPolicy::UkfOnly || fov_gate(tracker, tracker.t(), config.station)) {
      GaussianBelief next = ukf_predict(belief, t_next, config.model, config.ut);
      StepResult result{TrackerState(next)};
      if (z) {
        result.state = TrackerState(ukf_update(next, *z, config.station, config.ut));
        result.measurement_used = true;
      }
      return result;
    }
    ParticleEnsemble ens = sample_from_gaussian(belief, config.particle_count, rng);
    ens = propagate_ensemble(ens, t_next, config.model, rng);
    StepResult result{TrackerState(ens)};
    result.sampled = true;
    if (z) {
      result.boundary_event = true;
      particle_update(result, ens, *z, config, rng);
    }
    return result;
  }

  ParticleEnsemble ens = propagate_ensemble(tracker.ensemble(), t_next, config.model, rng);
  StepResult result{TrackerState(ens)};
  if (z) particle_update(result, ens, *z, config, rng);
  return result;
}

}  // namespace

StepResult step(const TrackerState& tracker, double t_next, const std::optional<Measurement>& z,
                const TrackerConfig& config, RandomStream& rng) {
  if (!(t_next > tracker.t())) throw Error(ErrorKind::Configuration, "step target must be after tracker time");
  if (z && std::abs(z->t - t_next) > 1e-9 * std::max(1.0, std::abs(t_next)))
    throw Error(ErrorKind::Configuration, "measurement is not tagged at the step target");
  try {
    return step_impl(tracker, t_next, z, config, rng);
  } catch (const Error& e) {
    std::ostringstream msg;
    msg << "epoch t=" << t_next << ": " << e.message();
    throw Error(e.kind(), msg.str());
  }
}

std::vector<double> epoch_grid(double duration, double epoch_dt) {
  if (!(epoch_dt > 0.0)) throw Error(ErrorKind::Configuration, "epoch_dt must be positive");
  if (!(duration >= 0.0)) throw Error(ErrorKind::Configuration, "duration must be non-negative");
  std::vector<double> grid{0.0};
  const auto count = static_cast<long long>(std::floor(duration / epoch_dt + 1e-9));
  for (long long k = 1; k <= count; ++k) grid.push_back(static_cast<double>(k) * epoch_dt);
  if (duration - grid.back() > 1e-9 * epoch_dt) grid.push_back(duration);
  return grid;
}

RunRecord run_scenario(const GaussianBelief& initial, const StateVector& truth0, double duration,
                       const ScenarioSetup& setup, std::uint64_t seed) {
  RandomStream truth_rng(derive_seed(seed, 0));
  RandomStream sensor_rng(derive_seed(seed, 1));
  RandomStream filter_rng(derive_seed(seed, 2));
  const StationModel& station = setup.tracker.station;

  RunRecord record;
  const std::vector<double> grid = epoch_grid(duration, setup.epoch_dt);

  EpochRecord first;
  first.t = initial.t;
  first.truth = truth0;
  first.mean = initial.mean;
  first.cov = initial.cov;
  first.truth_in_fov = in_fov(truth0, initial.t, station);
  record.epochs.push_back(first);

  TrackerState tracker(initial);
  StateVector truth = truth0;
  double min_ess = std::numeric_limits<double>::infinity();

  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double t_prev = initial.t + grid[k - 1];
    const double t = initial.t + grid[k];
    EpochRecord epoch;
    epoch.t = t;
    try {
      truth = setup.truth_model.propagate_noisy(truth, t_prev, t, truth_rng);
      epoch.truth = truth;
      epoch.truth_in_fov = in_fov(truth, t, station);
      const std::optional<Measurement> z = try_measure(truth, t, station, sensor_rng);
      if (z) record.measurements.push_back(*z);
      epoch.measured = z.has_value();

      const TrackerMode before = tracker.mode();
      StepResult result = step(tracker, t, z, setup.tracker, filter_rng);
      tracker = std::move(result.state);

      epoch.mode = tracker.mode();
      epoch.updated = result.measurement_used;
      epoch.boundary_event = result.boundary_event;
      if (result.boundary_event) ++record.boundary_events;
      if (result.moment_matched) min_ess = std::min(min_ess, result.ess);
      if (before != epoch.mode) {
        record.transitions.push_back(
            {t, epoch.mode == TrackerMode::Ensemble ? ModeChange::UkfToPf : ModeChange::PfToUkf});
      }
      const GaussianBelief summary = tracker.summary();
      epoch.mean = summary.mean;
      epoch.cov = summary.cov;
    } catch (const Error& e) {
      record.failed = true;
      record.failure = e.what();
      break;
    }
    record.epochs.push_back(epoch);
  }
  record.min_update_ess = std::isfinite(min_ess) ? min_ess : 0.0;
  return record;
}

}  // namespace orbtrack
