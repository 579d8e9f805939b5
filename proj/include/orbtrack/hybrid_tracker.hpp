#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "orbtrack/dynamics.hpp"
#include "orbtrack/observation.hpp"
#include "orbtrack/particle_filter.hpp"
#include "orbtrack/unscented_filter.hpp"

namespace orbtrack {

enum class TrackerMode { Gaussian, Ensemble };

enum class FilterPolicy {
  Hybrid,   // UKF inside the FOV, particle ensemble outside
  UkfOnly,  // reference filter: never leaves the Gaussian representation
};

/// Exactly one pdf representation is active: a Gaussian belief (UKF) or a
/// weighted ensemble (PF). The tracker time is the representation's time.
class TrackerState {
 public:
  explicit TrackerState(GaussianBelief belief) : repr_(std::move(belief)) {}
  explicit TrackerState(ParticleEnsemble ensemble) : repr_(std::move(ensemble)) {}

  TrackerMode mode() const {
    return std::holds_alternative<GaussianBelief>(repr_) ? TrackerMode::Gaussian : TrackerMode::Ensemble;
  }
  double t() const;
  const GaussianBelief& belief() const { return std::get<GaussianBelief>(repr_); }
  const ParticleEnsemble& ensemble() const { return std::get<ParticleEnsemble>(repr_); }

  /// Gaussian mean, or the weighted mean of the ensemble.
  StateVector estimate_mean() const;
  /// Gaussian belief, or the weighted moments of the ensemble.
  GaussianBelief summary() const;

 private:
  std::variant<GaussianBelief, ParticleEnsemble> repr_;
};

struct TrackerConfig {
  MotionModel model;
  StationModel station;
  UtParams ut;
  std::size_t particle_count = 2000;
  FilterPolicy policy = FilterPolicy::Hybrid;
};

struct StepResult {
  explicit StepResult(TrackerState s) : state(std::move(s)) {}

  TrackerState state;
  bool sampled = false;          // UKF -> PF this step
  bool moment_matched = false;   // PF -> UKF this step
  bool measurement_used = false;
  bool boundary_event = false;   // measurement arrived while the estimate was outside the FOV
  double ess = 0.0;              // ESS of the reweighted ensemble when a PF update ran
  std::optional<ParticleEnsemble> resampled;
};

/// FOV test at the tracker's current estimate.
bool fov_gate(const TrackerState& tracker, double t, const StationModel& station);

/// Advances one decision epoch.
///
/// Gaussian mode with the estimate inside the FOV: UKF predict, then update
/// when a measurement is present. Gaussian mode outside the FOV: sample the
/// current belief into particles and propagate them (UKF -> PF). Ensemble
/// mode: propagate with constant weights; when a measurement is present the
/// ensemble is reweighted and resampled and the Gaussian belief is rebuilt from
/// the moments of the reweighted (pre-resample) ensemble (PF -> UKF).
/// A measurement that arrives on the same step as a UKF -> PF transition is
/// handled by the PF branch and reported as a boundary event.
StepResult step(const TrackerState& tracker, double t_next, const std::optional<Measurement>& z,
                const TrackerConfig& config, RandomStream& rng);

enum class ModeChange { UkfToPf, PfToUkf };

struct ModeTransitionEvent {
  double t = 0.0;
  ModeChange kind = ModeChange::UkfToPf;
};

struct EpochRecord {
  double t = 0.0;
  StateVector truth = StateVector::Zero();
  StateVector mean = StateVector::Zero();
  Matrix6 cov = Matrix6::Zero();
  TrackerMode mode = TrackerMode::Gaussian;
  bool truth_in_fov = false;
  bool measured = false;   // the sensor produced a measurement this epoch
  bool updated = false;    // the estimate incorporated it
  bool boundary_event = false;
};

struct RunRecord {
  std::vector<EpochRecord> epochs;
  std::vector<Measurement> measurements;
  std::vector<ModeTransitionEvent> transitions;
  std::size_t boundary_events = 0;
  double min_update_ess = 0.0;  // smallest ESS seen at a PF update (0 when none ran)
  bool failed = false;
  std::string failure;
};

struct ScenarioSetup {
  TrackerConfig tracker;
  MotionModel truth_model;  // truth dynamics (finer step, process noise)
  double epoch_dt = 10.0;
};

/// Co-simulates truth, sensor and tracker on the epoch grid t_k = k * epoch_dt
/// (plus a closing partial epoch at `duration`). Truth, sensor and filter draw
/// from independent streams derived from `seed`. Tracker failures mark the run
/// failed and end it early instead of throwing.
RunRecord run_scenario(const GaussianBelief& initial, const StateVector& truth0, double duration,
                       const ScenarioSetup& setup, std::uint64_t seed);

/// Epoch times used by run_scenario.
std::vector<double> epoch_grid(double duration, double epoch_dt);

}  // namespace orbtrack
