#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "orbtrack/consistency_metrics.hpp"
#include "orbtrack/depletion_analysis.hpp"
#include "orbtrack/dynamics.hpp"
#include "orbtrack/hybrid_tracker.hpp"
#include "orbtrack/mixture_clustering.hpp"
#include "orbtrack/observation.hpp"
#include "orbtrack/unscented_filter.hpp"

namespace orbtrack {

/// Everything needed to reproduce a batch or a study. Files are parsed on
/// top of the "case1" preset.
struct ScenarioConfig {
  std::string name = "case1";
  StateVector initial_mean = StateVector::Zero();
  StateVector initial_sigmas = StateVector::Zero();  // km, km/s
  double duration = 18000.0;                         // s
  double epoch_dt = 10.0;                            // s between decision epochs
  double integrator_dt = 10.0;                       // filter RK4 step (s)
  double truth_dt = 1.0;                             // truth RK4 step (s)
  std::size_t particle_count = 2000;
  UtParams ut_params;
  StationModel station;
  DragParams drag;
  PhysicalConstants constants;
  double process_noise_scale = 1e-10;  // Q = scale * I6 per second
  std::uint64_t master_seed = 1;
  std::size_t runs = 1;
  std::size_t pcrb_draws = 50;

  // uncertainty-propagation study
  std::vector<double> study_times{0.0, 1500.0, 3000.0, 4500.0, 6000.0};
  std::size_t study_particles = 5000;
  std::size_t study_k_max = 8;

  // depletion study; b = peak density * exp(-depletion_log_ratio)
  double depletion_log_ratio = 2.0;
  std::size_t depletion_samples = 10000;
  bool strict_radius_form = true;

  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;

  GaussianBelief initial_belief() const;
  MotionModel motion_model() const;
  ScenarioSetup setup() const;
};

ScenarioConfig preset(const std::string& name);
bool is_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parses a JSON config. Missing fields keep their case1 defaults; unknown or
/// mistyped fields raise Error(Parse) naming the field.
ScenarioConfig parse_scenario(const std::string& text);
/// Preset name or path to a JSON file.
ScenarioConfig load_scenario(const std::string& path_or_preset);
std::string serialize_scenario(const ScenarioConfig& config);

struct BatchSummary {
  std::size_t runs = 0;
  std::size_t failed_runs = 0;
  ConsistencyReport report;
  ShapeDiagnostics shape;
  std::vector<std::filesystem::path> files;
  int exit_status = 0;  // nonzero only when every run failed
};

/// Runs config.runs hybrid-tracker runs with seeds split from master_seed,
/// computes the PCRB once and writes run_<i>.csv, report.csv, nees.csv and
/// summary.json into out_dir. Output files are re-read and checked against
/// their column schemas before returning.
BatchSummary run_batch(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Writes the PCRB series (t, diagonal, position trace) to pcrb.csv.
std::filesystem::path run_pcrb(const ScenarioConfig& config, const std::filesystem::path& out_dir);

enum class StudyKind { UncertaintyPropagation, DepletionBound };

/// propagation.csv (time,modes,traces) or depletion.json.
std::filesystem::path run_study(StudyKind kind, const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Depletion configuration derived from a scenario: case state, diagonal P
/// from the initial sigmas, R from the station and b from the log ratio.
DepletionConfig depletion_config(const ScenarioConfig& config);

/// Checks a CSV file's header against `columns` and that every row has that
/// many fields, each numeric except those listed in `text_columns`.
void validate_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
                  const std::vector<std::string>& text_columns = {});

}  // namespace orbtrack
