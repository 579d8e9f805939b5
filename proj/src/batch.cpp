#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "orbtrack/errors.hpp"
#include "orbtrack/linalg.hpp"
#include "orbtrack/scenario_runner.hpp"

namespace orbtrack {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Configuration, "cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out = open_output(path);
  out << doc.dump(2) << '\n';
}

std::vector<std::string> run_columns() {
  std::vector<std::string> cols{"t"};
  for (const char* prefix : {"truth_", "est_", "var_"})
    for (const char* axis : {"x1", "x2", "x3", "v1", "v2", "v3"}) cols.push_back(std::string(prefix) + axis);
  cols.push_back("mode");
  cols.push_back("measured");
  return cols;
}

void write_run_csv(const fs::path& path, const RunRecord& run) {
  std::ofstream out = open_output(path);
  out.precision(17);
  const auto cols = run_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& e : run.epochs) {
    out << e.t;
    for (int i = 0; i < 6; ++i) out << ',' << e.truth(i);
    for (int i = 0; i < 6; ++i) out << ',' << e.mean(i);
    for (int i = 0; i < 6; ++i) out << ',' << e.cov(i, i);
    out << ',' << (e.mode == TrackerMode::Gaussian ? "UKF" : "PF") << ',' << (e.measured ? 1 : 0) << '\n';
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// FOV membership of the noise-free mean trajectory on the epoch grid.
std::vector<bool> nominal_fov(const ScenarioConfig& config, const std::vector<double>& grid) {
  const MotionModel model = config.motion_model();
  std::vector<bool> flags;
  StateVector x = config.initial_mean;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) x = model.propagate(x, grid[k - 1], grid[k]);
    flags.push_back(in_fov(x, grid[k], config.station));
  }
  return flags;
}

}  // namespace

void validate_csv(const fs::path& path, const std::vector<std::string>& columns,
                  const std::vector<std::string>& text_columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || split(line, ',') != columns)
    throw Error(ErrorKind::Parse, path.filename().string() + ": unexpected header");
  std::vector<bool> numeric;
  for (const auto& c : columns)
    numeric.push_back(std::find(text_columns.begin(), text_columns.end(), c) == text_columns.end());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto fields = split(line, ',');
    if (fields.size() != columns.size())
      throw Error(ErrorKind::Parse, path.filename().string() + ": row " + std::to_string(row) + " has " +
                                        std::to_string(fields.size()) + " fields");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!numeric[i]) continue;
      std::size_t used = 0;
      try {
        (void)std::stod(fields[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != fields[i].size())
        throw Error(ErrorKind::Parse, path.filename().string() + ": row " + std::to_string(row) + " column '" +
                                          columns[i] + "' is not numeric");
    }
  }
}

BatchSummary run_batch(const ScenarioConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  const GaussianBelief initial = config.initial_belief();
  const ScenarioSetup setup = config.setup();
  const Matrix6 root = covariance_sqrt(initial.cov);

  BatchSummary summary;
  summary.runs = config.runs;
  std::vector<RunRecord> completed;
  json run_info = json::array();
  for (std::size_t i = 0; i < config.runs; ++i) {
    const std::uint64_t seed = derive_seed(config.master_seed, i + 1);
    RandomStream init_rng(derive_seed(seed, 3));
    const StateVector truth0 = initial.mean + root * init_rng.standard_normal_state();
    RunRecord run = run_scenario(initial, truth0, config.duration, setup, seed);

    const fs::path path = out_dir / ("run_" + std::to_string(i) + ".csv");
    write_run_csv(path, run);
    summary.files.push_back(path);

    std::size_t updates = 0;
    for (const auto& e : run.epochs) updates += e.updated ? 1 : 0;
    run_info.push_back({{"index", i},
                        {"seed", seed},
                        {"failed", run.failed},
                        {"failure", run.failure},
                        {"epochs", run.epochs.size()},
                        {"updates", updates},
                        {"transitions", run.transitions.size()},
                        {"boundary_events", run.boundary_events},
                        {"min_update_ess", run.min_update_ess}});
    if (run.failed) {
      ++summary.failed_runs;
    } else {
      completed.push_back(std::move(run));
    }
  }

  const std::vector<double> grid = epoch_grid(config.duration, config.epoch_dt);
  json consistency = json::object();
  if (!completed.empty()) {
    PcrbSetup pcrb_setup;
    pcrb_setup.initial = initial;
    pcrb_setup.model = config.motion_model();
    pcrb_setup.station = config.station;
    pcrb_setup.times = grid;
    pcrb_setup.draws = config.pcrb_draws;
    RandomStream pcrb_rng(derive_seed(config.master_seed, 0));
    const std::vector<Matrix6> pcrb = pcrb_series(pcrb_setup, pcrb_rng);

    summary.report = consistency_report(completed, pcrb);
    summary.shape = shape_diagnostics(summary.report, nominal_fov(config, grid));
    const auto& rep = summary.report;
    consistency = {
        {"nees_count", rep.nees_values.size()},
        {"nees_outside_fraction", rep.nees_outside_fraction},
        {"nees_band", {kNeesLow, kNeesHigh}},
        {"max_spectral_norm", *std::max_element(rep.spectral_norms.begin(), rep.spectral_norms.end())},
        {"min_lambda_min", *std::min_element(rep.lambda_mins.begin(), rep.lambda_mins.end())},
        {"roundoff_epochs", rep.roundoff_epochs},
        {"negative_epochs", rep.negative_epochs},
        {"singular_nees", rep.singular_nees},
        {"in_fov_median_spectral_norm", summary.shape.in_fov_median},
        {"gap_max_spectral_norm", summary.shape.gap_max},
        {"gap_start", summary.shape.gap_start},
        {"gap_end", summary.shape.gap_end},
        {"runs_in_report", completed.size()}};
  }

  const fs::path report_path = out_dir / "report.csv";
  const fs::path nees_path = out_dir / "nees.csv";
  {
    std::ofstream out = open_output(report_path);
    write_report_csv(out, summary.report);
  }
  {
    std::ofstream out = open_output(nees_path);
    write_nees_csv(out, summary.report);
  }
  summary.files.push_back(report_path);
  summary.files.push_back(nees_path);

  summary.exit_status = completed.empty() ? 1 : 0;
  json doc;
  doc["scenario"] = config.name;
  doc["master_seed"] = config.master_seed;
  doc["runs"] = config.runs;
  doc["failed_runs"] = summary.failed_runs;
  doc["exit_status"] = summary.exit_status;
  doc["consistency"] = consistency;
  doc["run_details"] = run_info;
  doc["config"] = json::parse(serialize_scenario(config));
  const fs::path summary_path = out_dir / "summary.json";
  write_json(summary_path, doc);
  summary.files.push_back(summary_path);

  for (std::size_t i = 0; i < config.runs; ++i)
    validate_csv(out_dir / ("run_" + std::to_string(i) + ".csv"), run_columns(), {"mode"});
  validate_csv(report_path, {"t", "spec_norm", "lambda_min"});
  validate_csv(nees_path, {"t", "beta"});
  return summary;
}

fs::path run_pcrb(const ScenarioConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  PcrbSetup setup;
  setup.initial = config.initial_belief();
  setup.model = config.motion_model();
  setup.station = config.station;
  setup.times = epoch_grid(config.duration, config.epoch_dt);
  setup.draws = config.pcrb_draws;
  RandomStream rng(derive_seed(config.master_seed, 0));
  const std::vector<Matrix6> bounds = pcrb_series(setup, rng);

  const fs::path path = out_dir / "pcrb.csv";
  std::ofstream out = open_output(path);
  out.precision(17);
  out << "t,b_x1,b_x2,b_x3,b_v1,b_v2,b_v3,position_trace\n";
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    out << setup.times[k];
    for (int i = 0; i < 6; ++i) out << ',' << bounds[k](i, i);
    out << ',' << bounds[k].topLeftCorner<3, 3>().trace() << '\n';
  }
  out.close();
  validate_csv(path, {"t", "b_x1", "b_x2", "b_x3", "b_v1", "b_v2", "b_v3", "position_trace"});
  return path;
}

DepletionConfig depletion_config(const ScenarioConfig& config) {
  DepletionConfig d;
  d.s0 = config.initial_mean;
  d.p = config.initial_belief().cov;
  d.r = config.station.noise_cov;
  const double log_peak = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(d.r.determinant());
  d.b = std::exp(log_peak - config.depletion_log_ratio);
  d.strict_radius_form = config.strict_radius_form;
  d.constants = config.constants;
  d.station = config.station;
  d.dt = config.integrator_dt;
  return d;
}

fs::path run_study(StudyKind kind, const ScenarioConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  RandomStream rng(derive_seed(config.master_seed, 0));

  if (kind == StudyKind::UncertaintyPropagation) {
    ClusterStudyOptions options;
    options.forces = {config.constants, config.drag};
    options.dt = config.integrator_dt;
    options.fit.k_max = config.study_k_max;
    const auto snapshots =
        propagate_and_cluster_study(config.initial_belief(), config.study_times, config.study_particles, options, rng);
    const fs::path path = out_dir / "propagation.csv";
    {
      std::ofstream out = open_output(path);
      write_cluster_table(out, snapshots);
    }
    validate_csv(path, {"time", "modes", "traces"}, {"traces"});
    return path;
  }

  const DepletionConfig dc = depletion_config(config);
  const DepletionResult bound = depletion_lower_bound(dc);
  const RetentionEstimate mc = monte_carlo_retention(dc, config.depletion_samples, rng);
  json doc;
  doc["m"] = bound.m_radius;
  doc["n"] = bound.n_radius;
  doc["lower_bound"] = bound.lower_bound;
  doc["empty_threshold"] = bound.empty_threshold;
  doc["empirical_retention"] = mc.retention;
  doc["binomial_sigma"] = mc.binomial_sigma;
  doc["samples"] = mc.accepted;
  doc["propagation_failures"] = mc.failures;
  doc["period"] = bound.period;
  doc["b"] = dc.b;
  doc["composite_cov"] = {{bound.composite_cov(0, 0), bound.composite_cov(0, 1)},
                          {bound.composite_cov(1, 0), bound.composite_cov(1, 1)}};
  doc["config"] = json::parse(serialize_scenario(config));
  const fs::path path = out_dir / "depletion.json";
  write_json(path, doc);
  return path;
}

}  // namespace orbtrack
