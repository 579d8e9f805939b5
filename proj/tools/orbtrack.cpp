#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "orbtrack/errors.hpp"
#include "orbtrack/scenario_runner.hpp"

namespace {

struct CommonOptions {
  std::string scenario = "case1";
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--scenario", opts.scenario, "preset name (case1, case2, prop-high, prop-low) or JSON file");
  cmd->add_option("--seed", opts.seed, "master seed");
  cmd->add_option("--out", opts.out, "output directory");
}

orbtrack::ScenarioConfig resolve(const CommonOptions& opts) {
  orbtrack::ScenarioConfig config = orbtrack::load_scenario(opts.scenario);
  if (opts.seed) config.master_seed = *opts.seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid UKF/PF space object tracking simulator"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::optional<std::size_t> runs, particles;
  std::optional<double> duration;
  auto* run = app.add_subcommand("run", "Monte Carlo batch of hybrid-tracker runs");
  add_common(run, run_opts);
  run->add_option("--runs", runs, "number of runs");
  run->add_option("--particles", particles, "particles used outside the FOV");
  run->add_option("--duration", duration, "simulated time span (s)");

  CommonOptions study_opts;
  std::string kind;
  std::optional<double> log_ratio;
  std::optional<std::size_t> samples;
  auto* study = app.add_subcommand("study", "uncertainty propagation or depletion-bound study");
  add_common(study, study_opts);
  study->add_option("--kind", kind, "propagation or depletion")
      ->required()
      ->check(CLI::IsMember({"propagation", "depletion"}));
  study->add_option("--log-ratio", log_ratio, "depletion threshold as log(peak density / b)");
  study->add_option("--samples", samples, "particles (propagation) or Monte Carlo samples (depletion)");

  CommonOptions pcrb_opts;
  std::optional<std::size_t> draws;
  auto* pcrb = app.add_subcommand("pcrb", "posterior Cramer-Rao bound series");
  add_common(pcrb, pcrb_opts);
  pcrb->add_option("--draws", draws, "truth draws per expectation");

  std::string show_scenario = "case1";
  auto* show = app.add_subcommand("config", "print a scenario as JSON");
  show->add_option("--scenario", show_scenario, "preset name or JSON file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      orbtrack::ScenarioConfig config = resolve(run_opts);
      if (runs) config.runs = *runs;
      if (particles) config.particle_count = *particles;
      if (duration) config.duration = *duration;
      const auto summary = orbtrack::run_batch(config, run_opts.out);
      std::cout << "runs: " << summary.runs << ", failed: " << summary.failed_runs
                << ", NEES outside band: " << summary.report.nees_outside_fraction << '\n';
      for (const auto& f : summary.files) std::cout << "wrote " << f.string() << '\n';
      return summary.exit_status;
    }
    if (*study) {
      orbtrack::ScenarioConfig config = resolve(study_opts);
      const bool propagation = kind == "propagation";
      if (log_ratio) config.depletion_log_ratio = *log_ratio;
      if (samples) (propagation ? config.study_particles : config.depletion_samples) = *samples;
      const auto path = orbtrack::run_study(
          propagation ? orbtrack::StudyKind::UncertaintyPropagation : orbtrack::StudyKind::DepletionBound, config,
          study_opts.out);
      std::cout << "wrote " << path.string() << '\n';
      return 0;
    }
    if (*pcrb) {
      orbtrack::ScenarioConfig config = resolve(pcrb_opts);
      if (draws) config.pcrb_draws = *draws;
      std::cout << "wrote " << orbtrack::run_pcrb(config, pcrb_opts.out).string() << '\n';
      return 0;
    }
    std::cout << orbtrack::serialize_scenario(orbtrack::load_scenario(show_scenario));
    return 0;
  } catch (const orbtrack::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
