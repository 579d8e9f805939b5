#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "orbtrack/dynamics.hpp"
#include "orbtrack/random.hpp"
#include "orbtrack/types.hpp"

namespace orbtrack {

struct GmmModel {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;

  std::size_t k() const { return weights.size(); }
  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  void validate() const;
};

struct FitOptions {
  std::size_t k_max = 8;
  double tolerance = 1e-5;         // relative MML change that ends an EM run
  std::size_t max_iterations = 500;
  double cov_floor = 1e-10;        // added to every covariance diagonal
};

/// One EM sweep over all components.
struct MmlIteration {
  double mml = 0.0;
  std::size_t components = 0;
  bool annihilated = false;  // a component died during this sweep
};

struct FitResult {
  GmmModel model;
  double mml = 0.0;
  std::vector<MmlIteration> trace;
};

/// Mixture fit by component-wise EM under the minimum-message-length
/// criterion. Starts from k_max components, drops any
/// whose responsibility mass cannot pay for its parameters, and after each
/// converged run forcibly removes the weakest component, keeping the model
/// with the smallest message length. `samples` holds one sample per row.
FitResult fit_gmm_detailed(const Eigen::MatrixXd& samples, const FitOptions& options, RandomStream& rng);

GmmModel fit_gmm(const Eigen::MatrixXd& samples, std::size_t k_max, RandomStream& rng);

/// Sum over rows of log p(y).
double gmm_log_likelihood(const GmmModel& model, const Eigen::MatrixXd& samples);

Eigen::MatrixXd sample_gmm(const GmmModel& model, std::size_t n, RandomStream& rng);

/// Trace of each component's position block (the leading 3x3 block, or the
/// whole covariance for 3-D fits).
std::vector<double> position_trace_report(const GmmModel& model);

struct ClusterStudyOptions {
  ForceModel forces;
  double dt = 10.0;
  FitOptions fit;
  bool full_state = false;  // cluster the 6-D state instead of the position marginal
};

struct ClusterSnapshot {
  double t = 0.0;
  GmmModel model;
  std::size_t particles = 0;  // particles clustered
  std::size_t impacted = 0;   // particles lost below the Earth's surface so far
};

/// Samples n particles from `initial`, propagates them noise-free through the
/// requested (ascending) times and fits a mixture at each one. Particles that
/// descend below r_eq are dropped and counted.
std::vector<ClusterSnapshot> propagate_and_cluster_study(const GaussianBelief& initial,
                                                         const std::vector<double>& times, std::size_t n,
                                                         const ClusterStudyOptions& options, RandomStream& rng);

/// Rows: time,modes,traces (traces space separated, km^2).
void write_cluster_table(std::ostream& out, const std::vector<ClusterSnapshot>& snapshots);

}  // namespace orbtrack
