#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "orbtrack/dynamics.hpp"
#include "orbtrack/hybrid_tracker.hpp"
#include "orbtrack/observation.hpp"
#include "orbtrack/random.hpp"
#include "orbtrack/types.hpp"

namespace orbtrack {

inline constexpr double kNeesLow = 1.635;
inline constexpr double kNeesHigh = 12.592;

/// Expectation terms of one PCRB transition k -> k+1.
struct PcrbStep {
  Matrix6 f_mean = Matrix6::Identity();  // E[F]
  Matrix6 f_spread = Matrix6::Zero();    // E[(F - E[F])^T Q^-1 (F - E[F])]
  Matrix6 q = Matrix6::Identity();       // process noise covariance over the step
  Matrix6 info = Matrix6::Zero();        // E[H^T R^-1 H * Pr(detect) * 1{in FOV}] at k+1
};

/// One step of the information recursion
///   J' = Q^-1 + W - Q^-1 E[F] (J + E[F^T Q^-1 F])^-1 E[F]^T Q^-1
/// carried out on the bound B = J^-1 as
///   B_pred = Q + E[F] (B^-1 + S)^-1 E[F]^T,  B' = (B_pred^-1 + W)^-1
/// using (I + B S)^-1 B and (I + B_pred W)^-1 B_pred, which never inverts Q
/// or J directly.
Matrix6 pcrb_step(const Matrix6& bound, const PcrbStep& step);

/// Bounds B_0 = P0, B_1, ... for the given steps.
std::vector<Matrix6> pcrb_recursion(const Matrix6& p0, const std::vector<PcrbStep>& steps);

struct PcrbSetup {
  GaussianBelief initial;
  MotionModel model;  // truth dynamics; its noise must be present and invertible
  StationModel station;
  std::vector<double> times;  // absolute epochs, starting at initial.t
  std::size_t draws = 50;
};

/// Monte Carlo PCRB: expectations over `draws` truth trajectories sampled
/// from the initial belief and propagated with process noise.
std::vector<Matrix6> pcrb_series(const PcrbSetup& setup, RandomStream& rng);

/// Per-epoch average of (x_hat - x)(x_hat - x)^T over at least one run.
/// Throws Error(Alignment) when the runs do not share an epoch grid.
std::vector<Matrix6> mean_squared_error_series(const std::vector<RunRecord>& runs);

/// As mean_squared_error_series, but requires at least two runs.
std::vector<Matrix6> rmse_matrix_series(const std::vector<RunRecord>& runs);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& a);

/// (x - mu)^T P^-1 (x - mu); throws Error(Numerical) for a singular P.
double nees(const StateVector& truth, const GaussianBelief& belief);

struct ConsistencyReport {
  std::vector<double> times;
  std::vector<double> spectral_norms;
  std::vector<double> lambda_mins;
  std::vector<double> nees_times;
  std::vector<double> nees_values;
  double nees_outside_fraction = 0.0;
  std::size_t roundoff_epochs = 0;   // -1e-6 ||A|| <= lambda_min < 0
  std::size_t negative_epochs = 0;   // lambda_min < -1e-6 ||A||
  std::size_t singular_nees = 0;     // updates with a singular covariance, counted as beta = inf
};

/// A_k = MSE_k - PCRB_k with its spectral norm and smallest eigenvalue, plus
/// NEES pooled over every update epoch of every run. A singular posterior
/// covariance yields beta = +inf, which falls outside the band.
ConsistencyReport consistency_report(const std::vector<RunRecord>& runs, const std::vector<Matrix6>& pcrb);

struct ShapeDiagnostics {
  double in_fov_median = 0.0;  // median ||A|| over in-FOV epochs
  double gap_max = 0.0;        // max ||A|| over the longest out-of-FOV stretch
  double gap_start = 0.0;
  double gap_end = 0.0;
};

/// Compares ||A|| inside the FOV against the longest run of epochs outside it.
ShapeDiagnostics shape_diagnostics(const ConsistencyReport& report, const std::vector<bool>& in_fov);

/// Header t,spec_norm,lambda_min.
void write_report_csv(std::ostream& out, const ConsistencyReport& report);
/// Header t,beta.
void write_nees_csv(std::ostream& out, const ConsistencyReport& report);

}  // namespace orbtrack
