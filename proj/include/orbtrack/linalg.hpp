#pragma once

#include <Eigen/Dense>

namespace orbtrack {

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol);

double min_eigenvalue(const Eigen::MatrixXd& symmetric);
double max_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Returns S with S*S^T == P for a symmetric PSD matrix P.
///
/// A pivoted LDL^T factorization is tried first; round-off negatives in D are
/// clamped to zero. If the matrix is indefinite beyond round-off, relative
/// diagonal jitter P_ii *= (1 + eps) is applied with eps escalating from
/// 1e-12 to 1e-8 (zero diagonals get eps itself). Throws
/// Error(Numerical) if no level succeeds.
Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& p);

/// Inverse of a symmetric positive definite matrix; throws Error(Numerical)
/// when the matrix is not positive definite.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& p);

}  // namespace orbtrack
