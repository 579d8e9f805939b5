#include "orbtrack/linalg.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "orbtrack/errors.hpp"

namespace orbtrack {

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::remainder(angle, two_pi);
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  return wrapped;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double max_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

namespace {

std::optional<Eigen::MatrixXd> try_ldlt_sqrt(const Eigen::MatrixXd& p) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(p);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(d.cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d(i))) return std::nullopt;
    if (d(i) < 0.0) {
      if (-d(i) > 1e-12 * scale) return std::nullopt;
      d(i) = 0.0;
    }
  }
  const Eigen::MatrixXd l = ldlt.matrixL();
  Eigen::MatrixXd s = l * d.cwiseSqrt().asDiagonal();
  // P = T^T L D L^T T with T the pivot permutation.
  return ldlt.transpositionsP().transpose() * s;
}

}  // namespace

Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd sym = symmetrize(p);
  if (!sym.allFinite()) throw Error(ErrorKind::Numerical, "covariance has non-finite entries");
  if (auto s = try_ldlt_sqrt(sym)) return *s;
  for (double eps = 1e-12; eps <= 1e-8 * (1.0 + 1e-9); eps *= 10.0) {
    Eigen::MatrixXd jittered = sym;
    for (Eigen::Index i = 0; i < sym.rows(); ++i) {
      const double d = std::abs(sym(i, i));
      jittered(i, i) += eps * (d > 0.0 ? d : 1.0);
    }
    if (auto s = try_ldlt_sqrt(jittered)) return *s;
  }
  throw Error(ErrorKind::Numerical, "covariance is not positive semi-definite after maximum jitter");
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& p) {
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrize(p));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "matrix is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p.rows(), p.cols()));
  return symmetrize(inv);
}

}  // namespace orbtrack
