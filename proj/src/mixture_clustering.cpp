#include "orbtrack/mixture_clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>

#include "orbtrack/errors.hpp"
#include "orbtrack/linalg.hpp"

namespace orbtrack {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::VectorXd log_gaussian_density(const Eigen::MatrixXd& samples, const Eigen::VectorXd& mean,
                                     const Eigen::MatrixXd& cov) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "mixture component covariance is not positive definite");
  const Eigen::MatrixXd diff = (samples.rowwise() - mean.transpose()).transpose();
  const Eigen::MatrixXd white = llt.matrixL().solve(diff);
  const Eigen::VectorXd quad = white.colwise().squaredNorm().transpose();
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double d = static_cast<double>(samples.cols());
  return (-0.5 * quad.array() - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det)).matrix();
}

double log_sum_exp(const double* values, std::size_t count) {
  double peak = kNegInf;
  for (std::size_t i = 0; i < count; ++i) peak = std::max(peak, values[i]);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += std::exp(values[i] - peak);
  return peak + std::log(sum);
}

// Partial Fisher-Yates: k distinct indices out of n.
std::vector<Eigen::Index> distinct_indices(Eigen::Index n, std::size_t k, RandomStream& rng) {
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto remaining = static_cast<std::uint64_t>(pool.size() - i);
    const std::size_t j = i + static_cast<std::size_t>(rng.bits() % remaining);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

class ComponentwiseEm {
 public:
  ComponentwiseEm(const Eigen::MatrixXd& samples, const FitOptions& options, RandomStream& rng)
      : y_(samples), options_(options) {
    n_ = static_cast<std::size_t>(samples.rows());
    const auto d = static_cast<double>(samples.cols());
    params_per_component_ = d + d * (d + 1.0) / 2.0;
    k_ = options.k_max;

    const Eigen::VectorXd centre = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centred = samples.rowwise() - centre.transpose();
    const Eigen::MatrixXd sample_cov = centred.transpose() * centred / static_cast<double>(n_);
    const Eigen::MatrixXd init_cov = sample_cov / std::pow(static_cast<double>(k_), 2.0 / d) + floor();

    const auto seeds = distinct_indices(samples.rows(), k_, rng);
    alpha_.assign(k_, 1.0 / static_cast<double>(k_));
    alive_.assign(k_, true);
    means_.resize(k_);
    covs_.assign(k_, init_cov);
    log_u_.resize(samples.rows(), static_cast<Eigen::Index>(k_));
    for (std::size_t m = 0; m < k_; ++m) {
      means_[m] = samples.row(seeds[m]).transpose();
      log_u_.col(static_cast<Eigen::Index>(m)) = log_gaussian_density(y_, means_[m], covs_[m]);
    }
    refresh_totals();
  }

  FitResult run() {
    FitResult result;
    double best = std::numeric_limits<double>::infinity();
    while (true) {
      double previous = std::numeric_limits<double>::infinity();
      double current = previous;
      for (std::size_t iter = 0; iter < options_.max_iterations; ++iter) {
        const bool died = sweep();
        current = message_length();
        result.trace.push_back({current, alive_count(), died});
        if (previous - current < options_.tolerance * std::abs(previous)) break;
        previous = current;
      }
      if (current <= best) {
        best = current;
        result.model = snapshot();
        result.mml = current;
      }
      if (alive_count() <= 1) break;
      kill_weakest();
    }
    return result;
  }

 private:
  Eigen::MatrixXd floor() const {
    return options_.cov_floor * Eigen::MatrixXd::Identity(y_.cols(), y_.cols());
  }

  std::size_t alive_count() const { return static_cast<std::size_t>(std::count(alive_.begin(), alive_.end(), true)); }

  void refresh_totals() {
    log_total_.resize(y_.rows());
    std::vector<double> terms(k_);
    for (Eigen::Index i = 0; i < y_.rows(); ++i) {
      for (std::size_t m = 0; m < k_; ++m)
        terms[m] = alive_[m] ? std::log(alpha_[m]) + log_u_(i, static_cast<Eigen::Index>(m)) : kNegInf;
      log_total_(i) = log_sum_exp(terms.data(), k_);
    }
  }

  Eigen::VectorXd responsibilities(std::size_t m) const {
    const double log_alpha = std::log(alpha_[m]);
    return (log_u_.col(static_cast<Eigen::Index>(m)).array() + log_alpha - log_total_.array()).exp().matrix();
  }

  void renormalize() {
    double sum = 0.0;
    for (std::size_t m = 0; m < k_; ++m)
      if (alive_[m]) sum += alpha_[m];
    for (std::size_t m = 0; m < k_; ++m) alpha_[m] = alive_[m] ? alpha_[m] / sum : 0.0;
  }

  // One pass of component-wise updates; returns true if a component died.
  bool sweep() {
    bool died = false;
    const double half_params = 0.5 * params_per_component_;
    for (std::size_t m = 0; m < k_; ++m) {
      if (!alive_[m]) continue;
      std::vector<double> support(k_, 0.0);
      double denominator = 0.0;
      Eigen::VectorXd w_m;
      for (std::size_t j = 0; j < k_; ++j) {
        if (!alive_[j]) continue;
        Eigen::VectorXd w = responsibilities(j);
        support[j] = w.sum();
        denominator += std::max(0.0, support[j] - half_params);
        if (j == m) w_m = std::move(w);
      }
      if (!(denominator > 0.0)) throw Error(ErrorKind::InsufficientData, "no component has enough support");

      alpha_[m] = std::max(0.0, support[m] - half_params) / denominator;
      if (alpha_[m] > 0.0) {
        const double mass = support[m];
        means_[m] = (y_.transpose() * w_m) / mass;
        const Eigen::MatrixXd centred = y_.rowwise() - means_[m].transpose();
        covs_[m] = centred.transpose() * w_m.asDiagonal() * centred / mass + floor();
        covs_[m] = symmetrize(covs_[m]);
        log_u_.col(static_cast<Eigen::Index>(m)) = log_gaussian_density(y_, means_[m], covs_[m]);
      } else {
        alive_[m] = false;
        died = true;
      }
      renormalize();
      refresh_totals();
    }
    return died;
  }

  double message_length() const {
    const double n = static_cast<double>(n_);
    const double k_nz = static_cast<double>(alive_count());
    double sum_log_alpha = 0.0;
    for (std::size_t m = 0; m < k_; ++m)
      if (alive_[m]) sum_log_alpha += std::log(n * alpha_[m] / 12.0);
    return 0.5 * params_per_component_ * sum_log_alpha + 0.5 * k_nz * std::log(n / 12.0) +
           0.5 * k_nz * (params_per_component_ + 1.0) - log_total_.sum();
  }

  void kill_weakest() {
    std::optional<std::size_t> weakest;
    for (std::size_t m = 0; m < k_; ++m)
      if (alive_[m] && (!weakest || alpha_[m] < alpha_[*weakest])) weakest = m;
    alive_[*weakest] = false;
    alpha_[*weakest] = 0.0;
    renormalize();
    refresh_totals();
  }

  GmmModel snapshot() const {
    GmmModel model;
    for (std::size_t m = 0; m < k_; ++m) {
      if (!alive_[m]) continue;
      model.weights.push_back(alpha_[m]);
      model.means.push_back(means_[m]);
      model.covs.push_back(covs_[m]);
    }
    return model;
  }

  const Eigen::MatrixXd& y_;
  FitOptions options_;
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  double params_per_component_ = 0.0;
  std::vector<double> alpha_;
  std::vector<bool> alive_;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::MatrixXd> covs_;
  Eigen::MatrixXd log_u_;
  Eigen::VectorXd log_total_;
};

}  // namespace

void GmmModel::validate() const {
  if (weights.empty()) throw Error(ErrorKind::Configuration, "mixture has no components");
  if (means.size() != weights.size() || covs.size() != weights.size())
    throw Error(ErrorKind::Configuration, "mixture component arrays disagree in length");
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::Configuration, "mixture weights must sum to one");
  for (std::size_t m = 0; m < k(); ++m) {
    if (!(weights[m] >= 0.0)) throw Error(ErrorKind::Configuration, "mixture weights must be non-negative");
    if (!is_symmetric(covs[m], 1e-10) || min_eigenvalue(covs[m]) < 0.0)
      throw Error(ErrorKind::Configuration, "mixture covariance must be symmetric PSD");
  }
}

FitResult fit_gmm_detailed(const Eigen::MatrixXd& samples, const FitOptions& options, RandomStream& rng) {
  if (options.k_max == 0) throw Error(ErrorKind::Configuration, "k_max must be positive");
  if (samples.cols() < 1) throw Error(ErrorKind::Configuration, "samples must have at least one dimension");
  if (static_cast<std::size_t>(samples.rows()) < 10 * options.k_max)
    throw Error(ErrorKind::InsufficientData, "need at least 10 samples per initial component");
  if (!samples.allFinite()) throw Error(ErrorKind::Configuration, "samples must be finite");
  ComponentwiseEm em(samples, options, rng);
  return em.run();
}

GmmModel fit_gmm(const Eigen::MatrixXd& samples, std::size_t k_max, RandomStream& rng) {
  FitOptions options;
  options.k_max = k_max;
  return fit_gmm_detailed(samples, options, rng).model;
}

double gmm_log_likelihood(const GmmModel& model, const Eigen::MatrixXd& samples) {
  Eigen::MatrixXd terms(samples.rows(), static_cast<Eigen::Index>(model.k()));
  for (std::size_t m = 0; m < model.k(); ++m) {
    terms.col(static_cast<Eigen::Index>(m)) =
        (log_gaussian_density(samples, model.means[m], model.covs[m]).array() + std::log(model.weights[m])).matrix();
  }
  double total = 0.0;
  std::vector<double> row(model.k());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (std::size_t m = 0; m < model.k(); ++m) row[m] = terms(i, static_cast<Eigen::Index>(m));
    total += log_sum_exp(row.data(), row.size());
  }
  return total;
}

Eigen::MatrixXd sample_gmm(const GmmModel& model, std::size_t n, RandomStream& rng) {
  const Eigen::Index d = model.dim();
  std::vector<Eigen::MatrixXd> roots;
  for (const auto& cov : model.covs) roots.push_back(covariance_sqrt(cov));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::size_t m = 0;
    double cumulative = model.weights[0];
    while (u >= cumulative && m + 1 < model.k()) cumulative += model.weights[++m];
    Eigen::VectorXd xi(d);
    for (Eigen::Index j = 0; j < d; ++j) xi(j) = rng.normal();
    out.row(static_cast<Eigen::Index>(i)) = (model.means[m] + roots[m] * xi).transpose();
  }
  return out;
}

std::vector<double> position_trace_report(const GmmModel& model) {
  std::vector<double> traces;
  for (const auto& cov : model.covs) {
    const Eigen::Index block = std::min<Eigen::Index>(3, cov.rows());
    traces.push_back(cov.topLeftCorner(block, block).trace());
  }
  return traces;
}

std::vector<ClusterSnapshot> propagate_and_cluster_study(const GaussianBelief& initial,
                                                         const std::vector<double>& times, std::size_t n,
                                                         const ClusterStudyOptions& options, RandomStream& rng) {
  if (!std::is_sorted(times.begin(), times.end())) throw Error(ErrorKind::Configuration, "study times must be ascending");
  if (!times.empty() && times.front() < initial.t)
    throw Error(ErrorKind::Configuration, "study times must not precede the initial belief");
  if (n < 2) throw Error(ErrorKind::Configuration, "study needs at least two particles");

  const Matrix6 root = covariance_sqrt(initial.cov);
  std::vector<StateVector> states;
  states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) states.push_back(initial.mean + root * rng.standard_normal_state());
  std::vector<bool> alive(n, true);
  const double r_surface = options.forces.constants.r_eq;

  std::vector<ClusterSnapshot> snapshots;
  double t_prev = initial.t;
  for (double t : times) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      bool impacted = false;
      const StepObserver watch = [&](double, const StateVector& x) {
        impacted = position_of(x).norm() < r_surface;
        return !impacted;
      };
      try {
        states[i] = propagate(states[i], t_prev, t, options.dt, options.forces, nullptr, nullptr, watch);
      } catch (const Error&) {
        impacted = true;
      }
      if (impacted) alive[i] = false;
    }
    t_prev = t;

    const Eigen::Index dims = options.full_state ? 6 : 3;
    const auto survivors = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), true));
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(survivors), dims);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (alive[i]) samples.row(row++) = states[i].head(dims).transpose();

    ClusterSnapshot snap;
    snap.t = t;
    snap.particles = survivors;
    snap.impacted = n - survivors;
    snap.model = fit_gmm_detailed(samples, options.fit, rng).model;
    snapshots.push_back(std::move(snap));
  }
  return snapshots;
}

void write_cluster_table(std::ostream& out, const std::vector<ClusterSnapshot>& snapshots) {
  const auto old_precision = out.precision(10);
  out << "time,modes,traces\n";
  for (const auto& snap : snapshots) {
    out << snap.t << ',' << snap.model.k() << ',';
    const auto traces = position_trace_report(snap.model);
    for (std::size_t m = 0; m < traces.size(); ++m) out << (m ? " " : "") << traces[m];
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace orbtrack
