#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "orbtrack/errors.hpp"
#include "orbtrack/depletion_analysis.hpp"

using namespace orbtrack;

namespace {

DepletionConfig case1_config(double sigma_pos, double sigma_vel, double log_ratio = 2.0) {
  DepletionConfig c;
  c.s0 = testutil::case1_state();
  c.p.diagonal() << sigma_pos * sigma_pos, sigma_pos * sigma_pos, sigma_pos * sigma_pos, sigma_vel * sigma_vel,
      sigma_vel * sigma_vel, sigma_vel * sigma_vel;
  c.r = c.station.noise_cov;
  const double peak = 1.0 / (2.0 * testutil::kPi * std::sqrt(c.r.determinant()));
  c.b = peak * std::exp(-log_ratio);
  return c;
}

}  // namespace

TEST_SUITE("depletion_analysis") {
  TEST_CASE("period gradient matches central differences") {
    const PhysicalConstants c;
    const StateVector s0 = testutil::case1_state();
    const RowVector6 g = period_gradient(s0, c);
    for (int i = 0; i < 6; ++i) {
      StateVector p = s0, m = s0;
      const double h = 1e-4;
      p(i) += h;
      m(i) -= h;
      const double fd = (keplerian_period(p, c) - keplerian_period(m, c)) / (2.0 * h);
      CHECK(std::abs(g(i) - fd) <= 1e-6 * std::max(std::abs(fd), g.norm() * 1e-3));
    }
    // one m/s of speed moves the period far more than one metre of position
    CHECK(g.tail<3>().norm() > g.head<3>().norm());
    CHECK(g.tail<3>().cwiseAbs().maxCoeff() > g.head<3>().cwiseAbs().maxCoeff());
  }

  TEST_CASE("circular orbit: along-track speed sensitivity is 3T/v") {
    const PhysicalConstants c;
    const StateVector s0 = testutil::circular_state(7000.0);
    const double period = keplerian_period(s0, c);
    const RowVector6 g = period_gradient(s0, c);
    CHECK(g(4) == doctest::Approx(3.0 * period / s0(4)).epsilon(1e-12));
    CHECK(g(3) == 0.0);
    CHECK(g(5) == 0.0);
  }

  TEST_CASE("sensitivity reduces to the measurement Jacobian without period dependence") {
    const DepletionConfig c = case1_config(1.0, 1e-3);
    const Matrix26 m = sensitivity_matrix(c, RowVector6::Zero());
    const double period = keplerian_period(c.s0, c.constants);
    CHECK((m - measurement_jacobian(c.s0, c.t0 + period, c.station)).norm() == 0.0);
  }

  TEST_CASE("first-order model of the one-period measurement") {
    // worst |g(Q(T0, S)) - g(Q(T0, S0)) - M (S - S0)| / |M (S - S0)| over draws at a given scale
    auto worst_error = [](double sigma_pos, double sigma_vel) {
      DepletionConfig c = case1_config(sigma_pos, sigma_vel);
      c.dt = 1.0;
      const double period = keplerian_period(c.s0, c.constants);
      const Matrix26 m = sensitivity_matrix(c);
      const ForceModel forces = two_body(c.constants);
      const Vector2 g0 = measure_ideal(propagate(c.s0, 0.0, period, c.dt, forces), period, c.station);
      RandomStream rng(6);
      const Matrix6 root = c.p.cwiseSqrt();
      double worst = 0.0;
      for (int i = 0; i < 20; ++i) {
        const StateVector d = root * rng.standard_normal_state();
        const Vector2 g = measure_ideal(propagate(c.s0 + d, 0.0, period, c.dt, forces), period, c.station);
        const Vector2 lin = m * d;
        worst = std::max(worst, angle_residual(g, g0 + lin).norm() / lin.norm());
      }
      return worst;
    };
    const double coarse = worst_error(1e-3, 1e-3);
    const double fine = worst_error(1e-4, 1e-4);
    MESSAGE("relative linearization error at 1 m/s: " << coarse << ", at 0.1 m/s: " << fine);
    // the remainder is second order, so the relative error scales with the perturbation
    CHECK(fine <= 0.15 * coarse);
    CHECK(coarse <= 1e-2);
    CHECK(fine <= 1e-3);
  }

  TEST_CASE("ellipse radii") {
    DepletionConfig c = case1_config(1.0, 1e-3);
    const Matrix26 m = sensitivity_matrix(c);
    const EllipseRadii r = ellipse_radii(c, m);
    CHECK(r.m <= r.n);
    CHECK(r.n == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    DepletionConfig loose = c;
    loose.strict_radius_form = false;
    CHECK(ellipse_radii(loose, m).n == doctest::Approx(2.0).epsilon(1e-12));

    DepletionConfig exact = c;
    exact.p.setZero();
    const EllipseRadii e = ellipse_radii(exact, m);
    CHECK(e.m == doctest::Approx(e.n).epsilon(1e-12));
  }

  TEST_CASE("scalar composite covariance gives the closed-form m") {
    DepletionConfig c;
    c.s0 = testutil::case1_state();
    const double sigma = 0.1, cval = 0.03;
    c.r = sigma * sigma * Matrix2::Identity();
    c.p = cval * Matrix6::Identity();
    c.b = 0.5 / (2.0 * testutil::kPi * sigma * sigma);
    Matrix26 m = Matrix26::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    const EllipseRadii r = ellipse_radii(c, m);
    CHECK(r.m == doctest::Approx(sigma / std::sqrt(2.0 * cval + sigma * sigma) * r.n).epsilon(1e-12));
  }

  TEST_CASE("m shrinks as P grows and as b rises") {
    const DepletionConfig base = case1_config(1.0, 1e-3);
    const Matrix26 sens = sensitivity_matrix(base);
    double prev = ellipse_radii(base, sens).m;
    DepletionConfig c = base;
    for (int i = 0; i < 6; ++i) {
      c.p *= 2.0;
      const double m = ellipse_radii(c, sens).m;
      CHECK(m <= prev);
      prev = m;
    }
    prev = std::numeric_limits<double>::infinity();
    for (double ratio : {20.0, 10.0, 5.0, 2.0, 1.0, 0.1}) {
      const double m = ellipse_radii(case1_config(1.0, 1e-3, ratio), sens).m;
      CHECK(m <= prev);
      prev = m;
    }
  }

  TEST_CASE("chi-square bound") {
    CHECK(chi2_2dof_cdf(0.0) == 0.0);
    CHECK(chi2_2dof_cdf(2.0) == doctest::Approx(0.8647).epsilon(1e-4));
    CHECK(chi2_2dof_cdf(40.0) == doctest::Approx(1.0));
  }

  TEST_CASE("empty threshold") {
    DepletionConfig c = case1_config(1.0, 1e-3, -0.5);
    CHECK_THROWS_AS(ellipse_radii(c, sensitivity_matrix(c)), Error);
    const DepletionResult r = depletion_lower_bound(c);
    CHECK(r.empty_threshold);
    CHECK(r.lower_bound == 0.0);
    RandomStream rng(2);
    CHECK(monte_carlo_retention(c, 1000, rng).retention == 0.0);
  }

  TEST_CASE("a vanishing threshold retains everything") {
    DepletionConfig c = case1_config(1e-3, 1e-6, 600.0);
    RandomStream rng(3);
    const RetentionEstimate e = monte_carlo_retention(c, 1000, rng);
    CHECK(e.retention == 1.0);
    CHECK(e.failures == 0);
    CHECK(depletion_lower_bound(c).lower_bound == doctest::Approx(1.0));
  }

  TEST_CASE("the bound never exceeds the Monte Carlo retention") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      DepletionConfig c = case1_config(1.0, 1e-2, 2.0);
      c.station.noise_cov = 0.05 * 0.05 * Matrix2::Identity();
      c.r = c.station.noise_cov;
      c.b = std::exp(-2.0) / (2.0 * testutil::kPi * 0.05 * 0.05);
      const DepletionResult bound = depletion_lower_bound(c);
      RandomStream rng(seed);
      const RetentionEstimate mc = monte_carlo_retention(c, 2000, rng);
      CHECK(bound.lower_bound > 0.0);
      CHECK(bound.lower_bound <= mc.retention + 2.0 * mc.binomial_sigma);
    }
  }

  TEST_CASE("periodicity prerequisite and validation") {
    DepletionConfig c = case1_config(1.0, 1e-3);
    CHECK(periodicity_residual(c) < 1e-3);
    c.b = -1.0;
    CHECK_THROWS_AS(depletion_lower_bound(c), Error);
    DepletionConfig small = case1_config(1.0, 1e-3);
    RandomStream rng(1);
    CHECK_THROWS_AS(monte_carlo_retention(small, 10, rng), Error);
  }
}
