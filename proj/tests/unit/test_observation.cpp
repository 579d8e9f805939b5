#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "orbtrack/errors.hpp"
#include "orbtrack/observation.hpp"

using namespace orbtrack;
using testutil::kPi;

TEST_SUITE("observation") {
  TEST_CASE("station rotation is a proper rotation group") {
    const double w = StationModel{}.omega;
    CHECK((station_rotation(0.0, w) - Matrix3::Identity()).norm() == 0.0);
    CHECK((station_rotation(2.0 * kPi / w, w) - Matrix3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1e5, 1e5);
    for (int i = 0; i < 100; ++i) {
      const double t1 = u(gen), t2 = u(gen);
      const Matrix3 c = station_rotation(t1, w);
      CHECK((c * c.transpose() - Matrix3::Identity()).cwiseAbs().maxCoeff() < 1e-14);
      CHECK(c.determinant() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK((c * station_rotation(t2, w) - station_rotation(t1 + t2, w)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("angles along the station axes") {
    const StationModel st;
    StateVector s = StateVector::Zero();
    s(0) = st.r_station_ecef.x() + 1000.0;
    Vector2 z = measure_ideal(s, 0.0, st);
    CHECK(z(0) == doctest::Approx(0.0));
    CHECK(z(1) == doctest::Approx(0.0));

    s.head<3>() = st.r_station_ecef + Vector3(0.0, 0.0, 1000.0);
    z = measure_ideal(s, 0.0, st);
    CHECK(z(0) == doctest::Approx(kPi / 2.0));
    CHECK(z(1) == doctest::Approx(0.0));

    s.head<3>() = st.r_station_ecef;
    CHECK_THROWS_AS(measure_ideal(s, 0.0, st), Error);
  }

  TEST_CASE("angles match an explicit rotation and spherical decomposition") {
    const StationModel st;
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(-20000.0, 20000.0);
    std::uniform_real_distribution<double> ut(0.0, 86400.0);
    for (int i = 0; i < 200; ++i) {
      StateVector s;
      s << u(gen), u(gen), u(gen), 1.0, 2.0, 3.0;
      const double t = ut(gen);
      const double a = st.omega * t;
      const Vector3 rs(std::cos(a) * st.r_station_ecef.x(), std::sin(a) * st.r_station_ecef.x(), 0.0);
      const Vector3 d = s.head<3>() - rs;
      const Vector3 rho(std::cos(a) * d.x() + std::sin(a) * d.y(), -std::sin(a) * d.x() + std::cos(a) * d.y(), d.z());
      const Vector2 z = measure_ideal(s, t, st);
      CHECK(z(0) == doctest::Approx(std::atan2(rho.z(), std::hypot(rho.x(), rho.y()))).epsilon(1e-12));
      CHECK(std::abs(z(1) - std::atan2(rho.y(), rho.x())) < 1e-12);
      CHECK(z(0) >= -kPi / 2.0);
      CHECK(z(0) <= kPi / 2.0);
      CHECK(z(1) > -kPi);
      CHECK(z(1) <= kPi);
    }
  }

  TEST_CASE("angles are invariant to scaling the line of sight") {
    const StationModel st;
    const StateVector s = testutil::state_at_angles(0.3, -0.7, 900.0);
    const StateVector far = testutil::state_at_angles(0.3, -0.7, 9000.0);
    CHECK((measure_ideal(s, 0.0, st) - measure_ideal(far, 0.0, st)).norm() < 1e-12);
  }

  TEST_CASE("field of view boundaries") {
    StationModel st;
    CHECK(in_fov(testutil::state_at_angles(0.0, 0.0, 1000.0), 0.0, st));
    CHECK_FALSE(in_fov(testutil::state_at_angles(0.0, 80.0 * kPi / 180.0, 1000.0), 0.0, st));
    CHECK(in_fov(testutil::state_at_angles(0.0, 70.0 * kPi / 180.0, 1000.0), 0.0, st));
    CHECK_FALSE(in_fov(testutil::state_at_angles(0.0, -80.0 * kPi / 180.0, 1000.0), 0.0, st));
    // the box is closed: a point exactly on the edge is inside
    const StateVector edge = testutil::state_at_angles(0.0, 75.0 * kPi / 180.0, 1000.0);
    st.fov_azimuth_halfwidth = measure_ideal(edge, 0.0, st)(1);
    CHECK(in_fov(edge, 0.0, st));
    st.fov_polar_halfwidth = 0.2;
    CHECK_FALSE(in_fov(testutil::state_at_angles(0.3, 0.0, 1000.0), 0.0, st));
  }

  TEST_CASE("sensor draws") {
    StationModel st;
    const StateVector inside = testutil::state_at_angles(0.2, 0.1, 1000.0);
    const StateVector outside = testutil::state_at_angles(0.2, 2.0, 1000.0);
    RandomStream rng(42);

    for (int i = 0; i < 1000; ++i) CHECK_FALSE(try_measure(outside, 0.0, st, rng).has_value());

    int detected = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) detected += try_measure(inside, 0.0, st, rng).has_value();
    const double frac = static_cast<double>(detected) / n;
    CHECK(frac >= 0.88);
    CHECK(frac <= 0.92);

    st.detection_prob = 1.0;
    st.noise_cov.setZero();
    for (int i = 0; i < 10; ++i) {
      const auto z = try_measure(inside, 0.0, st, rng);
      REQUIRE(z.has_value());
      CHECK(z->angles() == measure_ideal(inside, 0.0, st));
      CHECK(z->t == 0.0);
    }
  }

  TEST_CASE("noisy angles stay in range near the wrap and clamp points") {
    StationModel st;
    st.detection_prob = 1.0;
    st.fov_azimuth_halfwidth = kPi;
    st.noise_cov = 1e-4 * Matrix2::Identity();
    RandomStream rng(7);
    const StateVector near_pole = testutil::state_at_angles(kPi / 2.0 - 1e-6, 0.0, 1000.0);
    const StateVector near_wrap = testutil::state_at_angles(0.0, kPi - 1e-6, 1000.0);
    bool wrapped = false;
    for (int i = 0; i < 2000; ++i) {
      for (const auto& s : {near_pole, near_wrap}) {
        const auto z = try_measure(s, 0.0, st, rng);
        REQUIRE(z.has_value());
        CHECK(z->theta >= -kPi / 2.0);
        CHECK(z->theta <= kPi / 2.0);
        CHECK(z->phi > -kPi);
        CHECK(z->phi <= kPi);
        if (s == near_wrap && z->phi < 0.0) wrapped = true;
      }
    }
    CHECK(wrapped);
  }

  TEST_CASE("measurement likelihood") {
    StationModel st;
    const StateVector s = testutil::state_at_angles(0.4, 0.5, 2000.0);
    const Vector2 h = measure_ideal(s, 0.0, st);
    const double sigma = kArcsec39;
    const double peak = -std::log(2.0 * kPi * std::sqrt(st.noise_cov.determinant()));
    CHECK(measurement_log_likelihood({0.0, h(0), h(1)}, s, 0.0, st) == doctest::Approx(peak).epsilon(1e-12));
    CHECK(measurement_log_likelihood({0.0, h(0) + sigma, h(1) + sigma}, s, 0.0, st) ==
          doctest::Approx(peak - 1.0).epsilon(1e-9));

    // wrapping: residual across the +-pi seam is small
    const StateVector back = testutil::state_at_angles(0.0, kPi - 1e-7, 2000.0);
    const double ll = measurement_log_likelihood({0.0, 0.0, -kPi + 1e-7}, back, 0.0, st);
    CHECK(ll > peak - 100.0);

    st.noise_cov = Matrix2::Zero();
    CHECK_THROWS_AS(measurement_log_likelihood({0.0, h(0), h(1)}, s, 0.0, st), Error);
  }

  TEST_CASE("likelihood integrates to one over measurement space") {
    StationModel st;
    const double sigma = 1e-3;
    st.noise_cov = sigma * sigma * Matrix2::Identity();
    const StateVector s = testutil::state_at_angles(0.1, 0.2, 2000.0);
    const Vector2 h = measure_ideal(s, 0.0, st);
    const double step = sigma / 20.0;
    double total = 0.0;
    for (int i = -160; i <= 160; ++i)
      for (int j = -160; j <= 160; ++j)
        total += std::exp(measurement_log_likelihood({0.0, h(0) + i * step, h(1) + j * step}, s, 0.0, st));
    CHECK(total * step * step == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("measurement Jacobian matches direction derivatives") {
    const StationModel st;
    const StateVector s = testutil::state_at_angles(0.3, 0.4, 1500.0);
    const Matrix26 g = measurement_jacobian(s, 100.0, st);
    CHECK(g.rightCols<3>().norm() == 0.0);
    // moving along the line of sight leaves the angles unchanged
    const Vector3 los = station_rotation(100.0, st.omega).transpose() * relative_position_station(s, 100.0, st);
    StateVector d = StateVector::Zero();
    d.head<3>() = los.normalized();
    CHECK((g * d).norm() < 1e-9);
  }

  TEST_CASE("station validation") {
    StationModel st;
    st.detection_prob = 1.5;
    CHECK_THROWS_AS(st.validate(), Error);
    StationModel neg;
    neg.noise_cov(0, 0) = -1.0;
    CHECK_THROWS_AS(neg.validate(), Error);
  }
}
