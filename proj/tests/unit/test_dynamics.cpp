#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "orbtrack/dynamics.hpp"
#include "orbtrack/errors.hpp"

using namespace orbtrack;

namespace {

// Two-body variational equations integrated alongside the state with a fine RK4 step.
Matrix6 variational_stm(const StateVector& x0, double span, double h, double mu) {
  using Aug = Eigen::Matrix<double, 42, 1>;
  auto rhs = [mu](const Aug& y) {
    const Vector3 r = y.head<3>();
    const Vector3 v = y.segment<3>(3);
    const double rn = r.norm();
    const Matrix3 g = -mu / std::pow(rn, 3) * (Matrix3::Identity() - 3.0 * r * r.transpose() / (rn * rn));
    Matrix6 a = Matrix6::Zero();
    a.topRightCorner<3, 3>() = Matrix3::Identity();
    a.bottomLeftCorner<3, 3>() = g;
    const Matrix6 phi = Eigen::Map<const Matrix6>(y.data() + 6);
    Aug out;
    out.head<3>() = v;
    out.segment<3>(3) = -mu / std::pow(rn, 3) * r;
    Eigen::Map<Matrix6>(out.data() + 6) = a * phi;
    return out;
  };
  Aug y;
  y.head<6>() = x0;
  Eigen::Map<Matrix6>(y.data() + 6) = Matrix6::Identity();
  const int steps = static_cast<int>(std::round(span / h));
  for (int i = 0; i < steps; ++i) {
    const Aug k1 = rhs(y);
    const Aug k2 = rhs(y + 0.5 * h * k1);
    const Aug k3 = rhs(y + 0.5 * h * k2);
    const Aug k4 = rhs(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return Eigen::Map<const Matrix6>(y.data() + 6);
}

ForceModel j2_only() {
  ForceModel m;
  m.drag.area_to_mass = 0.0;
  return m;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("point-mass acceleration on the x axis") {
    const ForceModel model = two_body();
    StateVector s;
    s << 7000.0, 0.0, 0.0, 0.0, 7.546, 0.0;
    const Vector3 a = total_acceleration(s, model);
    CHECK(a.x() == doctest::Approx(-398600.4418 / (7000.0 * 7000.0)).epsilon(1e-12));
    CHECK(a.x() == doctest::Approx(-0.0081347).epsilon(1e-4));
    CHECK(a.y() == 0.0);
    CHECK(a.z() == 0.0);
  }

  TEST_CASE("J2 has no out-of-plane component in the equatorial plane") {
    StateVector s;
    s << 5000.0, 4000.0, 0.0, -4.0, 5.0, 0.0;
    const Vector3 a = total_acceleration(s, j2_only());
    CHECK(a.z() == 0.0);
    const Vector3 a2b = total_acceleration(s, two_body());
    // J2 strengthens radial attraction at the equator
    CHECK(a.norm() > a2b.norm());
  }

  TEST_CASE("drag vanishes for a co-rotating object") {
    ForceModel with_drag;
    with_drag.drag.area_to_mass = 0.05;
    ForceModel no_drag = with_drag;
    no_drag.drag.area_to_mass = 0.0;
    const Vector3 r(6378.137 + 300.0, 100.0, 50.0);
    const Vector3 v = Vector3(0.0, 0.0, with_drag.constants.omega_earth).cross(r);
    const StateVector s = make_state(r, v);
    CHECK((total_acceleration(s, with_drag) - total_acceleration(s, no_drag)).norm() < 1e-18);
  }

  TEST_CASE("exponential density") {
    const DragParams d;
    CHECK(atmospheric_density(d.r0, d) == doctest::Approx(d.rho0).epsilon(1e-12));
    CHECK(atmospheric_density(d.r0 + d.scale_height, d) == doctest::Approx(d.rho0 / std::exp(1.0)).epsilon(1e-12));
    CHECK(atmospheric_density(d.r0 + 2.0 * d.scale_height, d) ==
          doctest::Approx(d.rho0 / std::exp(2.0)).epsilon(1e-12));
  }

  TEST_CASE("acceleration is smooth: central differences at two step sizes agree") {
    ForceModel model;
    model.drag.area_to_mass = 0.05;
    StateVector s;
    s << 6500.0, 1200.0, 900.0, -1.1, 7.2, 1.3;
    for (int j = 0; j < 6; ++j) {
      auto fd = [&](double h) {
        StateVector p = s, m = s;
        p(j) += h;
        m(j) -= h;
        return Vector3((total_acceleration(p, model) - total_acceleration(m, model)) / (2.0 * h));
      };
      const double h = j < 3 ? 1.0 : 1e-2;
      const Vector3 coarse = fd(h), fine = fd(h / 10.0);
      CHECK((coarse - fine).norm() <= 1e-6 * std::max(fine.norm(), 1e-12));
    }
  }

  TEST_CASE("zero span and small steps") {
    const StateVector s = testutil::case1_state();
    CHECK(propagate(s, 100.0, 100.0, 10.0, ForceModel{}) == s);
    CHECK_THROWS_AS(propagate(s, 0.0, 10.0, 1e-7, ForceModel{}), Error);
    CHECK_THROWS_AS(propagate(s, 10.0, 0.0, 1.0, ForceModel{}), Error);
    StateVector bad = s;
    bad.head<3>().setZero();
    CHECK_THROWS_AS(propagate(bad, 0.0, 10.0, 1.0, ForceModel{}), Error);
  }

  TEST_CASE("circular orbit returns to its start after one period") {
    const double mu = PhysicalConstants{}.mu;
    const StateVector s = testutil::circular_state(7000.0);
    const double period = 2.0 * testutil::kPi * std::sqrt(std::pow(7000.0, 3) / mu);
    const StateVector back = propagate(s, 0.0, period, 1.0, two_body());
    CHECK((back.head<3>() - s.head<3>()).norm() < 1e-6);
    CHECK((back.tail<3>() - s.tail<3>()).norm() < 1e-9);
  }

  TEST_CASE("two-body energy and angular momentum are conserved") {
    const StateVector s = testutil::case1_state();
    const double mu = PhysicalConstants{}.mu;
    const double period = keplerian_period(s, PhysicalConstants{});
    const StateVector back = propagate(s, 0.0, period, 1.0, two_body());
    const double e0 = specific_energy(s, mu);
    CHECK(std::abs(specific_energy(back, mu) - e0) < 1e-9 * std::abs(e0));
    const Vector3 h0 = angular_momentum(s);
    CHECK((angular_momentum(back) - h0).norm() < 1e-9 * h0.norm());
    CHECK((back.head<3>() - s.head<3>()).norm() < 1e-3);
  }

  TEST_CASE("J2 conserves the polar angular momentum component") {
    StateVector s;
    s << 7000.0, 0.0, 0.0, 0.0, 5.0, 5.0;
    const double hz0 = angular_momentum(s).z();
    const StateVector out = propagate(s, 0.0, 6000.0, 1.0, j2_only());
    CHECK(std::abs(angular_momentum(out).z() - hz0) < 1e-9 * std::abs(hz0));
  }

  TEST_CASE("drag never increases orbital energy") {
    ForceModel model = two_body();
    model.drag.area_to_mass = 0.01;
    const StateVector s = testutil::circular_state(6378.137 + 400.0);
    const double mu = model.constants.mu;
    std::vector<double> energies{specific_energy(s, mu)};
    propagate(s, 0.0, 6000.0, 10.0, model, nullptr, nullptr, [&](double, const StateVector& x) {
      energies.push_back(specific_energy(x, mu));
      return true;
    });
    REQUIRE(energies.size() > 500);
    for (std::size_t i = 1; i < energies.size(); ++i) CHECK(energies[i] <= energies[i - 1]);
    CHECK(energies.back() < energies.front());
  }

  TEST_CASE("flow composition on a shared step grid") {
    const StateVector s = testutil::case1_state();
    const ForceModel model;
    const StateVector direct = propagate(s, 0.0, 3000.0, 10.0, model);
    const StateVector composed = propagate(propagate(s, 0.0, 1000.0, 10.0, model), 1000.0, 3000.0, 10.0, model);
    CHECK((direct - composed).norm() < 1e-9);
  }

  TEST_CASE("observer can stop integration early") {
    int calls = 0;
    propagate(testutil::case1_state(), 0.0, 100.0, 10.0, ForceModel{}, nullptr, nullptr, [&](double t, const StateVector&) {
      ++calls;
      return t < 30.0;
    });
    CHECK(calls == 3);
  }

  TEST_CASE("flow Jacobian") {
    const StateVector s = testutil::case1_state();
    const double mu = PhysicalConstants{}.mu;
    CHECK((flow_jacobian(s, 0.0, 0.0, 10.0, ForceModel{}) - Matrix6::Identity()).cwiseAbs().maxCoeff() < 1e-12);

    const Matrix6 numeric = flow_jacobian(s, 0.0, 10.0, 1.0, two_body());
    const Matrix6 oracle = variational_stm(s, 10.0, 0.1, mu);
    MESSAGE("flow Jacobian max-abs deviation: " << (numeric - oracle).cwiseAbs().maxCoeff());
    CHECK((numeric - oracle).cwiseAbs().maxCoeff() < 1e-6);

    // Hamiltonian flow preserves phase-space volume.
    CHECK(two_body().drag.area_to_mass == 0.0);
    CHECK(numeric.determinant() == doctest::Approx(1.0).epsilon(1e-6));
    const Matrix6 longer = flow_jacobian(s, 0.0, 3000.0, 10.0, two_body());
    CHECK(longer.determinant() == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("Keplerian period") {
    const PhysicalConstants c;
    const StateVector circ = testutil::circular_state(7000.0);
    CHECK(keplerian_period(circ, c) == doctest::Approx(2.0 * testutil::kPi * 7000.0 / circ(4)).epsilon(1e-12));
    CHECK(keplerian_period(testutil::case1_state(), c) == doctest::Approx(6080.0).epsilon(1.0 / 6080.0));

    StateVector case2;
    case2 << 6800.0, 0.0, 0.0, 0.0, 7.5989 * std::cos(testutil::kPi / 30), 7.5989 * std::sin(testutil::kPi / 30);
    const double t2 = keplerian_period(case2, c);
    const double a = 1.0 / (2.0 / 6800.0 - 7.5989 * 7.5989 / c.mu);
    CHECK(t2 == doctest::Approx(2.0 * testutil::kPi * std::sqrt(a * a * a / c.mu)).epsilon(1e-12));
    CHECK(t2 == doctest::Approx(5457.9).epsilon(0.5 / 5457.9));
    // 5580.5 s is what the circular formula gives for r = 6800 km
    CHECK(2.0 * testutil::kPi * std::sqrt(std::pow(6800.0, 3) / c.mu) == doctest::Approx(5580.5).epsilon(0.5 / 5580.5));

    StateVector escape = circ;
    escape(4) *= 1.5;
    CHECK_THROWS_AS(keplerian_period(escape, c), Error);
  }

  TEST_CASE("process noise validation and determinism") {
    Matrix6 asym = Matrix6::Identity();
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(ProcessNoise{asym}, Error);
    CHECK_THROWS_AS(ProcessNoise::isotropic(-1.0), Error);
    const ProcessNoise q = ProcessNoise::isotropic(1e-8);
    CHECK((q.factor() * q.factor().transpose() - q.covariance()).norm() < 1e-20);

    const StateVector s = testutil::case1_state();
    RandomStream a(5), b(5);
    const StateVector xa = propagate(s, 0.0, 100.0, 10.0, ForceModel{}, &q, &a);
    const StateVector xb = propagate(s, 0.0, 100.0, 10.0, ForceModel{}, &q, &b);
    CHECK(xa == xb);
    CHECK(xa != propagate(s, 0.0, 100.0, 10.0, ForceModel{}));
    CHECK_THROWS_AS(propagate(s, 0.0, 100.0, 10.0, ForceModel{}, &q, nullptr), Error);
  }

  TEST_CASE("noisy propagation spreads with the accumulated covariance") {
    MotionModel model;
    model.forces = two_body();
    model.dt = 10.0;
    model.noise = ProcessNoise::isotropic(1e-6);
    CHECK((model.noise_covariance(50.0) - 50.0 * 1e-6 * Matrix6::Identity()).norm() < 1e-18);
    // over a short span the flow is near-identity, so the spread matches t * q
    const StateVector s = testutil::case1_state();
    const StateVector mean = model.propagate(s, 0.0, 20.0);
    RandomStream rng(2);
    const int n = 4000;
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += std::pow(model.propagate_noisy(s, 0.0, 20.0, rng)(3) - mean(3), 2);
    var /= n;
    CHECK(var == doctest::Approx(20.0 * 1e-6).epsilon(0.1));
  }

  TEST_CASE("constants validation") {
    PhysicalConstants c;
    c.mu = -1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    PhysicalConstants ok;
    ok.j2 = 0.0;
    CHECK_NOTHROW(ok.validate());
    DragParams d;
    d.area_to_mass = -0.1;
    CHECK_THROWS_AS(d.validate(), Error);
  }
}
