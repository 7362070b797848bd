#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "socnav/social_field.hpp"
#include "support/oracles.hpp"

using namespace socnav;

namespace {

PsParams defaults() { return PsParams::from_lateral_variance(0.36); }

}  // namespace

TEST_CASE("PsParams: front variance fixed at twice the lateral") {
  const PsParams p = PsParams::from_lateral_variance(0.5, 80.0, 2.0);
  CHECK(p.sigma_xx == doctest::Approx(1.0));
  CHECK_NOTHROW(p.validate());
  PsParams bad = p;
  bad.sigma_xx = 0.9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("relative_position: rotation examples") {
  const Eigen::Vector2d a = relative_position({0.0, 0.0, 0.0}, {1.0, 0.0});
  CHECK(a.x() == doctest::Approx(1.0));
  CHECK(a.y() == doctest::Approx(0.0));

  // Person facing +y; a point at +y is directly in front.
  const Eigen::Vector2d b =
      relative_position({0.0, 0.0, std::numbers::pi / 2.0}, {0.0, 1.0});
  CHECK(b.x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.y() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("relative_position: preserves distances") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    const PersonPose p{u(rng), u(rng), u(rng)};
    const Eigen::Vector2d q(u(rng), u(rng));
    const double want = (q - p.position()).norm();
    CHECK(relative_position(p, q).norm() == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("front_blend: gate values and oddness") {
  CHECK(front_blend(0.0, 100.0) == doctest::Approx(0.5));
  CHECK(std::abs(front_blend(0.1, 100.0) - 1.0) < 1e-4);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double d = u(rng);
    CHECK(front_blend(d, 100.0) + front_blend(-d, 100.0) == doctest::Approx(1.0));
  }
  // Strictly increasing.
  double prev = front_blend(-0.2, 100.0);
  for (double d = -0.19; d <= 0.2; d += 0.01) {
    const double v = front_blend(d, 100.0);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("ps_value: exact peak and hand-computed front/rear values") {
  const PsParams p = defaults();
  CHECK(ps_value({0.7, -0.3, 1.2}, {0.7, -0.3}, p) == 1.0);

  // 1.2 m directly in front: exp(-0.5 * 1.44 / 0.72) = exp(-1).
  const double front = ps_value({0.0, 0.0, 0.0}, {1.2, 0.0}, p);
  CHECK(front == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  // 1.2 m directly behind: exp(-0.5 * 1.44 / 0.36) = exp(-2).
  const double rear = ps_value({0.0, 0.0, 0.0}, {-1.2, 0.0}, p);
  CHECK(rear == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(front > rear);
}

TEST_CASE("ps_value: range, front dominance, lateral symmetry, rotation") {
  const PsParams p = defaults();
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 10000; ++i) {
    const PersonPose person{u(rng), u(rng), ang(rng)};
    const Eigen::Vector2d q(u(rng), u(rng));
    const double v = ps_value(person, q, p);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
    if ((q - person.position()).norm() > 1e-6) CHECK(v < 1.0);

    // Lateral symmetry in the body frame.
    const Eigen::Vector2d d = relative_position(person, q);
    const double c = std::cos(person.heading), s = std::sin(person.heading);
    const Eigen::Vector2d q_mirror =
        person.position() + Eigen::Vector2d(c * d.x() + s * d.y(), s * d.x() - c * d.y());
    CHECK(ps_value(person, q_mirror, p) == doctest::Approx(v).epsilon(1e-12));

    // Rotating person and query together changes nothing.
    const double phi = ang(rng);
    const double cp = std::cos(phi), sp = std::sin(phi);
    const PersonPose rotated{cp * person.x - sp * person.y, sp * person.x + cp * person.y,
                             person.heading + phi};
    const Eigen::Vector2d q_rot(cp * q.x() - sp * q.y(), sp * q.x() + cp * q.y());
    CHECK(ps_value(rotated, q_rot, p) == doctest::Approx(v).epsilon(1e-9));
  }

  // Front dominance along the axis.
  for (double x = 0.1; x < 4.0; x += 0.1) {
    CHECK(ps_value({0, 0, 0}, {x, 0.0}, p) > ps_value({0, 0, 0}, {-x, 0.0}, p));
  }
}

TEST_CASE("ps_value: decreases along rays outside the gate band") {
  const PsParams p = defaults();
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  const double band = 3.0 / p.k;
  for (int i = 0; i < 500; ++i) {
    const double dir = ang(rng);
    double prev = 1.0;
    for (double r = 0.05; r < 4.0; r += 0.05) {
      const Eigen::Vector2d q(r * std::cos(dir), r * std::sin(dir));
      if (std::abs(q.x()) < band) continue;  // skip the tanh transition strip
      const double v = ps_value({0, 0, 0}, q, p);
      CHECK(v < prev + 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("ps_quadratic: negligible far away") {
  const PsParams p = defaults();
  const PsQuadratic far = ps_quadratic({0, 0, 0}, {8.0, 2.0}, p);
  CHECK(std::abs(far.value) < 1e-6);
  CHECK(far.gradient.norm() < 1e-6);
  CHECK(far.hessian.norm() < 1e-6);
}

TEST_CASE("ps_quadratic: zero gradient at the peak") {
  const PsParams p = defaults();
  const PsQuadratic at_peak = ps_quadratic({1.0, 2.0, 0.7}, {1.0, 2.0}, p);
  CHECK(at_peak.value == doctest::Approx(1.0));
  CHECK(at_peak.gradient.norm() == doctest::Approx(0.0));
}

TEST_CASE("ps_quadratic: gradient matches finite differences off the band") {
  const PsParams p = defaults();
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  int tested = 0;
  while (tested < 1000) {
    const PersonPose person{u(rng), u(rng), ang(rng)};
    const Eigen::Vector2d q(u(rng), u(rng));
    const Eigen::Vector2d d = relative_position(person, q);
    if (std::abs(d.x()) < 3.0 / p.k + 1e-3) continue;  // exclude transition band
    ++tested;

    const PsQuadratic quad = ps_quadratic(person, q, p);
    const double step = 1e-6;
    for (int axis = 0; axis < 2; ++axis) {
      const double fd = oracles::central_diff(
          [&](double v) {
            Eigen::Vector2d qq = q;
            qq(axis) = v;
            return ps_value(person, qq, p);
          },
          q(axis), step);
      CHECK(oracles::close_rel(quad.gradient(axis), fd, 1e-5));
    }
  }
}

TEST_CASE("ps_quadratic: convexified Hessian is PSD everywhere") {
  const PsParams p = defaults();
  std::mt19937_64 rng(46);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 5000; ++i) {
    const PersonPose person{u(rng), u(rng), ang(rng)};
    const Eigen::Vector2d q(u(rng), u(rng));
    const PsQuadratic quad = ps_quadratic(person, q, p);
    const Eigen::Vector2d eig =
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(quad.hessian).eigenvalues();
    CHECK(eig.minCoeff() >= -1e-12);
    CHECK((quad.hessian - quad.hessian.transpose()).norm() < 1e-12);
  }
}
