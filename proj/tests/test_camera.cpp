#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "socnav/camera.hpp"
#include "support/oracles.hpp"

using namespace socnav;

namespace {

Eigen::Matrix<double, 3, 4> identity_h() {
  Eigen::Matrix<double, 3, 4> h = Eigen::Matrix<double, 3, 4>::Zero();
  h(0, 0) = h(1, 1) = h(2, 2) = 1.0;
  return h;
}

// Draws (H, p) pairs away from both degeneracy thresholds.
struct RandomCase {
  ProjectionMatrix h;
  WorldPoint p;
  double z_w;
};

RandomCase random_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  while (true) {
    ProjectionMatrix h = oracles::random_projection(rng);
    const WorldPoint p{u(rng), u(rng), u(rng)};
    const auto& m = h.matrix();
    const double s = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2) * p.z + m(2, 3);
    if (std::abs(s) < 0.1) continue;
    const Projection proj = project(p, h);
    const double a11 = m(2, 0) * proj.pixel.x - m(0, 0);
    const double a12 = m(2, 1) * proj.pixel.x - m(0, 1);
    const double a21 = m(2, 0) * proj.pixel.y - m(1, 0);
    const double a22 = m(2, 1) * proj.pixel.y - m(1, 1);
    if (std::abs(a11 * a22 - a12 * a21) < 0.01) continue;
    return {h, p, p.z};
  }
}

}  // namespace

TEST_CASE("project: pinhole examples") {
  const ProjectionMatrix h(identity_h());
  const Projection a = project({1.0, 2.0, 4.0}, h);
  CHECK(a.pixel.x == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(a.pixel.y == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.scale == doctest::Approx(4.0).epsilon(1e-12));

  const Projection b = project({0.0, 0.0, 1.0}, h);
  CHECK(b.pixel.x == doctest::Approx(0.0));
  CHECK(b.pixel.y == doctest::Approx(0.0));
  CHECK(b.scale == doctest::Approx(1.0));
}

TEST_CASE("project: throws on the camera plane") {
  const ProjectionMatrix h(identity_h());
  CHECK_THROWS_AS(project({1.0, 2.0, 0.0}, h), DegenerateProjection);
}

TEST_CASE("project: matches a direct matrix-product oracle") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const RandomCase c = random_case(rng);
    const Projection got = project(c.p, c.h);
    const auto want = oracles::project_by_hand(c.h.row_major(), c.p.x, c.p.y, c.p.z);
    CHECK(oracles::close_rel(got.pixel.x, want[0], 1e-12));
    CHECK(oracles::close_rel(got.pixel.y, want[1], 1e-12));
    CHECK(oracles::close_rel(got.scale, want[2], 1e-12));
  }
}

TEST_CASE("back_project: inverse of the identity example") {
  const ProjectionMatrix h(identity_h());
  const WorldPoint w = back_project({0.25, 0.5}, 4.0, h);
  CHECK(w.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.y == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w.z == doctest::Approx(4.0));
}

TEST_CASE("back_project: round trip to 1e-9 on random cases") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const RandomCase c = random_case(rng);
    const Projection proj = project(c.p, c.h);
    const WorldPoint w = back_project(proj.pixel, c.z_w, c.h);
    CHECK(oracles::close_rel(w.x, c.p.x, 1e-9));
    CHECK(oracles::close_rel(w.y, c.p.y, 1e-9));
  }
}

TEST_CASE("back_project: degenerate determinant throws") {
  // D = -y_p + 1 for this matrix, so the pixel row y_p = 1 is singular.
  Eigen::Matrix<double, 3, 4> m = Eigen::Matrix<double, 3, 4>::Zero();
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  m(2, 1) = 1.0;
  m(2, 2) = 1.0;
  const ProjectionMatrix h(m);
  CHECK_THROWS_AS(back_project({0.3, 1.0}, 1.0, h), DegenerateBackProjection);
  CHECK_NOTHROW(back_project({0.3, 0.5}, 1.0, h));
}

TEST_CASE("projection matrix: rejects rank-deficient left block") {
  Eigen::Matrix<double, 3, 4> m = Eigen::Matrix<double, 3, 4>::Zero();
  m(0, 0) = 1.0;
  m(1, 0) = 1.0;  // rows 0 and 1 parallel
  m(2, 2) = 1.0;
  CHECK_THROWS_AS(ProjectionMatrix{m}, ConfigError);
}

TEST_CASE("scale equivariance: H and c*H give identical results") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> scale_dist(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    const RandomCase c = random_case(rng);
    const double scale = scale_dist(rng) * (i % 2 == 0 ? 1.0 : -1.0);
    const ProjectionMatrix hs(scale * c.h.matrix());
    const Projection a = project(c.p, c.h);
    const Projection b = project(c.p, hs);
    CHECK(oracles::close_rel(a.pixel.x, b.pixel.x, 1e-9));
    CHECK(oracles::close_rel(a.pixel.y, b.pixel.y, 1e-9));
    const WorldPoint wa = back_project(a.pixel, c.z_w, c.h);
    const WorldPoint wb = back_project(a.pixel, c.z_w, hs);
    CHECK(oracles::close_rel(wa.x, wb.x, 1e-9));
    CHECK(oracles::close_rel(wa.y, wb.y, 1e-9));
  }
}

TEST_CASE("jacobian: bottom row is exactly (0, 0, 1)") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    const RandomCase c = random_case(rng);
    const Projection proj = project(c.p, c.h);
    const Eigen::Matrix3d j = back_projection_jacobian(proj.pixel, c.z_w, c.h);
    CHECK(j(2, 0) == 0.0);
    CHECK(j(2, 1) == 0.0);
    CHECK(j(2, 2) == 1.0);
  }
}

TEST_CASE("jacobian: identity-H closed form") {
  const ProjectionMatrix h(identity_h());
  const double x_p = 0.4, y_p = -0.7, z_w = 2.5;
  const Eigen::Matrix3d j = back_projection_jacobian({x_p, y_p}, z_w, h);
  CHECK(j(0, 0) == doctest::Approx(z_w).epsilon(1e-12));   // dx_w/dx_p
  CHECK(j(0, 1) == doctest::Approx(0.0));                  // dx_w/dy_p
  CHECK(j(0, 2) == doctest::Approx(x_p).epsilon(1e-12));   // dx_w/dz_w
  CHECK(j(1, 1) == doctest::Approx(z_w).epsilon(1e-12));
  CHECK(j(1, 2) == doctest::Approx(y_p).epsilon(1e-12));
}

TEST_CASE("jacobian: matches central finite differences") {
  std::mt19937_64 rng(15);
  const double fd_step = 1e-5;
  for (int i = 0; i < 1000; ++i) {
    const RandomCase c = random_case(rng);
    const Projection proj = project(c.p, c.h);
    const Eigen::Matrix3d j = back_projection_jacobian(proj.pixel, c.z_w, c.h);

    auto world = [&](double xp, double yp, double zw, int axis) {
      const WorldPoint w = back_project({xp, yp}, zw, c.h);
      return axis == 0 ? w.x : w.y;
    };
    for (int row = 0; row < 2; ++row) {
      const double dxp = oracles::central_diff(
          [&](double v) { return world(v, proj.pixel.y, c.z_w, row); }, proj.pixel.x, fd_step);
      const double dyp = oracles::central_diff(
          [&](double v) { return world(proj.pixel.x, v, c.z_w, row); }, proj.pixel.y, fd_step);
      const double dzw = oracles::central_diff(
          [&](double v) { return world(proj.pixel.x, proj.pixel.y, v, row); }, c.z_w, fd_step);
      CHECK(oracles::close_rel(j(row, 0), dxp, 1e-5));
      CHECK(oracles::close_rel(j(row, 1), dyp, 1e-5));
      CHECK(oracles::close_rel(j(row, 2), dzw, 1e-5));
    }
  }
}

TEST_CASE("propagate_covariance: diagonal examples") {
  const PixelHeightNoise unit{1.0, 1.0, 1.0};
  const Eigen::Matrix3d a = propagate_covariance(Eigen::Matrix3d::Identity(), unit);
  CHECK((a - Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0.0));

  const Eigen::Matrix3d j = Eigen::Vector3d(2.0, 3.0, 1.0).asDiagonal();
  const Eigen::Matrix3d b = propagate_covariance(j, unit);
  CHECK(b(0, 0) == doctest::Approx(4.0));
  CHECK(b(1, 1) == doctest::Approx(9.0));
  CHECK(b(2, 2) == doctest::Approx(1.0));
  CHECK(b(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("propagate_covariance: symmetric PSD for random inputs") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(0.01, 2.0);
  for (int i = 0; i < 300; ++i) {
    Eigen::Matrix3d j;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) j(r, c) = u(rng);
    const PixelHeightNoise noise{pos(rng), pos(rng), pos(rng)};
    const Eigen::Matrix3d cov = propagate_covariance(j, noise);
    CHECK((cov - cov.transpose()).norm() <= 1e-12);
    const Eigen::Vector3d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov).eigenvalues();
    CHECK(eig.minCoeff() >= -1e-12);
  }
}

TEST_CASE("propagate_covariance: Monte-Carlo oracle") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 3; ++rep) {
    const RandomCase c = random_case(rng);
    const Projection proj = project(c.p, c.h);
    const PixelHeightNoise noise{0.02, 0.03, 0.01};
    const Eigen::Matrix3d j = back_projection_jacobian(proj.pixel, c.z_w, c.h);
    const Eigen::Matrix3d analytic = propagate_covariance(j, noise);

    const int n = 50000;
    Eigen::Matrix3d sum2 = Eigen::Matrix3d::Zero();
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    int kept = 0;
    for (int k = 0; k < n; ++k) {
      const double xp = proj.pixel.x + noise.sigma_xp * gauss(rng);
      const double yp = proj.pixel.y + noise.sigma_yp * gauss(rng);
      const double zw = c.z_w + noise.sigma_zw * gauss(rng);
      WorldPoint w{};
      try {
        w = back_project({xp, yp}, zw, c.h);
      } catch (const DegenerateBackProjection&) {
        continue;
      }
      const Eigen::Vector3d v = w.vec();
      sum += v;
      sum2 += v * v.transpose();
      ++kept;
    }
    const Eigen::Vector3d mean = sum / kept;
    const Eigen::Matrix3d empirical = sum2 / kept - mean * mean.transpose();
    CHECK((empirical - analytic).norm() / analytic.norm() < 0.10);
  }
}
