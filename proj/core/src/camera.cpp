#include "socnav/camera.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace socnav {

namespace {

// Intermediate 2x2 system for back-projection at fixed height:
//   a11 x_w + a12 y_w = b1
//   a21 x_w + a22 y_w = b2
struct BackProjectionSystem {
  double a11, a12, a21, a22;
  double b1, b2;
  double det;
};

BackProjectionSystem back_projection_system(const PixelPoint& pixel, double z_w,
                                            const Eigen::Matrix<double, 3, 4>& h) {
  BackProjectionSystem s{};
  s.a11 = h(2, 0) * pixel.x - h(0, 0);
  s.a12 = h(2, 1) * pixel.x - h(0, 1);
  s.a21 = h(2, 0) * pixel.y - h(1, 0);
  s.a22 = h(2, 1) * pixel.y - h(1, 1);
  s.b1 = h(0, 2) * z_w - h(2, 2) * pixel.x * z_w - h(2, 3) * pixel.x + h(0, 3);
  s.b2 = h(1, 2) * z_w - h(2, 2) * pixel.y * z_w - h(2, 3) * pixel.y + h(1, 3);
  s.det = s.a11 * s.a22 - s.a12 * s.a21;
  return s;
}

}  // namespace

ProjectionMatrix::ProjectionMatrix(const Eigen::Matrix<double, 3, 4>& h) : h_(h) {
  if (!h.allFinite()) {
    throw ConfigError("projection matrix has non-finite entries");
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(h.leftCols<3>());
  if (lu.rank() < 3) {
    throw ConfigError("projection matrix left 3x3 block is rank deficient");
  }
}

ProjectionMatrix ProjectionMatrix::compose(const Eigen::Matrix3d& intrinsics,
                                           const Eigen::Matrix3d& rotation,
                                           const Eigen::Vector3d& translation) {
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = rotation;
  rt.col(3) = translation;
  return ProjectionMatrix(intrinsics * rt);
}

ProjectionMatrix ProjectionMatrix::from_row_major(const std::array<double, 12>& values) {
  Eigen::Matrix<double, 3, 4> h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) h(r, c) = values[static_cast<size_t>(4 * r + c)];
  return ProjectionMatrix(h);
}

std::array<double, 12> ProjectionMatrix::row_major() const {
  std::array<double, 12> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) out[static_cast<size_t>(4 * r + c)] = h_(r, c);
  return out;
}

Projection project(const WorldPoint& p, const ProjectionMatrix& h) {
  const auto& m = h.matrix();
  const Eigen::Vector4d hw(p.x, p.y, p.z, 1.0);
  const Eigen::Vector3d uvw = m * hw;
  const double s = uvw.z();
  if (std::abs(s) <= kProjectionScaleEps) {
    throw DegenerateProjection("point lies on the camera plane");
  }
  return {{uvw.x() / s, uvw.y() / s}, s};
}

WorldPoint back_project(const PixelPoint& pixel, double z_w, const ProjectionMatrix& h) {
  const auto s = back_projection_system(pixel, z_w, h.matrix());
  if (std::abs(s.det) <= kBackProjectionDetEps) {
    throw DegenerateBackProjection("viewing ray parallel to the z = z_w plane");
  }
  const double x_w = (s.b1 * s.a22 - s.b2 * s.a12) / s.det;
  const double y_w = (s.b2 * s.a11 - s.b1 * s.a21) / s.det;
  return {x_w, y_w, z_w};
}

Eigen::Matrix3d back_projection_jacobian(const PixelPoint& pixel, double z_w,
                                         const ProjectionMatrix& h) {
  const auto& m = h.matrix();
  const auto s = back_projection_system(pixel, z_w, m);
  if (std::abs(s.det) <= kBackProjectionDetEps) {
    throw DegenerateBackProjection("viewing ray parallel to the z = z_w plane");
  }

  const double nx = s.b1 * s.a22 - s.b2 * s.a12;
  const double ny = s.b2 * s.a11 - s.b1 * s.a21;
  const double d = s.det;

  // Partials of the intermediate quantities. Only a11,a12 depend on x_p, only
  // a21,a22 on y_p; b1,b2 are affine in all three inputs.
  const double db1_dxp = -m(2, 2) * z_w - m(2, 3);
  const double db2_dyp = -m(2, 2) * z_w - m(2, 3);
  const double db1_dzw = m(0, 2) - m(2, 2) * pixel.x;
  const double db2_dzw = m(1, 2) - m(2, 2) * pixel.y;

  const double dd_dxp = m(2, 0) * s.a22 - m(2, 1) * s.a21;
  const double dd_dyp = s.a11 * m(2, 1) - s.a12 * m(2, 0);

  const double dnx_dxp = db1_dxp * s.a22 - s.b2 * m(2, 1);
  const double dnx_dyp = s.b1 * m(2, 1) - db2_dyp * s.a12;
  const double dnx_dzw = db1_dzw * s.a22 - db2_dzw * s.a12;

  const double dny_dxp = s.b2 * m(2, 0) - db1_dxp * s.a21;
  const double dny_dyp = db2_dyp * s.a11 - s.b1 * m(2, 0);
  const double dny_dzw = db2_dzw * s.a11 - db1_dzw * s.a21;

  Eigen::Matrix3d j;
  // Quotient rule on N/D; D does not depend on z_w.
  j(0, 0) = (dnx_dxp * d - nx * dd_dxp) / (d * d);
  j(0, 1) = (dnx_dyp * d - nx * dd_dyp) / (d * d);
  j(0, 2) = dnx_dzw / d;
  j(1, 0) = (dny_dxp * d - ny * dd_dxp) / (d * d);
  j(1, 1) = (dny_dyp * d - ny * dd_dyp) / (d * d);
  j(1, 2) = dny_dzw / d;
  j(2, 0) = 0.0;
  j(2, 1) = 0.0;
  j(2, 2) = 1.0;
  return j;
}

Eigen::Matrix3d propagate_covariance(const Eigen::Matrix3d& jacobian,
                                     const PixelHeightNoise& noise) {
  const Eigen::Vector3d var(noise.sigma_xp * noise.sigma_xp,
                            noise.sigma_yp * noise.sigma_yp,
                            noise.sigma_zw * noise.sigma_zw);
  const Eigen::Matrix3d cov = jacobian * var.asDiagonal() * jacobian.transpose();
  return 0.5 * (cov + cov.transpose());
}

}  // namespace socnav
