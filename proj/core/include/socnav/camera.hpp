#pragma once

#include <array>

#include <Eigen/Core>

#include "socnav/error.hpp"

namespace socnav {

struct PixelPoint {
  double x{0.0};
  double y{0.0};
};

struct WorldPoint {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  Eigen::Vector3d vec() const { return {x, y, z}; }
};

// Per-axis input noise for back-projected joints: pixel coordinates and the
// assumed world height.
struct PixelHeightNoise {
  double sigma_xp{1.0};  // pixels
  double sigma_yp{1.0};  // pixels
  double sigma_zw{0.02};  // meters
};

// 3D Gaussian in the world frame.
struct Gaussian3 {
  WorldPoint mean;
  Eigen::Matrix3d cov{Eigen::Matrix3d::Zero()};
};

// 3x4 camera matrix mapping homogeneous world points to pixels. Intrinsics
// and extrinsics are only ever used pre-composed, so construction from
// (K, R, t) multiplies them once and discards the factors.
class ProjectionMatrix {
 public:
  explicit ProjectionMatrix(const Eigen::Matrix<double, 3, 4>& h);

  static ProjectionMatrix compose(const Eigen::Matrix3d& intrinsics,
                                  const Eigen::Matrix3d& rotation,
                                  const Eigen::Vector3d& translation);
  static ProjectionMatrix from_row_major(const std::array<double, 12>& values);

  const Eigen::Matrix<double, 3, 4>& matrix() const { return h_; }
  std::array<double, 12> row_major() const;

 private:
  Eigen::Matrix<double, 3, 4> h_;
};

struct Projection {
  PixelPoint pixel;
  double scale{0.0};  // projective scale s
};

inline constexpr double kProjectionScaleEps = 1e-9;
inline constexpr double kBackProjectionDetEps = 1e-9;

// Pinhole projection; throws DegenerateProjection when |s| <= 1e-9.
Projection project(const WorldPoint& p, const ProjectionMatrix& h);

// Recovers (x_w, y_w) from a pixel at a known world height z_w.
// Throws DegenerateBackProjection when the 2x2 system is singular.
WorldPoint back_project(const PixelPoint& pixel, double z_w,
                        const ProjectionMatrix& h);

// Analytic Jacobian of (x_w, y_w, z_w) w.r.t. (x_p, y_p, z_w). Third row is
// exactly (0, 0, 1).
Eigen::Matrix3d back_projection_jacobian(const PixelPoint& pixel, double z_w,
                                         const ProjectionMatrix& h);

// J * diag(sigma_xp^2, sigma_yp^2, sigma_zw^2) * J^T, symmetrized.
Eigen::Matrix3d propagate_covariance(const Eigen::Matrix3d& jacobian,
                                     const PixelHeightNoise& noise);

}  // namespace socnav
