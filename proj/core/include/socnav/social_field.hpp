#pragma once

#include <Eigen/Core>

#include "socnav/types.hpp"

namespace socnav {

// Asymmetric personal-space field parameters. The front longitudinal variance
// is fixed at twice the lateral/rear variance.
struct PsParams {
  double sigma_xx{0.72};  // m^2, front longitudinal variance
  double sigma_yy{0.36};  // m^2, lateral/rear variance
  double k{100.0};        // 1/m, front/rear blend slope
  double weight{1.0};     // dimensionless cost scale

  static PsParams from_lateral_variance(double sigma_yy, double k = 100.0,
                                        double weight = 1.0) {
    return {2.0 * sigma_yy, sigma_yy, k, weight};
  }
  void validate() const;
};

// Position of q in the person's body frame: d = R(-theta_p) (q - p).
Eigen::Vector2d relative_position(const PersonPose& p, const Eigen::Vector2d& q);

// Smooth front/rear gate 0.5*(tanh(k*d/2) + 1), strictly increasing in d_long.
double front_blend(double d_long, double k);

// Field value in (0, 1]: blend of front and rear Gaussians, gated on the
// longitudinal body-frame coordinate.
double ps_value(const PersonPose& p, const Eigen::Vector2d& q, const PsParams& params);

struct PsQuadratic {
  double value{0.0};
  Eigen::Vector2d gradient{0.0, 0.0};   // d(ps_value)/dq at q_nominal
  Eigen::Matrix2d hessian{Eigen::Matrix2d::Zero()};  // convexified (PSD)
};

// Exact value and analytic gradient of ps_value at q_nominal, plus the
// analytic Hessian with negative eigenvalues clamped to zero so downstream
// quadratic programs stay convex.
PsQuadratic ps_quadratic(const PersonPose& p_pred, const Eigen::Vector2d& q_nominal,
                         const PsParams& params);

}  // namespace socnav
