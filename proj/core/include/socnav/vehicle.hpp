#pragma once

#include <Eigen/Core>

#include "socnav/types.hpp"

namespace socnav {

struct RobotState {
  double x{0.0};    // m, ground-fixed frame
  double y{0.0};    // m
  double psi{0.0};  // rad, yaw (not wrapped; normalize for comparisons)

  PlanarPose pose() const { return {x, y, psi}; }
};

// Front/rear wheel speeds and steering angles.
struct ControlInput {
  double v_f{0.0};      // m/s
  double v_r{0.0};      // m/s
  double delta_f{0.0};  // rad, |delta| <= pi/2
  double delta_r{0.0};  // rad

  Eigen::Vector4d vec() const { return {v_f, v_r, delta_f, delta_r}; }
  static ControlInput from_vec(const Eigen::Vector4d& u) {
    return {u(0), u(1), u(2), u(3)};
  }
};

struct RobotGeometry {
  double l_f{1.2};        // m, C.G. to front wheel
  double l_r{1.2};        // m, C.G. to rear wheel
  double half_width{0.55};  // m, footprint half width (clearance only)
};

// Discrete-time affine model eta(k+1) = A x(k) + B u(k) + d, C = I.
struct LinearizedModel {
  Eigen::Matrix3d a{Eigen::Matrix3d::Identity()};
  Eigen::Matrix<double, 3, 4> b{Eigen::Matrix<double, 3, 4>::Zero()};
  Eigen::Matrix3d c{Eigen::Matrix3d::Identity()};
  Eigen::Vector3d d{Eigen::Vector3d::Zero()};
};

// C.G. side-slip angle beta = atan((l_r tan(d_f) + l_f tan(d_r)) / (l_f + l_r)).
double sideslip(double delta_f, double delta_r, const RobotGeometry& geom);

// RK4 integration of the omnidirectional kinematics over dt with the command
// held constant (beta, v_c, psi_dot computed once from u).
RobotState step(const RobotState& state, const ControlInput& u,
                const RobotGeometry& geom, double dt);

// Analytic Jacobians of the RK4 step map; the affine model is exact at the
// nominal point by construction of d.
LinearizedModel linearize(const RobotState& state0, const ControlInput& u0,
                          const RobotGeometry& geom, double dt);

// Linearization of the signed wheel-speed difference s(u) = v_f cos(d_f) -
// v_r cos(d_r) about u0: s(u) ~ E u + g0. The planner bounds |E u + g0| to
// keep the non-slip assumption valid.
struct NonslipTerms {
  Eigen::RowVector4d e{Eigen::RowVector4d::Zero()};
  double g0{0.0};
};
NonslipTerms nonslip_terms(const ControlInput& u0);

}  // namespace socnav
