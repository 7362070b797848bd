#include "socnav/vehicle.hpp"

#include <cmath>
#include <numbers>

#include "socnav/error.hpp"

namespace socnav {

namespace {

constexpr double kCosBetaEps = 1e-9;

// Command-derived quantities, constant over one integration step, with their
// derivatives w.r.t. u = (v_f, v_r, delta_f, delta_r).
struct Command {
  double beta{0.0};
  double v_c{0.0};
  double psi_dot{0.0};
  Eigen::Vector4d dbeta{Eigen::Vector4d::Zero()};
  Eigen::Vector4d dv_c{Eigen::Vector4d::Zero()};
  Eigen::Vector4d dpsi_dot{Eigen::Vector4d::Zero()};
};

Command make_command(const ControlInput& u, const RobotGeometry& geom) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (std::abs(u.delta_f) >= half_pi || std::abs(u.delta_r) >= half_pi) {
    throw SteeringOutOfRange("|delta| must be below pi/2");
  }
  const double length = geom.l_f + geom.l_r;
  const double tan_f = std::tan(u.delta_f);
  const double tan_r = std::tan(u.delta_r);
  const double arg = (geom.l_r * tan_f + geom.l_f * tan_r) / length;

  Command c;
  c.beta = std::atan(arg);
  const double cos_beta = std::cos(c.beta);
  if (std::abs(cos_beta) <= kCosBetaEps) {
    throw DegenerateSideslip("cos(beta) vanished");
  }

  const double cos_f = std::cos(u.delta_f), sin_f = std::sin(u.delta_f);
  const double cos_r = std::cos(u.delta_r), sin_r = std::sin(u.delta_r);
  c.v_c = (u.v_f * cos_f + u.v_r * cos_r) / (2.0 * cos_beta);
  c.psi_dot = (u.v_f * sin_f - u.v_r * sin_r) / length;

  const double datan = 1.0 / (1.0 + arg * arg);
  c.dbeta(2) = datan * geom.l_r / (cos_f * cos_f * length);
  c.dbeta(3) = datan * geom.l_f / (cos_r * cos_r * length);

  const double tan_beta = std::tan(c.beta);
  c.dv_c(0) = cos_f / (2.0 * cos_beta);
  c.dv_c(1) = cos_r / (2.0 * cos_beta);
  c.dv_c(2) = -u.v_f * sin_f / (2.0 * cos_beta) + c.v_c * tan_beta * c.dbeta(2);
  c.dv_c(3) = -u.v_r * sin_r / (2.0 * cos_beta) + c.v_c * tan_beta * c.dbeta(3);

  c.dpsi_dot(0) = sin_f / length;
  c.dpsi_dot(1) = -sin_r / length;
  c.dpsi_dot(2) = u.v_f * cos_f / length;
  c.dpsi_dot(3) = -u.v_r * cos_r / length;
  return c;
}

Eigen::Vector3d dynamics(const Eigen::Vector3d& s, const Command& c) {
  return {c.v_c * std::cos(s(2) + c.beta), c.v_c * std::sin(s(2) + c.beta), c.psi_dot};
}

Eigen::Matrix3d dynamics_dstate(const Eigen::Vector3d& s, const Command& c) {
  Eigen::Matrix3d f = Eigen::Matrix3d::Zero();
  f(0, 2) = -c.v_c * std::sin(s(2) + c.beta);
  f(1, 2) = c.v_c * std::cos(s(2) + c.beta);
  return f;
}

Eigen::Matrix<double, 3, 4> dynamics_dinput(const Eigen::Vector3d& s, const Command& c) {
  const double cs = std::cos(s(2) + c.beta);
  const double sn = std::sin(s(2) + c.beta);
  Eigen::Matrix<double, 3, 4> f;
  for (int k = 0; k < 4; ++k) {
    f(0, k) = c.dv_c(k) * cs - c.v_c * sn * c.dbeta(k);
    f(1, k) = c.dv_c(k) * sn + c.v_c * cs * c.dbeta(k);
    f(2, k) = c.dpsi_dot(k);
  }
  return f;
}

}  // namespace

double sideslip(double delta_f, double delta_r, const RobotGeometry& geom) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (std::abs(delta_f) >= half_pi || std::abs(delta_r) >= half_pi) {
    throw SteeringOutOfRange("|delta| must be below pi/2");
  }
  const double length = geom.l_f + geom.l_r;
  return std::atan((geom.l_r * std::tan(delta_f) + geom.l_f * std::tan(delta_r)) / length);
}

RobotState step(const RobotState& state, const ControlInput& u,
                const RobotGeometry& geom, double dt) {
  const Command c = make_command(u, geom);
  const Eigen::Vector3d s0(state.x, state.y, state.psi);

  const Eigen::Vector3d k1 = dynamics(s0, c);
  const Eigen::Vector3d k2 = dynamics(s0 + 0.5 * dt * k1, c);
  const Eigen::Vector3d k3 = dynamics(s0 + 0.5 * dt * k2, c);
  const Eigen::Vector3d k4 = dynamics(s0 + dt * k3, c);
  const Eigen::Vector3d s1 = s0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return {s1(0), s1(1), s1(2)};
}

LinearizedModel linearize(const RobotState& state0, const ControlInput& u0,
                          const RobotGeometry& geom, double dt) {
  const Command c = make_command(u0, geom);
  const Eigen::Vector3d s0(state0.x, state0.y, state0.psi);

  const Eigen::Vector3d k1 = dynamics(s0, c);
  const Eigen::Vector3d s2 = s0 + 0.5 * dt * k1;
  const Eigen::Vector3d k2 = dynamics(s2, c);
  const Eigen::Vector3d s3 = s0 + 0.5 * dt * k2;
  const Eigen::Vector3d k3 = dynamics(s3, c);
  const Eigen::Vector3d s4 = s0 + dt * k3;
  const Eigen::Vector3d k4 = dynamics(s4, c);

  // Chain rule through the RK4 stages.
  const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d dk1 = dynamics_dstate(s0, c);
  const Eigen::Matrix3d dk2 = dynamics_dstate(s2, c) * (i3 + 0.5 * dt * dk1);
  const Eigen::Matrix3d dk3 = dynamics_dstate(s3, c) * (i3 + 0.5 * dt * dk2);
  const Eigen::Matrix3d dk4 = dynamics_dstate(s4, c) * (i3 + dt * dk3);

  const Eigen::Matrix<double, 3, 4> bu1 = dynamics_dinput(s0, c);
  const Eigen::Matrix<double, 3, 4> bu2 =
      dynamics_dinput(s2, c) + dynamics_dstate(s2, c) * (0.5 * dt * bu1);
  const Eigen::Matrix<double, 3, 4> bu3 =
      dynamics_dinput(s3, c) + dynamics_dstate(s3, c) * (0.5 * dt * bu2);
  const Eigen::Matrix<double, 3, 4> bu4 =
      dynamics_dinput(s4, c) + dynamics_dstate(s4, c) * (dt * bu3);

  LinearizedModel m;
  m.a = i3 + (dt / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4);
  m.b = (dt / 6.0) * (bu1 + 2.0 * bu2 + 2.0 * bu3 + bu4);
  m.c = i3;
  const Eigen::Vector3d s1 = s0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  m.d = s1 - m.a * s0 - m.b * u0.vec();
  return m;
}

NonslipTerms nonslip_terms(const ControlInput& u0) {
  NonslipTerms t;
  const double s = u0.v_f * std::cos(u0.delta_f) - u0.v_r * std::cos(u0.delta_r);
  t.e << std::cos(u0.delta_f), -std::cos(u0.delta_r), -u0.v_f * std::sin(u0.delta_f),
      u0.v_r * std::sin(u0.delta_r);
  t.g0 = s - t.e.dot(u0.vec());
  return t;
}

}  // namespace socnav
