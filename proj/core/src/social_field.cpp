#include "socnav/social_field.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "socnav/error.hpp"

namespace socnav {

namespace {

Eigen::Matrix2d body_rotation(double theta) {
  Eigen::Matrix2d m;
  m << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return m;
}

struct FieldTerms {
  double gate;        // gamma
  double gate_d;      // d(gamma)/d(d1)
  double gate_dd;     // d2(gamma)/d(d1)^2
  double front;       // front Gaussian
  double rear;        // rear Gaussian
  Eigen::Vector2d front_grad, rear_grad;
  Eigen::Matrix2d front_hess, rear_hess;
};

FieldTerms evaluate_terms(const Eigen::Vector2d& d, const PsParams& p) {
  FieldTerms t{};
  const double arg = p.k * d.x() / 2.0;
  const double th = std::tanh(arg);
  const double sech = 1.0 / std::cosh(arg);  // cosh overflow maps to sech = 0
  const double sech2 = sech * sech;
  t.gate = 0.5 * (th + 1.0);
  t.gate_d = (p.k / 4.0) * sech2;
  t.gate_dd = -(p.k * p.k / 4.0) * sech2 * th;

  const Eigen::Vector2d inv_front(1.0 / p.sigma_xx, 1.0 / p.sigma_yy);
  const Eigen::Vector2d inv_rear(1.0 / p.sigma_yy, 1.0 / p.sigma_yy);
  auto gaussian = [&](const Eigen::Vector2d& inv, double& value, Eigen::Vector2d& grad,
                      Eigen::Matrix2d& hess) {
    const Eigen::Vector2d w = inv.cwiseProduct(d);  // Sigma^-1 d
    value = std::exp(-0.5 * d.dot(w));
    grad = -value * w;
    hess = value * (w * w.transpose() - Eigen::Matrix2d(inv.asDiagonal()));
  };
  gaussian(inv_front, t.front, t.front_grad, t.front_hess);
  gaussian(inv_rear, t.rear, t.rear_grad, t.rear_hess);
  return t;
}

}  // namespace

void PsParams::validate() const {
  if (!(sigma_yy > 0.0)) throw ConfigError("sigma_yy must be positive");
  if (std::abs(sigma_xx - 2.0 * sigma_yy) > 1e-12) {
    throw ConfigError("sigma_xx must equal 2*sigma_yy");
  }
  if (!(k > 0.0)) throw ConfigError("k must be positive");
  if (!(weight >= 0.0)) throw ConfigError("weight must be non-negative");
}

Eigen::Vector2d relative_position(const PersonPose& p, const Eigen::Vector2d& q) {
  return body_rotation(p.heading) * (q - Eigen::Vector2d(p.x, p.y));
}

double front_blend(double d_long, double k) {
  return 0.5 * (std::tanh(k * d_long / 2.0) + 1.0);
}

double ps_value(const PersonPose& p, const Eigen::Vector2d& q, const PsParams& params) {
  const Eigen::Vector2d d = relative_position(p, q);
  const FieldTerms t = evaluate_terms(d, params);
  return t.gate * t.front + (1.0 - t.gate) * t.rear;
}

PsQuadratic ps_quadratic(const PersonPose& p_pred, const Eigen::Vector2d& q_nominal,
                         const PsParams& params) {
  const Eigen::Matrix2d m = body_rotation(p_pred.heading);  // dd/dq
  const Eigen::Vector2d d = m * (q_nominal - Eigen::Vector2d(p_pred.x, p_pred.y));
  const FieldTerms t = evaluate_terms(d, params);

  PsQuadratic out;
  out.value = t.gate * t.front + (1.0 - t.gate) * t.rear;

  const Eigen::Vector2d e1(1.0, 0.0);
  const Eigen::Vector2d grad_d = t.gate_d * (t.front - t.rear) * e1 +
                                 t.gate * t.front_grad + (1.0 - t.gate) * t.rear_grad;
  const Eigen::Vector2d dg = t.front_grad - t.rear_grad;
  const Eigen::Matrix2d hess_d =
      t.gate_dd * (t.front - t.rear) * (e1 * e1.transpose()) +
      t.gate_d * (e1 * dg.transpose() + dg * e1.transpose()) +
      t.gate * t.front_hess + (1.0 - t.gate) * t.rear_hess;

  out.gradient = m.transpose() * grad_d;
  Eigen::Matrix2d hess_q = m.transpose() * hess_d * m;
  hess_q = 0.5 * (hess_q + hess_q.transpose()).eval();

  // Clamp negative curvature to keep the quadratic model convex.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(hess_q);
  const Eigen::Vector2d clamped = eig.eigenvalues().cwiseMax(0.0);
  out.hessian = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

}  // namespace socnav
