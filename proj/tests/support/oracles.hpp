#pragma once

// Test-only oracles, kept independent of the implementation paths they check.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "socnav/camera.hpp"

namespace oracles {

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Plain-loop 3x4 * 4x1 multiply followed by dehomogenization.
inline std::array<double, 3> project_by_hand(const std::array<double, 12>& h,
                                             double x, double y, double z) {
  double uvw[3];
  const double p[4] = {x, y, z, 1.0};
  for (int r = 0; r < 3; ++r) {
    uvw[r] = 0.0;
    for (int c = 0; c < 4; ++c) uvw[r] += h[static_cast<size_t>(4 * r + c)] * p[c];
  }
  return {uvw[0] / uvw[2], uvw[1] / uvw[2], uvw[2]};
}

// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double step) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

// Projected gradient descent for box-constrained QPs (M = I):
//   min 0.5 z'Pz + q'z  s.t.  l <= z <= u
// Run to tight tolerance as an independent reference.
inline Eigen::VectorXd projected_gradient_qp(const Eigen::MatrixXd& p,
                                             const Eigen::VectorXd& q,
                                             const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& upper) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  const double lipschitz = eig.eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(lipschitz, 1e-12);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(p.rows()).cwiseMax(lower).cwiseMin(upper);
  for (int it = 0; it < 400000; ++it) {
    const Eigen::VectorXd next =
        (z - step * (p * z + q)).cwiseMax(lower).cwiseMin(upper);
    const double delta = (next - z).lpNorm<Eigen::Infinity>();
    z = next;
    if (delta < 1e-13) break;
  }
  return z;
}

// Golden-section minimizer for smooth 1-D objectives.
inline double golden_minimize(const std::function<double(double)>& f, double lo,
                              double hi, int iterations = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Random well-conditioned projection matrix: rejects near-singular left 3x3
// blocks so tests stay away from the degeneracy thresholds.
inline socnav::ProjectionMatrix random_projection(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    Eigen::Matrix<double, 3, 4> h;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) h(r, c) = u(rng);
    if (std::abs(h.leftCols<3>().determinant()) < 0.05) continue;
    return socnav::ProjectionMatrix(h);
  }
}

}  // namespace oracles
