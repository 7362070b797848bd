#pragma once

#include <Eigen/Core>

namespace socnav {

// Convex QP: minimize 0.5 z'Pz + q'z subject to l <= Mz <= u.
// Bounds must be finite; use large magnitudes for effectively-free rows.
struct QpProblem {
  Eigen::MatrixXd p;  // n x n, symmetric PSD
  Eigen::VectorXd q;  // n
  Eigen::MatrixXd m;  // c x n
  Eigen::VectorXd lower;  // c
  Eigen::VectorXd upper;  // c
};

enum class QpStatus { kOptimal, kMaxIterations, kInfeasible };

struct QpResult {
  Eigen::VectorXd z;  // primal solution
  Eigen::VectorXd y;  // constraint duals
  QpStatus status{QpStatus::kMaxIterations};
  int iterations{0};
  double primal_residual{0.0};
  double dual_residual{0.0};
};

struct QpSettings {
  double rho{0.1};
  double sigma{1e-6};
  double alpha{1.6};        // over-relaxation
  double eps{1e-7};         // absolute KKT tolerance
  double eps_infeasible{1e-6};
  int max_iterations{4000};
  int check_interval{25};
  bool adaptive_rho{true};
  bool polish{true};
};

// Operator-splitting (ADMM) solver with an active-set polish step.
// Deterministic: identical inputs and warm starts give identical results.
QpResult solve_qp(const QpProblem& problem,
                  const Eigen::VectorXd& warm_z = Eigen::VectorXd(),
                  const Eigen::VectorXd& warm_y = Eigen::VectorXd(),
                  const QpSettings& settings = {});

}  // namespace socnav
