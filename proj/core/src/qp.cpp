#include "socnav/qp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "socnav/error.hpp"

namespace socnav {

namespace {

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

struct Residuals {
  double primal;
  double dual;
};

Residuals kkt_residuals(const QpProblem& pr, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  Residuals r{};
  r.primal = inf_norm(pr.m * x - s);
  r.dual = inf_norm(pr.p * x + pr.q + pr.m.transpose() * y);
  return r;
}

// Equality-constrained solve on the active set detected from the duals; when
// it succeeds it lands on the exact optimum of the ADMM-identified face.
bool polish(const QpProblem& pr, QpResult& res, const QpSettings& settings) {
  const long n = pr.p.rows();
  std::vector<long> active;
  std::vector<double> bound;
  for (long i = 0; i < res.y.size(); ++i) {
    if (res.y(i) < -1e-9) {
      active.push_back(i);
      bound.push_back(pr.lower(i));
    } else if (res.y(i) > 1e-9) {
      active.push_back(i);
      bound.push_back(pr.upper(i));
    }
  }
  const long na = static_cast<long>(active.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
  kkt.topLeftCorner(n, n) = pr.p + 1e-12 * Eigen::MatrixXd::Identity(n, n);
  for (long a = 0; a < na; ++a) {
    kkt.block(n + a, 0, 1, n) = pr.m.row(active[static_cast<size_t>(a)]);
    kkt.block(0, n + a, n, 1) = pr.m.row(active[static_cast<size_t>(a)]).transpose();
    kkt(n + a, n + a) = -1e-12;
  }
  Eigen::VectorXd rhs(n + na);
  rhs.head(n) = -pr.q;
  for (long a = 0; a < na; ++a) rhs(n + a) = bound[static_cast<size_t>(a)];

  Eigen::LDLT<Eigen::MatrixXd> ldlt(kkt);
  if (ldlt.info() != Eigen::Success) return false;
  Eigen::VectorXd sol = ldlt.solve(rhs);
  // One iterative-refinement pass against the unregularized system.
  Eigen::MatrixXd kkt0 = kkt;
  kkt0.topLeftCorner(n, n) -= 1e-12 * Eigen::MatrixXd::Identity(n, n);
  for (long a = 0; a < na; ++a) kkt0(n + a, n + a) = 0.0;
  sol += ldlt.solve(rhs - kkt0 * sol);

  Eigen::VectorXd x = sol.head(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(res.y.size());
  for (long a = 0; a < na; ++a) y(active[static_cast<size_t>(a)]) = sol(n + a);

  // Reject a polish that leaves the feasible box or worsens the KKT error.
  Eigen::VectorXd s = pr.m * x;
  for (long i = 0; i < s.size(); ++i) {
    if (s(i) < pr.lower(i) - settings.eps || s(i) > pr.upper(i) + settings.eps) return false;
  }
  const Residuals r = kkt_residuals(pr, x, s.cwiseMax(pr.lower).cwiseMin(pr.upper), y);
  if (std::max(r.primal, r.dual) <=
      std::max(res.primal_residual, res.dual_residual)) {
    res.z = x;
    res.y = y;
    res.primal_residual = r.primal;
    res.dual_residual = r.dual;
    return true;
  }
  return false;
}

}  // namespace

QpResult solve_qp(const QpProblem& pr, const Eigen::VectorXd& warm_z,
                  const Eigen::VectorXd& warm_y, const QpSettings& settings) {
  const long n = pr.p.rows();
  const long c = pr.m.rows();
  if (pr.p.cols() != n || pr.q.size() != n || (c > 0 && pr.m.cols() != n) ||
      pr.lower.size() != c || pr.upper.size() != c) {
    throw ConfigError("inconsistent QP dimensions");
  }

  QpResult res;
  if (c == 0) {
    res.z = pr.p.ldlt().solve(-pr.q);
    res.y = Eigen::VectorXd();
    res.dual_residual = inf_norm(pr.p * res.z + pr.q);
    res.status = res.dual_residual < settings.eps ? QpStatus::kOptimal
                                                  : QpStatus::kMaxIterations;
    return res;
  }

  Eigen::VectorXd x = warm_z.size() == n ? warm_z : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = warm_y.size() == c ? warm_y : Eigen::VectorXd::Zero(c);
  Eigen::VectorXd s = (pr.m * x).cwiseMax(pr.lower).cwiseMin(pr.upper);

  double rho = settings.rho;
  Eigen::LLT<Eigen::MatrixXd> llt;
  auto factorize = [&]() {
    Eigen::MatrixXd kkt = pr.p + settings.sigma * Eigen::MatrixXd::Identity(n, n) +
                          rho * pr.m.transpose() * pr.m;
    llt.compute(kkt);
  };
  factorize();
  if (llt.info() != Eigen::Success) throw ConfigError("QP Hessian is not PSD");

  Eigen::VectorXd y_prev_check = y;
  int iter = 0;
  for (; iter < settings.max_iterations; ++iter) {
    const Eigen::VectorXd rhs =
        settings.sigma * x - pr.q + pr.m.transpose() * (rho * s - y);
    const Eigen::VectorXd x_tilde = llt.solve(rhs);
    const Eigen::VectorXd s_tilde = pr.m * x_tilde;

    const Eigen::VectorXd x_next = settings.alpha * x_tilde + (1.0 - settings.alpha) * x;
    const Eigen::VectorXd s_relaxed =
        settings.alpha * s_tilde + (1.0 - settings.alpha) * s;
    const Eigen::VectorXd s_next =
        (s_relaxed + y / rho).cwiseMax(pr.lower).cwiseMin(pr.upper);
    const Eigen::VectorXd y_next = y + rho * (s_relaxed - s_next);

    x = x_next;
    s = s_next;
    y = y_next;

    if ((iter + 1) % settings.check_interval == 0) {
      const Residuals r = kkt_residuals(pr, x, s, y);
      if (r.primal < settings.eps && r.dual < settings.eps) {
        res.status = QpStatus::kOptimal;
        res.primal_residual = r.primal;
        res.dual_residual = r.dual;
        ++iter;
        break;
      }

      // Primal infeasibility certificate from the dual direction.
      const Eigen::VectorXd dy = y - y_prev_check;
      const double dy_norm = inf_norm(dy);
      if (dy_norm > 1e-12) {
        const double support = pr.upper.dot(dy.cwiseMax(0.0)) + pr.lower.dot(dy.cwiseMin(0.0));
        if (inf_norm(pr.m.transpose() * dy) <= settings.eps_infeasible * dy_norm &&
            support <= -settings.eps_infeasible * dy_norm) {
          res.status = QpStatus::kInfeasible;
          res.z = x;
          res.y = y;
          res.primal_residual = r.primal;
          res.dual_residual = r.dual;
          res.iterations = iter + 1;
          return res;
        }
      }
      y_prev_check = y;

      if (settings.adaptive_rho) {
        const double p_rel = r.primal / std::max({inf_norm(pr.m * x), inf_norm(s), 1e-12});
        const double d_rel =
            r.dual / std::max({inf_norm(pr.p * x), inf_norm(pr.q),
                               inf_norm(pr.m.transpose() * y), 1e-12});
        const double scale = std::sqrt(p_rel / std::max(d_rel, 1e-16));
        if (std::isfinite(scale) && (scale > 5.0 || scale < 0.2)) {
          rho = std::clamp(rho * scale, 1e-6, 1e6);
          factorize();
        }
      }
    }
  }

  if (res.status != QpStatus::kOptimal) {
    const Residuals r = kkt_residuals(pr, x, s, y);
    res.primal_residual = r.primal;
    res.dual_residual = r.dual;
    if (r.primal < settings.eps && r.dual < settings.eps) res.status = QpStatus::kOptimal;
  }
  res.z = x;
  res.y = y;
  res.iterations = iter;

  if (settings.polish && res.status == QpStatus::kOptimal) {
    polish(pr, res, settings);
  }
  return res;
}

}  // namespace socnav
