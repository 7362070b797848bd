#include "socnav/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "socnav/angles.hpp"
#include "socnav/error.hpp"

namespace socnav {

namespace {

// Keeps commanded steering strictly inside the tan() domain.
constexpr double kSteeringMargin = 1e-6;

// Personal-space terms are dropped beyond this Mahalanobis distance; the
// field is below 2e-8 there.
constexpr double kPsCutoffMahalanobis2 = 36.0;

constexpr double kNonslipBound = 0.1;

struct ArcPath {
  const std::vector<PlanarPose>* poses;
  std::vector<double> cumulative;

  explicit ArcPath(const std::vector<PlanarPose>& p) : poses(&p) {
    cumulative.resize(p.size(), 0.0);
    for (size_t i = 1; i < p.size(); ++i) {
      cumulative[i] =
          cumulative[i - 1] + (p[i].position() - p[i - 1].position()).norm();
    }
  }

  double total() const { return cumulative.back(); }

  PlanarPose at(double s) const {
    const auto& p = *poses;
    if (p.size() == 1 || s <= 0.0) return p.front();
    if (s >= total()) return p.back();
    size_t i = 1;
    while (cumulative[i] < s) ++i;
    const double seg = cumulative[i] - cumulative[i - 1];
    const double t = seg > 0.0 ? (s - cumulative[i - 1]) / seg : 0.0;
    PlanarPose out;
    out.x = p[i - 1].x + t * (p[i].x - p[i - 1].x);
    out.y = p[i - 1].y + t * (p[i].y - p[i - 1].y);
    out.heading =
        wrap_angle(p[i - 1].heading + t * angle_diff(p[i].heading, p[i - 1].heading));
    return out;
  }

  double project(const Eigen::Vector2d& pos) const {
    const auto& p = *poses;
    if (p.size() == 1) return 0.0;
    double best_d2 = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (size_t i = 1; i < p.size(); ++i) {
      const Eigen::Vector2d a = p[i - 1].position();
      const Eigen::Vector2d b = p[i].position();
      const Eigen::Vector2d ab = b - a;
      const double len2 = ab.squaredNorm();
      const double t =
          len2 > 0.0 ? std::clamp((pos - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const double d2 = (pos - a - t * ab).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best_s = cumulative[i - 1] + t * std::sqrt(len2);
      }
    }
    return best_s;
  }
};

double quadratic_cost(const Eigen::MatrixXd& p, const Eigen::VectorXd& q, double c,
                      const Eigen::VectorXd& z) {
  return 0.5 * z.dot(p * z) + q.dot(z) + c;
}

}  // namespace

MpcParams::MpcParams() {
  u_max << 0.7, 0.7, std::numbers::pi / 2.0, std::numbers::pi / 2.0;
  u_min = -u_max;
  du_max << 1.0, 1.0, std::numbers::pi / 24.0, std::numbers::pi / 24.0;
  du_min = -du_max;
}

void MpcParams::validate() const {
  if (!(np >= nc && nc >= 1)) throw ConfigError("require Np >= Nc >= 1");
  if (!(ts > 0.0)) throw ConfigError("Ts must be positive");
  if ((u_max - u_min).minCoeff() < 0.0 || (du_max - du_min).minCoeff() < 0.0) {
    throw ConfigError("control bounds must be ordered");
  }
  if (!(ps_weight >= 0.0)) throw ConfigError("ps_weight must be non-negative");
}

std::vector<PlanarPose> reference_window(const Reference& ref, const RobotState& state,
                                         const MpcParams& params) {
  if (ref.path.empty()) throw ConfigError("reference path is empty");
  const ArcPath path(ref.path);
  const double s0 = path.project({state.x, state.y});
  const double step = 0.5 * (ref.v_f_ref + ref.v_r_ref) * params.ts;
  std::vector<PlanarPose> window;
  window.reserve(static_cast<size_t>(params.np));
  for (int k = 1; k <= params.np; ++k) window.push_back(path.at(s0 + k * step));
  return window;
}

QpBuild build_qp(const RobotState& state, const ControlInput& u_prev,
                 const std::vector<PlanarPose>& window,
                 const std::vector<HumanPrediction>& humans, const MpcParams& params,
                 const RobotGeometry& geom, const PsParams& ps,
                 const Eigen::Vector2d& v_ref) {
  params.validate();
  ps.validate();
  if (window.empty()) throw ConfigError("reference window is empty");
  const int np = params.np;
  const int nc = params.nc;
  const int n = 4 * nc;

  const LinearizedModel lin = linearize(state, u_prev, geom, params.ts);

  // Nominal trajectory: the affine model rolled out under constant u_prev.
  std::vector<Eigen::Vector3d> nominal(static_cast<size_t>(np) + 1);
  nominal[0] = Eigen::Vector3d(state.x, state.y, state.psi);
  for (int i = 0; i < np; ++i) {
    nominal[static_cast<size_t>(i) + 1] =
        lin.a * nominal[static_cast<size_t>(i)] + lin.b * u_prev.vec() + lin.d;
  }

  // Response of state i+1 to Delta u_m is S_{i-m} with S_k = sum_{j<=k} A^j B.
  std::vector<Eigen::Matrix<double, 3, 4>> s_pow(static_cast<size_t>(np));
  s_pow[0] = lin.b;
  Eigen::Matrix3d a_pow = lin.a;
  for (int k = 1; k < np; ++k) {
    s_pow[static_cast<size_t>(k)] = s_pow[static_cast<size_t>(k) - 1] + a_pow * lin.b;
    a_pow = lin.a * a_pow;
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3 * np, n);
  for (int i = 0; i < np; ++i) {
    for (int m = 0; m <= std::min(i, nc - 1); ++m) {
      g.block<3, 4>(3 * i, 4 * m) = s_pow[static_cast<size_t>(i - m)];
    }
  }

  QpBuild build;
  build.p1 = Eigen::MatrixXd::Zero(n, n);
  build.q1 = Eigen::VectorXd::Zero(n);

  // J2: tracking error over the prediction horizon; the reference heading is
  // re-wrapped against the nominal trajectory so errors never span a 2*pi
  // jump.
  Eigen::VectorXd track_err0(3 * np);
  for (int i = 0; i < np; ++i) {
    const size_t wi = std::min<size_t>(static_cast<size_t>(i), window.size() - 1);
    const Eigen::Vector3d& nom = nominal[static_cast<size_t>(i) + 1];
    track_err0(3 * i + 0) = nom(0) - window[wi].x;
    track_err0(3 * i + 1) = nom(1) - window[wi].y;
    track_err0(3 * i + 2) = -angle_diff(window[wi].heading, nom(2));
  }
  Eigen::MatrixXd qbar_g(3 * np, n);  // Qbar * G, assembled blockwise
  for (int i = 0; i < np; ++i) {
    qbar_g.middleRows<3>(3 * i) = params.q_track * g.middleRows<3>(3 * i);
  }
  build.p2 = 2.0 * g.transpose() * qbar_g;
  Eigen::VectorXd qbar_err(3 * np);
  for (int i = 0; i < np; ++i) {
    qbar_err.segment<3>(3 * i) = params.q_track * track_err0.segment<3>(3 * i);
  }
  build.q2 = 2.0 * g.transpose() * qbar_err;
  build.c2 = track_err0.dot(qbar_err);

  // J3: steering magnitude and wheel-speed deviation over the control
  // horizon. u_j = u_prev + (L z)_j with L the block cumulative sum.
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < nc; ++j) {
    for (int m = 0; m <= j; ++m) {
      l.block<4, 4>(4 * j, 4 * m) = Eigen::Matrix4d::Identity();
    }
  }
  Eigen::Matrix4d w = Eigen::Matrix4d::Zero();
  w.topLeftCorner<2, 2>() = params.t_vel;
  w.bottomRightCorner<2, 2>() = params.r_steer;
  const Eigen::Vector4d u_target(v_ref.x(), v_ref.y(), 0.0, 0.0);
  const Eigen::Vector4d err0 = u_prev.vec() - u_target;
  Eigen::MatrixXd wbar_l(n, n);
  for (int j = 0; j < nc; ++j) wbar_l.middleRows<4>(4 * j) = w * l.middleRows<4>(4 * j);
  build.p3 = 2.0 * l.transpose() * wbar_l;
  Eigen::VectorXd werr_stack(n);
  for (int j = 0; j < nc; ++j) werr_stack.segment<4>(4 * j) = w * err0;
  build.q3 = 2.0 * l.transpose() * werr_stack;
  build.c3 = nc * err0.dot(w * err0);

  // J1: convexified quadratic personal-space terms at three sample points on
  // the robot's longitudinal axis, evaluated against each human's predicted
  // pose at the matching step.
  const double ps_scale = params.ps_weight * ps.weight;
  if (ps_scale > 0.0 && !humans.empty()) {
    const std::array<double, 3> offsets = {0.0, geom.l_f / 2.0, -geom.l_r / 2.0};
    for (const HumanPrediction& human : humans) {
      if (human.poses.empty()) continue;
      for (int i = 1; i <= np; ++i) {
        const size_t hi = std::min<size_t>(static_cast<size_t>(i) - 1, human.poses.size() - 1);
        const PersonPose& person = human.poses[hi];
        const Eigen::Vector3d& nom = nominal[static_cast<size_t>(i)];
        const double c = std::cos(nom(2)), s = std::sin(nom(2));
        for (double off : offsets) {
          const Eigen::Vector2d q0(nom(0) + off * c, nom(1) + off * s);
          const Eigen::Vector2d d = relative_position(person, q0);
          const double m2 = d.x() * d.x() / ps.sigma_xx + d.y() * d.y() / ps.sigma_yy;
          if (m2 > kPsCutoffMahalanobis2) continue;

          const PsQuadratic quad = ps_quadratic(person, q0, ps);
          Eigen::Matrix<double, 2, 3> tq;
          tq << 1.0, 0.0, -off * s, 0.0, 1.0, off * c;
          const Eigen::Vector3d g_state = tq.transpose() * quad.gradient;
          const Eigen::Matrix3d h_state = tq.transpose() * quad.hessian * tq;
          const auto g_rows = g.middleRows<3>(3 * (i - 1));
          build.p1 += ps_scale * g_rows.transpose() * h_state * g_rows;
          build.q1 += ps_scale * g_rows.transpose() * g_state;
          build.c1 += ps_scale * quad.value;
        }
      }
    }
  }

  QpProblem& qp = build.qp;
  qp.p = build.p1 + build.p2 + build.p3;
  qp.p = 0.5 * (qp.p + qp.p.transpose()).eval();
  qp.q = build.q1 + build.q2 + build.q3;

  // Constraints: per-step rate box, absolute input box, and the linearized
  // non-slip band, all expressed over z.
  const int rows = n + n + nc;
  qp.m = Eigen::MatrixXd::Zero(rows, n);
  qp.lower = Eigen::VectorXd::Zero(rows);
  qp.upper = Eigen::VectorXd::Zero(rows);

  qp.m.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < nc; ++j) {
    qp.lower.segment<4>(4 * j) = params.ts * params.du_min;
    qp.upper.segment<4>(4 * j) = params.ts * params.du_max;
  }

  qp.m.middleRows(n, n) = l;
  for (int j = 0; j < nc; ++j) {
    qp.lower.segment<4>(n + 4 * j) = params.u_min - u_prev.vec();
    qp.upper.segment<4>(n + 4 * j) = params.u_max - u_prev.vec();
  }

  const NonslipTerms slip = nonslip_terms(u_prev);
  const double slip_center = slip.e.dot(u_prev.vec()) + slip.g0;
  for (int j = 0; j < nc; ++j) {
    qp.m.row(2 * n + j) = slip.e * l.middleRows<4>(4 * j);
    qp.lower(2 * n + j) = -kNonslipBound - slip_center;
    qp.upper(2 * n + j) = kNonslipBound - slip_center;
  }

  build.nominal_inputs.assign(static_cast<size_t>(nc), u_prev.vec());
  return build;
}

Planner::Planner(MpcParams params, RobotGeometry geom, PsParams ps)
    : params_(std::move(params)), geom_(geom), ps_(ps) {
  params_.validate();
  ps_.validate();
}

void Planner::reset() {
  warm_z_.resize(0);
  warm_y_.resize(0);
}

PlanResult Planner::plan_step(const RobotState& state, const ControlInput& u_prev,
                              const Reference& ref,
                              const std::vector<HumanPrediction>& humans) {
  const auto t_start = std::chrono::steady_clock::now();
  const int nc = params_.nc;
  const int n = 4 * nc;

  const std::vector<PlanarPose> window = reference_window(ref, state, params_);
  const QpBuild build = build_qp(state, u_prev, window, humans, params_, geom_, ps_,
                                 {ref.v_f_ref, ref.v_r_ref});

  QpResult qp_res = solve_qp(build.qp, warm_z_, warm_y_, QpSettings{});

  PlanResult out;
  out.qp_status = qp_res.status;

  // Applied-input bounds: rate box intersected with the absolute box; the
  // steering margin keeps tan() defined when a bound sits exactly at pi/2.
  constexpr double half_pi = std::numbers::pi / 2.0;
  Eigen::Vector4d abs_lo = params_.u_min;
  Eigen::Vector4d abs_hi = params_.u_max;
  for (int i = 2; i < 4; ++i) {
    abs_lo(i) = std::max(abs_lo(i), -half_pi + kSteeringMargin);
    abs_hi(i) = std::min(abs_hi(i), half_pi - kSteeringMargin);
  }
  const Eigen::Vector4d lo =
      (u_prev.vec() + params_.ts * params_.du_min).cwiseMax(abs_lo);
  const Eigen::Vector4d hi =
      (u_prev.vec() + params_.ts * params_.du_max).cwiseMin(abs_hi);

  Eigen::VectorXd z = qp_res.z;
  if (qp_res.status != QpStatus::kOptimal || z.size() != n) {
    // Brake: wheel speeds toward zero at the rate bound, steering held.
    Eigen::Vector4d u0v = u_prev.vec();
    for (int i = 0; i < 2; ++i) {
      u0v(i) = u0v(i) > 0.0
                   ? std::max(0.0, u0v(i) + params_.ts * params_.du_min(i))
                   : std::min(0.0, u0v(i) + params_.ts * params_.du_max(i));
    }
    u0v = u0v.cwiseMax(lo).cwiseMin(hi);
    z = Eigen::VectorXd::Zero(n);
    z.head<4>() = u0v - u_prev.vec();
  }

  const Eigen::Vector4d u0v = (u_prev.vec() + z.head<4>()).cwiseMax(lo).cwiseMin(hi);
  out.u0 = ControlInput::from_vec(u0v);

  out.j1 = quadratic_cost(build.p1, build.q1, build.c1, z);
  out.j2 = quadratic_cost(build.p2, build.q2, build.c2, z);
  out.j3 = quadratic_cost(build.p3, build.q3, build.c3, z);

  // Predicted trajectory: planned input sequence through the nonlinear model.
  out.predicted_states.reserve(static_cast<size_t>(params_.np) + 1);
  out.predicted_states.push_back(state);
  RobotState rolled = state;
  Eigen::Vector4d u_cur = u_prev.vec();
  for (int i = 0; i < params_.np; ++i) {
    if (i < nc) u_cur += z.segment<4>(4 * i);
    const Eigen::Vector4d u_apply = u_cur.cwiseMax(abs_lo).cwiseMin(abs_hi);
    rolled = step(rolled, ControlInput::from_vec(u_apply), geom_, params_.ts);
    out.predicted_states.push_back(rolled);
  }

  // Warm start for the next cycle: shift the increment sequence one step.
  warm_z_.resize(n);
  warm_z_.head(n - 4) = z.tail(n - 4);
  warm_z_.tail<4>().setZero();
  warm_y_ = qp_res.y;

  out.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

}  // namespace socnav
