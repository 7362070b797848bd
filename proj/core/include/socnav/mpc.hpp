#pragma once

#include <vector>

#include <Eigen/Core>

#include "socnav/qp.hpp"
#include "socnav/social_field.hpp"
#include "socnav/types.hpp"
#include "socnav/vehicle.hpp"

namespace socnav {

struct MpcParams {
  int np{20};       // prediction horizon, steps
  int nc{10};       // control horizon, steps
  double ts{0.1};   // s
  Eigen::Matrix3d q_track{Eigen::Vector3d(10.0, 10.0, 1.0).asDiagonal()};
  Eigen::Matrix2d r_steer{Eigen::Matrix2d::Identity()};
  Eigen::Matrix2d t_vel{Eigen::Matrix2d::Identity()};
  Eigen::Vector4d u_min;
  Eigen::Vector4d u_max;
  Eigen::Vector4d du_min;  // per second; scaled by ts per step
  Eigen::Vector4d du_max;
  double ps_weight{15.0};

  MpcParams();
  void validate() const;
};

struct Reference {
  std::vector<PlanarPose> path;  // ordered (X, Y, psi) poses
  double v_f_ref{0.7};
  double v_r_ref{0.7};
};

// CVTR-predicted person poses at horizon steps 1..Np (shorter lists clamp to
// their last pose).
struct HumanPrediction {
  std::vector<PersonPose> poses;
};

struct PlanResult {
  ControlInput u0;
  std::vector<RobotState> predicted_states;  // Np + 1, nonlinear rollout
  QpStatus qp_status{QpStatus::kOptimal};
  double solve_time{0.0};  // s, build + solve
  double j1{0.0}, j2{0.0}, j3{0.0};
};

// Np reference poses starting one step ahead of the closest point on the
// path, advanced by arc length each step; clamps at the path end.
std::vector<PlanarPose> reference_window(const Reference& ref, const RobotState& state,
                                         const MpcParams& params);

// Condensed QP over stacked input increments; per-term pieces are kept so the
// solved cost can be split into its J1/J2/J3 parts.
struct QpBuild {
  QpProblem qp;
  Eigen::MatrixXd p1, p2, p3;
  Eigen::VectorXd q1, q2, q3;
  double c1{0.0}, c2{0.0}, c3{0.0};
  std::vector<Eigen::Vector4d> nominal_inputs;  // u_prev held over the horizon
};

QpBuild build_qp(const RobotState& state, const ControlInput& u_prev,
                 const std::vector<PlanarPose>& window,
                 const std::vector<HumanPrediction>& humans, const MpcParams& params,
                 const RobotGeometry& geom, const PsParams& ps,
                 const Eigen::Vector2d& v_ref);

// Receding-horizon planner; holds the warm start between cycles.
class Planner {
 public:
  Planner(MpcParams params, RobotGeometry geom, PsParams ps);

  PlanResult plan_step(const RobotState& state, const ControlInput& u_prev,
                       const Reference& ref, const std::vector<HumanPrediction>& humans);

  void reset();

  const MpcParams& params() const { return params_; }

 private:
  MpcParams params_;
  RobotGeometry geom_;
  PsParams ps_;
  Eigen::VectorXd warm_z_;
  Eigen::VectorXd warm_y_;
};

}  // namespace socnav
