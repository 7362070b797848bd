#pragma once

#include <limits>

#include <Eigen/Core>

#include "socnav/types.hpp"
#include "socnav/vehicle.hpp"

namespace socnav {

// Pedestrian border model for clearance: a disc of this radius around the
// person's ground position.
inline constexpr double kPedestrianRadius = 0.25;  // m

// Signed distance from the robot's rectangular footprint (l_r behind to l_f
// ahead of the C.G., +/- half_width) to a point: positive outside, negative
// inside, magnitude = distance to the boundary.
double rectangle_point_distance(const PlanarPose& pose, const RobotGeometry& geom,
                                const Eigen::Vector2d& point);

// Border-to-border clearance between the footprint and a pedestrian.
double footprint_clearance(const PlanarPose& pose, const RobotGeometry& geom,
                           const Eigen::Vector2d& pedestrian);

struct MetricsReport {
  double position_mae{std::numeric_limits<double>::quiet_NaN()};
  double position_rmse{std::numeric_limits<double>::quiet_NaN()};
  double yaw_mae_deg{std::numeric_limits<double>::quiet_NaN()};
  double yaw_rmse_deg{std::numeric_limits<double>::quiet_NaN()};
  int matched_samples{0};
  double clearance_min{std::numeric_limits<double>::infinity()};
  double clearance_mean{std::numeric_limits<double>::infinity()};
  double travel_distance{0.0};
  double travel_time{0.0};
  bool goal_reached{false};
  double solve_ms_median{0.0};
  double solve_ms_mean{0.0};
  double solve_ms_p95{0.0};
  double solve_ms_max{0.0};
};

struct EpisodeLog;
MetricsReport compute_metrics(const EpisodeLog& log);

}  // namespace socnav
