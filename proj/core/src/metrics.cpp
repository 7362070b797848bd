#include "socnav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "socnav/angles.hpp"
#include "socnav/sim.hpp"

namespace socnav {

double rectangle_point_distance(const PlanarPose& pose, const RobotGeometry& geom,
                                const Eigen::Vector2d& point) {
  // Into the body frame, with the box centered between the wheels.
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  const Eigen::Vector2d rel(point.x() - pose.x, point.y() - pose.y);
  const double bx = c * rel.x() + s * rel.y() - 0.5 * (geom.l_f - geom.l_r);
  const double by = -s * rel.x() + c * rel.y();

  const double hx = 0.5 * (geom.l_f + geom.l_r);
  const double hy = geom.half_width;
  const double dx = std::abs(bx) - hx;
  const double dy = std::abs(by) - hy;
  if (dx > 0.0 || dy > 0.0) {
    return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
  }
  return std::max(dx, dy);  // negative: depth to the nearest face
}

double footprint_clearance(const PlanarPose& pose, const RobotGeometry& geom,
                           const Eigen::Vector2d& pedestrian) {
  return rectangle_point_distance(pose, geom, pedestrian) - kPedestrianRadius;
}

namespace {

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double idx = p * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(idx);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

MetricsReport compute_metrics(const EpisodeLog& log) {
  MetricsReport report;

  // Fused-track accuracy against the nearest ground-truth person, per cycle.
  double abs_sum = 0.0, sq_sum = 0.0, yaw_abs = 0.0, yaw_sq = 0.0;
  int count = 0;
  size_t truth_idx = 0;
  for (const TrackRow& row : log.tracks) {
    if (row.object_class != ObjectClass::kHuman) continue;
    while (truth_idx + 1 < log.truth.size() && log.truth[truth_idx].t < row.t) ++truth_idx;
    if (truth_idx >= log.truth.size()) break;
    const TruthRow& truth = log.truth[truth_idx];
    if (truth.t != row.t || truth.pedestrians.empty()) continue;

    double best = std::numeric_limits<double>::infinity();
    double best_heading = 0.0;
    for (const PlanarPose& ped : truth.pedestrians) {
      const double d = std::hypot(ped.x - row.x, ped.y - row.y);
      if (d < best) {
        best = d;
        best_heading = ped.heading;
      }
    }
    abs_sum += best;
    sq_sum += best * best;
    const double yaw_err =
        std::abs(angle_diff(row.theta, best_heading)) * 180.0 / std::numbers::pi;
    yaw_abs += yaw_err;
    yaw_sq += yaw_err * yaw_err;
    ++count;
  }
  if (count > 0) {
    report.position_mae = abs_sum / count;
    report.position_rmse = std::sqrt(sq_sum / count);
    report.yaw_mae_deg = yaw_abs / count;
    report.yaw_rmse_deg = std::sqrt(yaw_sq / count);
  }
  report.matched_samples = count;

  // Clearance over ground truth.
  double clear_sum = 0.0;
  int clear_count = 0;
  for (const TruthRow& row : log.truth) {
    if (row.pedestrians.empty()) continue;
    double cycle_min = std::numeric_limits<double>::infinity();
    for (const PlanarPose& ped : row.pedestrians) {
      cycle_min = std::min(cycle_min,
                           footprint_clearance(row.robot.pose(), log.geometry,
                                               ped.position()));
    }
    report.clearance_min = std::min(report.clearance_min, cycle_min);
    clear_sum += cycle_min;
    ++clear_count;
  }
  if (clear_count > 0) report.clearance_mean = clear_sum / clear_count;

  // Travel distance and time up to goal arrival (or the whole episode).
  double distance = 0.0;
  for (size_t i = 1; i < log.truth.size(); ++i) {
    distance += std::hypot(log.truth[i].robot.x - log.truth[i - 1].robot.x,
                           log.truth[i].robot.y - log.truth[i - 1].robot.y);
  }
  report.travel_distance = distance;
  report.goal_reached = log.goal_reached;
  report.travel_time = log.goal_reached
                           ? log.goal_time
                           : (log.truth.empty() ? 0.0 : log.truth.back().t + log.ts);

  std::vector<double> solve_ms;
  solve_ms.reserve(log.plan.size());
  for (const PlanRow& row : log.plan) solve_ms.push_back(row.solve_time_ms);
  if (!solve_ms.empty()) {
    report.solve_ms_median = percentile(solve_ms, 0.5);
    report.solve_ms_p95 = percentile(solve_ms, 0.95);
    report.solve_ms_max = *std::max_element(solve_ms.begin(), solve_ms.end());
    double sum = 0.0;
    for (double v : solve_ms) sum += v;
    report.solve_ms_mean = sum / static_cast<double>(solve_ms.size());
  }
  return report;
}

}  // namespace socnav
