#pragma once

#include <random>
#include <string>
#include <vector>

#include "socnav/metrics.hpp"
#include "socnav/scenario.hpp"
#include "socnav/tracking.hpp"

namespace socnav {

struct PedestrianState {
  Eigen::Vector2d position{0.0, 0.0};
  double heading{0.0};
  size_t waypoint_index{0};
  double delay_remaining{0.0};
  bool done{false};
};

PedestrianState initial_pedestrian_state(const PedestrianConfig& cfg);

// Scripted waypoint following: each pedestrian walks toward its current
// waypoint at its speed, advancing within 0.1 m, and stops after the last.
void step_pedestrians(std::vector<PedestrianState>& states,
                      const std::vector<PedestrianConfig>& configs, double dt);

// Per-node synthetic local perception at time t: truth joints projected into
// each camera with pixel noise, back-projected joint priors, optional sparse
// LiDAR joint measurements, and a node-level pose refinement. Persons outside
// any camera's frustum yield nothing from that camera.
std::vector<Detection> synthesize_observations(
    const std::vector<PedestrianState>& peds,
    const std::vector<PedestrianConfig>& ped_cfg, const NodeConfig& node,
    const SkeletonModel& skeleton, const StaturePrior& stature_prior, double t,
    std::mt19937_64& rng);

struct DeliveryItem {
  double delivery_time{0.0};
  int node_id{0};
  int sequence{0};
  Detection detection;
};

// Applies the node's fixed-plus-jitter communication delay; stamps unchanged.
std::vector<DeliveryItem> inject_latency(std::vector<Detection> detections,
                                         const NodeConfig& node, std::mt19937_64& rng,
                                         int& sequence_counter);

// Groups same-stamp detections from different nodes that lie within the merge
// distance and refines each group jointly (multi-view pose constraints).
std::vector<Detection> merge_codetections(std::vector<Detection> detections,
                                          double merge_distance,
                                          const SkeletonModel& skeleton);

struct TruthRow {
  double t{0.0};
  RobotState robot;
  std::vector<PlanarPose> pedestrians;
};

struct PerceptionRow {
  double t{0.0};
  int node_id{0};
  int person_index{0};
  double yaw{0.0};
  JointArray joints{};
};

struct TrackRow {
  double t{0.0};
  int track_id{0};
  ObjectClass object_class{ObjectClass::kHuman};
  double x{0.0}, y{0.0}, v{0.0}, theta{0.0}, omega{0.0};
  bool compensated{false};
};

struct PlanRow {
  double t{0.0};
  RobotState state;
  ControlInput u0;
  QpStatus status{QpStatus::kOptimal};
  double j1{0.0}, j2{0.0}, j3{0.0};
  double solve_time_ms{0.0};
  double min_predicted_clearance{std::numeric_limits<double>::infinity()};
};

struct EpisodeLog {
  double ts{0.1};
  RobotGeometry geometry;
  Eigen::Vector2d goal{0.0, 0.0};
  double goal_tolerance{0.3};
  bool goal_reached{false};
  double goal_time{0.0};
  std::vector<TruthRow> truth;
  std::vector<PerceptionRow> perception;
  std::vector<TrackRow> tracks;
  std::vector<PlanRow> plan;
};

// Closes the perceive -> fuse -> plan -> act loop at Ts until the goal or the
// configured duration; fully deterministic for a fixed (config, seed).
EpisodeLog run_episode(const ScenarioConfig& cfg);

// CSV serialization with shortest round-trip number formatting. plan.csv's
// solve_time_ms column holds wall-clock time and is the one non-reproducible
// field; pass include_timing = false for run-to-run comparisons.
std::string truth_csv(const EpisodeLog& log);
std::string perception_csv(const EpisodeLog& log);
std::string tracks_csv(const EpisodeLog& log);
std::string plan_csv(const EpisodeLog& log, bool include_timing = true);
std::string metrics_csv(const MetricsReport& report);

// Writes truth/perception/tracks/plan/metrics CSVs plus meta.json into dir.
void write_episode_logs(const EpisodeLog& log, const std::string& dir);

// Rebuilds the pieces of an EpisodeLog that metrics need from a log dir.
EpisodeLog read_episode_logs(const std::string& dir);

}  // namespace socnav
