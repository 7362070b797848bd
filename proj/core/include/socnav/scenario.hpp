#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "socnav/camera.hpp"
#include "socnav/mpc.hpp"
#include "socnav/pose_estimation.hpp"
#include "socnav/skeleton.hpp"
#include "socnav/social_field.hpp"
#include "socnav/tracking.hpp"
#include "socnav/types.hpp"
#include "socnav/vehicle.hpp"

namespace socnav {

struct CameraConfig {
  std::array<double, 12> h_row_major{};  // projection matrix, row major
  double image_width{1280.0};
  double image_height{720.0};

  ProjectionMatrix projection() const {
    return ProjectionMatrix::from_row_major(h_row_major);
  }
};

// Ceiling-mount helper: camera at `position` looking along ground heading
// `yaw` with `pitch` radians of down-tilt; pinhole intrinsics (f, cx, cy).
ProjectionMatrix make_overhead_camera(const Eigen::Vector3d& position, double yaw,
                                      double pitch, double focal, double cx, double cy);

struct NodeConfig {
  int id{0};
  std::vector<CameraConfig> cameras;
  PixelHeightNoise pixel_noise{2.0, 2.0, 0.02};
  bool lidar_enabled{false};
  std::vector<int> lidar_joints{kLeftShoulder, kRightShoulder, kLeftHip, kRightHip};
  double lidar_sigma{0.03};  // m, isotropic per-joint noise
  double latency_fixed_ms{0.0};
  double latency_jitter_ms{0.0};
};

struct PedestrianConfig {
  Eigen::Vector2d start{0.0, 0.0};
  double stature{1.75};
  std::vector<Eigen::Vector2d> waypoints;
  double speed{1.2};        // m/s
  double start_delay{0.0};  // s
  // Initial facing; defaults to the direction of the first waypoint.
  std::optional<double> heading;
};

struct WorldConfig {
  std::vector<PlanarPose> path;  // reference path poses
  double goal_tolerance{0.3};    // m
};

struct RobotConfig {
  RobotState initial{};
  RobotGeometry geometry{};
  MpcParams mpc{};
  double v_f_ref{0.7};
  double v_r_ref{0.7};
};

struct ScenarioConfig {
  std::string description;
  std::uint64_t seed{1};
  double duration{30.0};  // s
  WorldConfig world;
  RobotConfig robot;
  std::vector<PedestrianConfig> pedestrians;
  std::vector<NodeConfig> nodes;
  PsParams ps{};
  FusionConfig fusion{};
  StaturePrior stature_prior{};
  SkeletonModel skeleton{SkeletonModel::standard(1.75)};

  void validate() const;  // throws ConfigError
};

// Loads a scenario document (JSON). Cameras are given either as 12 row-major
// matrix entries or as a mount description composed by make_overhead_camera;
// see docs/scenario_format.md.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);

}  // namespace socnav
