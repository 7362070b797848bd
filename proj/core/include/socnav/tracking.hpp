#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "socnav/pose_estimation.hpp"
#include "socnav/types.hpp"

namespace socnav {

enum class ObjectClass { kHuman, kRobot };

// A per-node detection delivered to the central layer. Pose priors and LiDAR
// measurements ride along so that the central layer can re-refine poses
// cooperatively when several nodes observe the same person.
struct Detection {
  ObjectClass object_class{ObjectClass::kHuman};
  Eigen::Vector2d position{0.0, 0.0};
  std::optional<double> yaw;
  int node_id{0};
  double timestamp{0.0};  // node-local capture stamp, seconds
  std::optional<RefinedPose> refined_pose;
  std::vector<PosePrior> priors;
  std::vector<LidarJointMeasurement> lidar;
};

using CvtrState = Eigen::Matrix<double, 5, 1>;  // x, y, v, theta, omega
using CvtrCov = Eigen::Matrix<double, 5, 5>;

struct ProcessNoise {
  double sigma_accel{0.8};       // m/s^2
  double sigma_turn_accel{0.8};  // rad/s^2
};

struct MeasurementNoise {
  double sigma_xy{0.08};  // m
  double sigma_yaw{0.3};  // rad
};

struct FusionConfig {
  double gate_distance{1.0};  // m
  ProcessNoise process_noise{};
  MeasurementNoise measurement_noise{};
  int miss_limit{5};
  int spawn_confirmations{2};
  // Baseline switch for delay studies: when false, detection stamps are
  // treated as the fusion time and outputs are not extrapolated.
  bool delay_compensation{true};
};

struct Track {
  int id{0};
  ObjectClass object_class{ObjectClass::kHuman};
  CvtrState state{CvtrState::Zero()};
  CvtrCov cov{CvtrCov::Identity()};
  double last_update{0.0};
  int misses{0};
  int hits{0};
  bool confirmed{false};
};

// Constant-velocity-and-turning-rate prediction: circular-arc extrapolation
// with the straight-line limit at small |omega|; covariance propagated through
// the analytic Jacobian plus additive process noise.
std::pair<CvtrState, CvtrCov> cvtr_predict(const CvtrState& state, const CvtrCov& cov,
                                           double dt, const ProcessNoise& q);

struct Association {
  std::vector<std::pair<int, int>> matches;  // (detection index, track index)
  std::vector<int> unmatched_detections;
  std::vector<int> unmatched_tracks;
};

// Greedy nearest-neighbor within the gate among class-equal pairs; ties break
// on (distance, track id, detection index).
Association associate(const std::vector<Detection>& detections,
                      const std::vector<Track>& tracks, const FusionConfig& cfg);

// EKF measurement update (position, plus yaw when present) in Joseph form.
Track ekf_update(const Track& track, const Detection& detection,
                 const FusionConfig& cfg);

// Predicts a copy of the track forward to `now`; the stored track is untouched.
Track compensate_delay(const Track& track, double now, const ProcessNoise& q = {});

struct FusedHuman {
  int track_id{0};
  Eigen::Vector2d position{0.0, 0.0};
  double yaw{0.0};
  double speed{0.0};
  double turn_rate{0.0};
  bool compensated{false};
  std::vector<PersonPose> predicted;  // CVTR rollout over the planner horizon
};

// Mean-only CVTR rollout used as the planner's human prediction.
std::vector<PersonPose> predict_person_trajectory(const CvtrState& state, int steps,
                                                  double dt);

// Central-layer track store: single writer, value-type messages.
class Tracker {
 public:
  explicit Tracker(FusionConfig cfg) : cfg_(std::move(cfg)) {}

  // One fusion cycle. Detections may carry heterogeneous stamps <= now; tracks
  // are predicted to each detection's stamp for the update and the returned
  // human list is compensated to `now`. prediction_steps/prediction_dt shape
  // the CVTR rollout attached to each fused human.
  std::vector<FusedHuman> fuse_step(std::vector<Detection> detections, double now,
                                    int prediction_steps, double prediction_dt);

  const std::vector<Track>& tracks() const { return tracks_; }
  const FusionConfig& config() const { return cfg_; }

 private:
  FusionConfig cfg_;
  std::vector<Track> tracks_;
  int next_id_{0};
};

}  // namespace socnav
