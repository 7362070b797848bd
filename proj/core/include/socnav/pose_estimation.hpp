#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "socnav/camera.hpp"
#include "socnav/skeleton.hpp"

namespace socnav {

struct StaturePrior {
  double mean{1.75};    // meters
  double stddev{0.07};  // meters
};

// Per-joint 3D Gaussians produced by one sensor node from one camera view.
struct PosePrior {
  std::array<Gaussian3, kJointCount> joints{};
  int source_node{0};
  double timestamp{0.0};
};

struct LidarJointMeasurement {
  int joint_index{0};
  WorldPoint mean;
  Eigen::Matrix3d cov{Eigen::Matrix3d::Identity()};
};

struct RefinedPose {
  JointArray joints{};
  double nll{0.0};
  bool converged{false};
  int iterations{0};
};

// Back-projects a 2D keypoint at the joint's nominal height and propagates
// pixel noise plus the stature prior (through the joint's height fraction)
// into a world-frame Gaussian.
Gaussian3 joint_prior_from_keypoint(const PixelPoint& keypoint, int joint_index,
                                    const StaturePrior& stature,
                                    const ProjectionMatrix& h,
                                    const PixelHeightNoise& noise,
                                    const SkeletonModel& skeleton);

// Objective of the pose refinement: Gaussian prior terms for every node view,
// bone-length coherence terms, and optional LiDAR terms.
double negative_log_likelihood(const JointArray& candidate,
                               const std::vector<PosePrior>& priors,
                               const SkeletonModel& skeleton,
                               const std::vector<LidarJointMeasurement>& lidar);

// Minimizes the objective with damped Gauss-Newton. A single prior gives the
// per-node refinement; multiple priors fuse views from several nodes.
// When nll_trace is given it receives the objective at the initialization and
// after every accepted step.
RefinedPose refine_pose(const std::vector<PosePrior>& priors,
                        const SkeletonModel& skeleton,
                        const std::vector<LidarJointMeasurement>& lidar = {},
                        std::vector<double>* nll_trace = nullptr);

// Facing direction from the shoulder and hip lines, averaged on the unit
// circle; falls back to the given velocity heading when they disagree by more
// than 90 degrees. Result in (-pi, pi].
double heading_from_pose(const RefinedPose& pose, const SkeletonModel& skeleton,
                         std::optional<double> fallback_velocity_heading = {});

}  // namespace socnav
