#pragma once

#include <array>
#include <string>
#include <vector>

#include "socnav/camera.hpp"
#include "socnav/types.hpp"

namespace socnav {

inline constexpr int kJointCount = 17;

// COCO-17 joint order.
enum Joint : int {
  kNose = 0,
  kLeftEye,
  kRightEye,
  kLeftEar,
  kRightEar,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
  kLeftHip,
  kRightHip,
  kLeftKnee,
  kRightKnee,
  kLeftAnkle,
  kRightAnkle,
};

struct Bone {
  int a{0};
  int b{0};
  double length{0.0};  // prior mean, meters
  double sigma{0.05};  // prior std, meters
};

// Anthropometric prior: joint naming, bone-length table, and nominal joint
// heights as fractions of stature.
struct SkeletonModel {
  std::array<std::string, kJointCount> joint_names;
  std::vector<Bone> bones;
  std::array<double, kJointCount> height_fractions;

  // Default proportions scaled by stature; overridable per scenario.
  static SkeletonModel standard(double stature);

  // Throws ConfigError when the bone graph is disconnected or any length,
  // sigma, or height fraction is out of range.
  void validate() const;
};

using JointArray = std::array<WorldPoint, kJointCount>;

// Upright body at the origin facing +x (left side toward +y), used to
// synthesize ground-truth joints and to derive the default bone table.
JointArray canonical_joints(double stature);

// Canonical body rotated and translated to a ground pose.
JointArray posed_joints(const PersonPose& pose, double stature);

}  // namespace socnav
