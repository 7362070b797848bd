#include "socnav/skeleton.hpp"

#include <cmath>
#include <queue>

#include "socnav/error.hpp"

namespace socnav {

namespace {

constexpr std::array<const char*, kJointCount> kJointNames = {
    "nose",           "left_eye",     "right_eye",  "left_ear",
    "right_ear",      "left_shoulder", "right_shoulder", "left_elbow",
    "right_elbow",    "left_wrist",   "right_wrist", "left_hip",
    "right_hip",      "left_knee",    "right_knee",  "left_ankle",
    "right_ankle"};

constexpr std::array<double, kJointCount> kHeightFractions = {
    0.936,  // nose
    0.948, 0.948,  // eyes
    0.939, 0.939,  // ears
    0.818, 0.818,  // shoulders
    0.630, 0.630,  // elbows
    0.485, 0.485,  // wrists
    0.530, 0.530,  // hips
    0.285, 0.285,  // knees
    0.039, 0.039,  // ankles
};

// Lateral half-offsets as stature fractions.
constexpr double kShoulderHalf = 0.1295;  // shoulder width 0.259
constexpr double kHipHalf = 0.0955;       // hip width 0.191

double dist(const WorldPoint& a, const WorldPoint& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

}  // namespace

JointArray canonical_joints(double stature) {
  const double h = stature;
  JointArray j{};
  auto at = [&](int idx, double fwd, double lat) {
    j[static_cast<size_t>(idx)] = {fwd, lat, kHeightFractions[static_cast<size_t>(idx)] * h};
  };
  at(kNose, 0.08, 0.0);
  at(kLeftEye, 0.04, 0.035);
  at(kRightEye, 0.04, -0.035);
  at(kLeftEar, -0.02, 0.075);
  at(kRightEar, -0.02, -0.075);
  at(kLeftShoulder, 0.0, kShoulderHalf * h);
  at(kRightShoulder, 0.0, -kShoulderHalf * h);
  at(kLeftElbow, 0.0, kShoulderHalf * h);
  at(kRightElbow, 0.0, -kShoulderHalf * h);
  at(kLeftWrist, 0.0, kShoulderHalf * h);
  at(kRightWrist, 0.0, -kShoulderHalf * h);
  at(kLeftHip, 0.0, kHipHalf * h);
  at(kRightHip, 0.0, -kHipHalf * h);
  at(kLeftKnee, 0.0, kHipHalf * h);
  at(kRightKnee, 0.0, -kHipHalf * h);
  at(kLeftAnkle, 0.0, kHipHalf * h);
  at(kRightAnkle, 0.0, -kHipHalf * h);
  return j;
}

JointArray posed_joints(const PersonPose& pose, double stature) {
  const JointArray body = canonical_joints(stature);
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  JointArray out{};
  for (size_t i = 0; i < body.size(); ++i) {
    out[i] = {pose.x + c * body[i].x - s * body[i].y,
              pose.y + s * body[i].x + c * body[i].y, body[i].z};
  }
  return out;
}

SkeletonModel SkeletonModel::standard(double stature) {
  SkeletonModel m;
  for (size_t i = 0; i < kJointCount; ++i) m.joint_names[i] = kJointNames[i];
  m.height_fractions = kHeightFractions;

  const double h = stature;
  const JointArray c = canonical_joints(stature);
  auto measured = [&](int a, int b) {
    return dist(c[static_cast<size_t>(a)], c[static_cast<size_t>(b)]);
  };
  constexpr double kSigma = 0.05;
  auto add = [&](int a, int b, double length) {
    m.bones.push_back({a, b, length, kSigma});
  };

  // Face and neck bones from the canonical layout; limb bones from the
  // proportion table.
  add(kNose, kLeftEye, measured(kNose, kLeftEye));
  add(kNose, kRightEye, measured(kNose, kRightEye));
  add(kLeftEye, kLeftEar, measured(kLeftEye, kLeftEar));
  add(kRightEye, kRightEar, measured(kRightEye, kRightEar));
  add(kLeftEar, kLeftShoulder, measured(kLeftEar, kLeftShoulder));
  add(kRightEar, kRightShoulder, measured(kRightEar, kRightShoulder));
  add(kLeftShoulder, kRightShoulder, 0.259 * h);
  add(kLeftShoulder, kLeftElbow, 0.186 * h);
  add(kRightShoulder, kRightElbow, 0.186 * h);
  add(kLeftElbow, kLeftWrist, 0.146 * h);
  add(kRightElbow, kRightWrist, 0.146 * h);
  add(kLeftShoulder, kLeftHip, measured(kLeftShoulder, kLeftHip));
  add(kRightShoulder, kRightHip, measured(kRightShoulder, kRightHip));
  add(kLeftHip, kRightHip, 0.191 * h);
  add(kLeftHip, kLeftKnee, 0.245 * h);
  add(kRightHip, kRightKnee, 0.245 * h);
  add(kLeftKnee, kLeftAnkle, 0.246 * h);
  add(kRightKnee, kRightAnkle, 0.246 * h);

  m.validate();
  return m;
}

void SkeletonModel::validate() const {
  for (double f : height_fractions) {
    if (!(f >= 0.0 && f <= 1.05)) throw ConfigError("height fraction out of [0, 1.05]");
  }
  std::array<std::vector<int>, kJointCount> adjacency{};
  for (const Bone& b : bones) {
    if (b.a < 0 || b.a >= kJointCount || b.b < 0 || b.b >= kJointCount || b.a == b.b) {
      throw ConfigError("bone references invalid joint indices");
    }
    if (!(b.length > 0.0)) throw ConfigError("bone length must be positive");
    if (!(b.sigma > 0.0)) throw ConfigError("bone sigma must be positive");
    adjacency[static_cast<size_t>(b.a)].push_back(b.b);
    adjacency[static_cast<size_t>(b.b)].push_back(b.a);
  }
  std::array<bool, kJointCount> seen{};
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int count = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adjacency[static_cast<size_t>(u)]) {
      if (!seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = true;
        ++count;
        frontier.push(v);
      }
    }
  }
  if (count != kJointCount) throw ConfigError("bone graph is not connected");
}

}  // namespace socnav
