#pragma once

#include <Eigen/Core>

namespace socnav {

// Planar pose in the ground-fixed frame (position in meters, heading in
// radians, measured counterclockwise from +x).
struct PlanarPose {
  double x{0.0};
  double y{0.0};
  double heading{0.0};

  Eigen::Vector2d position() const { return {x, y}; }
};

// A person's ground pose; heading is the facing direction.
using PersonPose = PlanarPose;

}  // namespace socnav
