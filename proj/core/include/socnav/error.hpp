#pragma once

#include <stdexcept>
#include <string>

namespace socnav {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Projective scale |s| fell below the degeneracy threshold.
class DegenerateProjection : public Error {
 public:
  using Error::Error;
};

// Back-projection determinant |D| fell below the degeneracy threshold
// (viewing ray parallel to the z = z_w plane).
class DegenerateBackProjection : public Error {
 public:
  using Error::Error;
};

class SingularCovariance : public Error {
 public:
  using Error::Error;
};

class MissingJoints : public Error {
 public:
  using Error::Error;
};

class SteeringOutOfRange : public Error {
 public:
  using Error::Error;
};

class DegenerateSideslip : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace socnav
