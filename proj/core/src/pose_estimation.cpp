#include "socnav/pose_estimation.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "socnav/angles.hpp"
#include "socnav/error.hpp"

namespace socnav {

namespace {

constexpr double kCovRegularization = 1e-9;
constexpr double kNormSmoothing = 1e-12;  // under the sqrt of bone distances
constexpr double kGradientTol = 1e-6;
constexpr double kStepTol = 1e-8;
constexpr int kMaxIterations = 100;

Eigen::Matrix3d regularized_inverse(const Eigen::Matrix3d& cov) {
  const Eigen::Matrix3d reg =
      cov + kCovRegularization * Eigen::Matrix3d::Identity();
  Eigen::LLT<Eigen::Matrix3d> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw SingularCovariance("covariance not invertible after regularization");
  }
  return llt.solve(Eigen::Matrix3d::Identity());
}

double smoothed_norm(const Eigen::Vector3d& d) {
  return std::sqrt(d.squaredNorm() + kNormSmoothing);
}

using StateVector = Eigen::Matrix<double, 3 * kJointCount, 1>;

Eigen::Vector3d joint_of(const StateVector& x, int i) {
  return x.segment<3>(3 * i);
}

struct Problem {
  std::vector<std::pair<int, Eigen::Matrix3d>> gaussians;  // (joint, inv cov)
  std::vector<Eigen::Vector3d> gaussian_means;
  const SkeletonModel* skeleton{nullptr};

  double objective(const StateVector& x) const {
    double value = 0.0;
    for (size_t g = 0; g < gaussians.size(); ++g) {
      const Eigen::Vector3d d = joint_of(x, gaussians[g].first) - gaussian_means[g];
      value += 0.5 * d.dot(gaussians[g].second * d);
    }
    for (const Bone& b : skeleton->bones) {
      const Eigen::Vector3d d = joint_of(x, b.a) - joint_of(x, b.b);
      const double r = (smoothed_norm(d) - b.length) / b.sigma;
      value += 0.5 * r * r;
    }
    return value;
  }

  // Accumulates the Gauss-Newton normal equations J^T J and J^T r.
  void normal_equations(const StateVector& x, Eigen::MatrixXd& jtj,
                        Eigen::VectorXd& jtr) const {
    jtj.setZero();
    jtr.setZero();
    for (size_t g = 0; g < gaussians.size(); ++g) {
      const int i = gaussians[g].first;
      const Eigen::Matrix3d& w = gaussians[g].second;
      const Eigen::Vector3d d = joint_of(x, i) - gaussian_means[g];
      jtj.block<3, 3>(3 * i, 3 * i) += w;
      jtr.segment<3>(3 * i) += w * d;
    }
    for (const Bone& b : skeleton->bones) {
      const Eigen::Vector3d d = joint_of(x, b.a) - joint_of(x, b.b);
      const double n = smoothed_norm(d);
      const double r = (n - b.length) / b.sigma;
      const Eigen::Vector3d grad = d / (n * b.sigma);
      const Eigen::Matrix3d gg = grad * grad.transpose();
      jtj.block<3, 3>(3 * b.a, 3 * b.a) += gg;
      jtj.block<3, 3>(3 * b.b, 3 * b.b) += gg;
      jtj.block<3, 3>(3 * b.a, 3 * b.b) -= gg;
      jtj.block<3, 3>(3 * b.b, 3 * b.a) -= gg;
      jtr.segment<3>(3 * b.a) += grad * r;
      jtr.segment<3>(3 * b.b) -= grad * r;
    }
  }
};

Problem build_problem(const std::vector<PosePrior>& priors,
                      const SkeletonModel& skeleton,
                      const std::vector<LidarJointMeasurement>& lidar) {
  Problem p;
  p.skeleton = &skeleton;
  for (const PosePrior& prior : priors) {
    for (int i = 0; i < kJointCount; ++i) {
      p.gaussians.emplace_back(i, regularized_inverse(prior.joints[static_cast<size_t>(i)].cov));
      p.gaussian_means.push_back(prior.joints[static_cast<size_t>(i)].mean.vec());
    }
  }
  for (const LidarJointMeasurement& m : lidar) {
    if (m.joint_index < 0 || m.joint_index >= kJointCount) {
      throw ConfigError("lidar joint index out of range");
    }
    p.gaussians.emplace_back(m.joint_index, regularized_inverse(m.cov));
    p.gaussian_means.push_back(m.mean.vec());
  }
  return p;
}

// Per-joint inverse-covariance-weighted mean of the node priors.
StateVector initial_state(const std::vector<PosePrior>& priors) {
  StateVector x;
  for (int i = 0; i < kJointCount; ++i) {
    if (priors.size() == 1) {
      x.segment<3>(3 * i) = priors[0].joints[static_cast<size_t>(i)].mean.vec();
      continue;
    }
    Eigen::Matrix3d w = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (const PosePrior& prior : priors) {
      const Eigen::Matrix3d inv =
          regularized_inverse(prior.joints[static_cast<size_t>(i)].cov);
      w += inv;
      b += inv * prior.joints[static_cast<size_t>(i)].mean.vec();
    }
    x.segment<3>(3 * i) = w.ldlt().solve(b);
  }
  return x;
}

}  // namespace

Gaussian3 joint_prior_from_keypoint(const PixelPoint& keypoint, int joint_index,
                                    const StaturePrior& stature,
                                    const ProjectionMatrix& h,
                                    const PixelHeightNoise& noise,
                                    const SkeletonModel& skeleton) {
  if (joint_index < 0 || joint_index >= kJointCount) {
    throw ConfigError("joint index out of range");
  }
  const double fraction = skeleton.height_fractions[static_cast<size_t>(joint_index)];
  const double z_w = fraction * stature.mean;

  Gaussian3 out;
  out.mean = back_project(keypoint, z_w, h);

  // Height uncertainty: stature prior scaled by the joint's height fraction,
  // combined in quadrature with the configured z noise.
  const double sigma_height = fraction * stature.stddev;
  PixelHeightNoise combined = noise;
  combined.sigma_zw = std::sqrt(sigma_height * sigma_height + noise.sigma_zw * noise.sigma_zw);

  const Eigen::Matrix3d j = back_projection_jacobian(keypoint, z_w, h);
  out.cov = propagate_covariance(j, combined);
  return out;
}

double negative_log_likelihood(const JointArray& candidate,
                               const std::vector<PosePrior>& priors,
                               const SkeletonModel& skeleton,
                               const std::vector<LidarJointMeasurement>& lidar) {
  if (priors.empty()) throw ConfigError("at least one pose prior required");
  double value = 0.0;
  for (const PosePrior& prior : priors) {
    for (int i = 0; i < kJointCount; ++i) {
      const Eigen::Matrix3d inv =
          regularized_inverse(prior.joints[static_cast<size_t>(i)].cov);
      const Eigen::Vector3d d = candidate[static_cast<size_t>(i)].vec() -
                                prior.joints[static_cast<size_t>(i)].mean.vec();
      value += 0.5 * d.dot(inv * d);
    }
  }
  for (const Bone& b : skeleton.bones) {
    const Eigen::Vector3d d = candidate[static_cast<size_t>(b.a)].vec() -
                              candidate[static_cast<size_t>(b.b)].vec();
    const double r = (d.norm() - b.length) / b.sigma;
    value += 0.5 * r * r;
  }
  for (const LidarJointMeasurement& m : lidar) {
    const Eigen::Matrix3d inv = regularized_inverse(m.cov);
    const Eigen::Vector3d d =
        candidate[static_cast<size_t>(m.joint_index)].vec() - m.mean.vec();
    value += 0.5 * d.dot(inv * d);
  }
  return value;
}

RefinedPose refine_pose(const std::vector<PosePrior>& priors,
                        const SkeletonModel& skeleton,
                        const std::vector<LidarJointMeasurement>& lidar,
                        std::vector<double>* nll_trace) {
  if (priors.empty()) throw ConfigError("at least one pose prior required");
  // Priors anchor every joint, so refinement accepts any bone subset; full
  // skeleton validation (connectivity) happens at configuration time.
  for (const Bone& b : skeleton.bones) {
    if (b.a < 0 || b.a >= kJointCount || b.b < 0 || b.b >= kJointCount ||
        !(b.sigma > 0.0) || !(b.length > 0.0)) {
      throw ConfigError("invalid bone in skeleton");
    }
  }

  const Problem problem = build_problem(priors, skeleton, lidar);
  constexpr int n = 3 * kJointCount;

  StateVector x = initial_state(priors);
  double obj = problem.objective(x);
  if (nll_trace) nll_trace->push_back(obj);

  Eigen::MatrixXd jtj(n, n);
  Eigen::VectorXd jtr(n);
  double lambda = 1e-4;

  RefinedPose result;
  int iterations = 0;
  bool converged = false;

  for (; iterations < kMaxIterations; ++iterations) {
    problem.normal_equations(x, jtj, jtr);
    if (jtr.lpNorm<Eigen::Infinity>() < kGradientTol) {
      converged = true;
      break;
    }

    bool accepted = false;
    StateVector x_new = x;
    double step_norm = 0.0;
    for (int attempt = 0; attempt < 25; ++attempt) {
      const Eigen::MatrixXd damped =
          jtj + lambda * Eigen::MatrixXd::Identity(n, n);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      x_new = x + step;
      const double obj_new = problem.objective(x_new);
      if (obj_new < obj) {
        x = x_new;
        obj = obj_new;
        if (nll_trace) nll_trace->push_back(obj);
        lambda = std::max(lambda / 3.0, 1e-12);
        step_norm = step.norm();
        accepted = true;
        break;
      }
      lambda *= 3.0;
      if (lambda > 1e12) break;
    }
    if (!accepted) break;  // damping saturated; gradient check decides below
    if (step_norm < kStepTol) {
      converged = true;
      ++iterations;
      break;
    }
  }

  for (int i = 0; i < kJointCount; ++i) {
    const Eigen::Vector3d v = joint_of(x, i);
    result.joints[static_cast<size_t>(i)] = {v.x(), v.y(), v.z()};
  }
  result.nll = negative_log_likelihood(result.joints, priors, skeleton, lidar);
  result.iterations = iterations;
  result.converged = converged;
  return result;
}

double heading_from_pose(const RefinedPose& pose, const SkeletonModel& /*skeleton*/,
                         std::optional<double> fallback_velocity_heading) {
  auto finite = [&](int i) {
    const WorldPoint& p = pose.joints[static_cast<size_t>(i)];
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
  };
  const bool have_joints = finite(kLeftShoulder) && finite(kRightShoulder) &&
                           finite(kLeftHip) && finite(kRightHip);
  if (!have_joints) {
    if (fallback_velocity_heading) return wrap_angle(*fallback_velocity_heading);
    throw MissingJoints("shoulders and hips required for heading extraction");
  }

  auto line_heading = [&](int left, int right) {
    const WorldPoint& l = pose.joints[static_cast<size_t>(left)];
    const WorldPoint& r = pose.joints[static_cast<size_t>(right)];
    // Facing direction is the left-to-right line turned onto the body's +x.
    return wrap_angle(std::atan2(r.y - l.y, r.x - l.x) + std::numbers::pi / 2.0);
  };
  const double shoulder = line_heading(kLeftShoulder, kRightShoulder);
  const double hip = line_heading(kLeftHip, kRightHip);

  if (std::abs(angle_diff(shoulder, hip)) > std::numbers::pi / 2.0) {
    if (fallback_velocity_heading) return wrap_angle(*fallback_velocity_heading);
    return shoulder;  // shoulders are the steadier cue when the two disagree
  }
  return wrap_angle(circular_mean(shoulder, hip));
}

}  // namespace socnav
