#include <doctest.h>

#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "socnav/angles.hpp"
#include "socnav/pose_estimation.hpp"
#include "support/oracles.hpp"

using namespace socnav;

namespace {

Eigen::Matrix<double, 3, 4> identity_h() {
  Eigen::Matrix<double, 3, 4> h = Eigen::Matrix<double, 3, 4>::Zero();
  h(0, 0) = h(1, 1) = h(2, 2) = 1.0;
  return h;
}

// Skeleton whose bone table is measured from the canonical body, so a
// canonical pose satisfies every bone length exactly.
SkeletonModel consistent_skeleton(double stature) {
  SkeletonModel m = SkeletonModel::standard(stature);
  const JointArray c = canonical_joints(stature);
  for (Bone& b : m.bones) {
    const Eigen::Vector3d d = c[static_cast<size_t>(b.a)].vec() - c[static_cast<size_t>(b.b)].vec();
    b.length = d.norm();
  }
  return m;
}

PosePrior prior_from_joints(const JointArray& joints, const Eigen::Matrix3d& cov) {
  PosePrior p;
  for (int i = 0; i < kJointCount; ++i) {
    p.joints[static_cast<size_t>(i)] = {joints[static_cast<size_t>(i)], cov};
  }
  return p;
}

JointArray perturbed(const JointArray& joints, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, sigma);
  JointArray out = joints;
  for (WorldPoint& p : out) {
    p.x += gauss(rng);
    p.y += gauss(rng);
    p.z += gauss(rng);
  }
  return out;
}

double mean_joint_error(const JointArray& a, const JointArray& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += (a[i].vec() - b[i].vec()).norm();
  return sum / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("joint_prior_from_keypoint: identity-H nose example") {
  const ProjectionMatrix h(identity_h());
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  const StaturePrior stature{1.75, 0.07};
  const PixelHeightNoise noise{1.0, 1.0, 0.01};
  const Gaussian3 g = joint_prior_from_keypoint({0.1, 0.2}, kNose, stature, h, noise, skeleton);
  const double z = 0.936 * 1.75;  // 1.638
  CHECK(g.mean.z == doctest::Approx(1.638).epsilon(1e-12));
  CHECK(g.mean.x == doctest::Approx(0.1 * z).epsilon(1e-12));
  CHECK(g.mean.y == doctest::Approx(0.2 * z).epsilon(1e-12));
}

TEST_CASE("joint_prior_from_keypoint: noiseless limit has zero covariance") {
  const ProjectionMatrix h(identity_h());
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  const StaturePrior stature{1.75, 0.0};
  const PixelHeightNoise noise{0.0, 0.0, 0.0};
  const Gaussian3 g = joint_prior_from_keypoint({0.3, -0.2}, kLeftHip, stature, h, noise, skeleton);
  CHECK(g.cov.norm() == doctest::Approx(0.0));
}

TEST_CASE("joint_prior_from_keypoint: covariance matches Monte Carlo") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  const StaturePrior stature{1.75, 0.07};
  const PixelHeightNoise noise{2.0, 2.0, 0.02};
  const ProjectionMatrix h =
      ProjectionMatrix::compose((Eigen::Matrix3d() << 600, 0, 640, 0, 600, 360, 0, 0, 1).finished(),
                                Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.0, 0.0, 4.0));

  // A torso joint seen by a camera 4 m behind the world origin.
  const int joint = kLeftShoulder;
  const double fraction = skeleton.height_fractions[joint];
  const WorldPoint true_joint{0.3, 0.2, fraction * stature.mean};
  const Projection proj = project(true_joint, h);
  const Gaussian3 analytic =
      joint_prior_from_keypoint(proj.pixel, joint, stature, h, noise, skeleton);

  const double sigma_z = std::sqrt(std::pow(fraction * stature.stddev, 2.0) +
                                   noise.sigma_zw * noise.sigma_zw);
  const int n = 50000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d sum2 = Eigen::Matrix3d::Zero();
  for (int k = 0; k < n; ++k) {
    const PixelPoint px{proj.pixel.x + noise.sigma_xp * gauss(rng),
                        proj.pixel.y + noise.sigma_yp * gauss(rng)};
    const double zw = fraction * stature.mean + sigma_z * gauss(rng);
    const Eigen::Vector3d w = back_project(px, zw, h).vec();
    sum += w;
    sum2 += w * w.transpose();
  }
  const Eigen::Vector3d mean = sum / n;
  const Eigen::Matrix3d empirical = sum2 / n - mean * mean.transpose();
  CHECK((empirical - analytic.cov).norm() / analytic.cov.norm() < 0.10);
}

TEST_CASE("negative_log_likelihood: zero at a fully consistent candidate") {
  const SkeletonModel skeleton = consistent_skeleton(1.7);
  const JointArray joints = canonical_joints(1.7);
  const PosePrior prior = prior_from_joints(joints, 0.01 * Eigen::Matrix3d::Identity());
  const double nll = negative_log_likelihood(joints, {prior}, skeleton, {});
  CHECK(nll == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("negative_log_likelihood: unit Mahalanobis move adds exactly 0.5") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d a;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a(r, c) = u(rng);
  const Eigen::Matrix3d cov = a * a.transpose() + 0.05 * Eigen::Matrix3d::Identity();

  SkeletonModel skeleton = SkeletonModel::standard(1.75);
  skeleton.bones.clear();  // isolate the Gaussian terms
  const JointArray joints = canonical_joints(1.75);
  const PosePrior prior = prior_from_joints(joints, cov);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const double lambda = eig.eigenvalues()(1);
  const Eigen::Vector3d dir = eig.eigenvectors().col(1);

  JointArray moved = joints;
  const Eigen::Vector3d shifted = joints[kNose].vec() + std::sqrt(lambda) * dir;
  moved[kNose] = {shifted.x(), shifted.y(), shifted.z()};

  const double base = negative_log_likelihood(joints, {prior}, skeleton, {});
  const double nll = negative_log_likelihood(moved, {prior}, skeleton, {});
  CHECK(nll - base == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("negative_log_likelihood: matches an independent summation oracle") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  const JointArray truth = canonical_joints(1.75);

  for (int rep = 0; rep < 20; ++rep) {
    std::vector<PosePrior> priors;
    for (int node = 0; node < 2; ++node) {
      Eigen::Matrix3d a;
      std::uniform_real_distribution<double> c(-0.2, 0.2);
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) a(r, col) = c(rng);
      const Eigen::Matrix3d cov = a * a.transpose() + 0.02 * Eigen::Matrix3d::Identity();
      priors.push_back(prior_from_joints(perturbed(truth, 0.05, rng), cov));
    }
    std::vector<LidarJointMeasurement> lidar;
    lidar.push_back({kLeftHip,
                     {truth[kLeftHip].x + u(rng), truth[kLeftHip].y + u(rng),
                      truth[kLeftHip].z + u(rng)},
                     0.001 * Eigen::Matrix3d::Identity()});

    const JointArray candidate = perturbed(truth, 0.1, rng);
    const double got = negative_log_likelihood(candidate, priors, skeleton, lidar);

    // Independent term-by-term sum.
    double want = 0.0;
    const Eigen::Matrix3d reg = 1e-9 * Eigen::Matrix3d::Identity();
    for (const PosePrior& p : priors) {
      for (int i = 0; i < kJointCount; ++i) {
        const Eigen::Vector3d d =
            candidate[static_cast<size_t>(i)].vec() - p.joints[static_cast<size_t>(i)].mean.vec();
        want += 0.5 * d.dot((p.joints[static_cast<size_t>(i)].cov + reg).inverse() * d);
      }
    }
    for (const Bone& b : skeleton.bones) {
      const double dist = (candidate[static_cast<size_t>(b.a)].vec() -
                           candidate[static_cast<size_t>(b.b)].vec())
                              .norm();
      want += std::pow(dist - b.length, 2.0) / (2.0 * b.sigma * b.sigma);
    }
    for (const LidarJointMeasurement& m : lidar) {
      const Eigen::Vector3d d =
          candidate[static_cast<size_t>(m.joint_index)].vec() - m.mean.vec();
      want += 0.5 * d.dot((m.cov + reg).inverse() * d);
    }
    CHECK(oracles::close_rel(got, want, 1e-9));
  }
}

TEST_CASE("refine_pose: consistent priors are a fixed point") {
  const SkeletonModel skeleton = consistent_skeleton(1.8);
  const JointArray joints = canonical_joints(1.8);
  const PosePrior prior = prior_from_joints(joints, 0.01 * Eigen::Matrix3d::Identity());
  const RefinedPose refined = refine_pose({prior}, skeleton);
  CHECK(refined.converged);
  CHECK(refined.iterations <= 1);
  for (int i = 0; i < kJointCount; ++i) {
    CHECK((refined.joints[static_cast<size_t>(i)].vec() - joints[static_cast<size_t>(i)].vec())
              .norm() <= 1e-10);
  }
  CHECK(refined.nll == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("refine_pose: two-joint chain matches the 1-D numeric oracle") {
  // Single bone between joints 0 and 1; every other joint is pinned by its
  // prior only and stays put.
  SkeletonModel skeleton = SkeletonModel::standard(1.75);
  skeleton.bones.clear();
  const double bone_sigma = 0.02;
  skeleton.bones.push_back({0, 1, 1.0, bone_sigma});

  const double prior_sigma2 = 0.01;  // isotropic variance
  JointArray means = canonical_joints(1.75);
  means[0] = {0.0, 0.0, 1.0};
  means[1] = {1.4, 0.0, 1.0};
  const PosePrior prior = prior_from_joints(means, prior_sigma2 * Eigen::Matrix3d::Identity());

  std::vector<double> trace;
  const RefinedPose refined = refine_pose({prior}, skeleton, {}, &trace);
  CHECK(refined.converged);
  const double got =
      (refined.joints[0].vec() - refined.joints[1].vec()).norm();

  // Symmetric 1-D reduction: both joints move toward each other by t.
  auto objective = [&](double t) {
    return 2.0 * (t * t / (2.0 * prior_sigma2)) +
           std::pow(1.4 - 2.0 * t - 1.0, 2.0) / (2.0 * bone_sigma * bone_sigma);
  };
  const double t_star = oracles::golden_minimize(objective, 0.0, 0.4);
  const double want = 1.4 - 2.0 * t_star;

  CHECK(std::abs(got - want) < 1e-4);
  CHECK(got > 1.0);
  CHECK(got < 1.4);

  // Tighter bone prior pulls the distance closer to the bone length.
  skeleton.bones[0].sigma = 0.002;
  const RefinedPose tighter = refine_pose({prior}, skeleton);
  const double got_tight = (tighter.joints[0].vec() - tighter.joints[1].vec()).norm();
  CHECK(std::abs(got_tight - 1.0) < std::abs(got - 1.0));

  for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
}

TEST_CASE("refine_pose: dominant lidar term pins the joint") {
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  const JointArray joints = canonical_joints(1.75);
  const PosePrior prior = prior_from_joints(joints, 0.01 * Eigen::Matrix3d::Identity());

  LidarJointMeasurement m;
  m.joint_index = kLeftShoulder;
  m.mean = {joints[kLeftShoulder].x + 0.05, joints[kLeftShoulder].y - 0.03,
            joints[kLeftShoulder].z + 0.02};
  m.cov = 1e-6 * Eigen::Matrix3d::Identity();

  const RefinedPose refined = refine_pose({prior}, skeleton, {m});
  CHECK((refined.joints[kLeftShoulder].vec() - m.mean.vec()).norm() < 1e-2);
}

TEST_CASE("refine_pose: nll never increases across accepted iterations") {
  std::mt19937_64 rng(24);
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  const JointArray truth = canonical_joints(1.75);
  for (int rep = 0; rep < 50; ++rep) {
    const PosePrior prior = prior_from_joints(perturbed(truth, 0.08, rng),
                                              0.005 * Eigen::Matrix3d::Identity());
    std::vector<double> trace;
    const RefinedPose refined = refine_pose({prior}, skeleton, {}, &trace);
    REQUIRE(trace.size() >= 1);
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    CHECK(refined.nll <= trace.front() + 1e-9);
  }
}

TEST_CASE("refine_pose: second view reduces median joint error") {
  std::mt19937_64 rng(25);
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  const JointArray truth = canonical_joints(1.75);
  const Eigen::Matrix3d cov = 0.01 * Eigen::Matrix3d::Identity();

  std::vector<double> err_single, err_coop;
  for (int rep = 0; rep < 80; ++rep) {
    const PosePrior a = prior_from_joints(perturbed(truth, 0.1, rng), cov);
    const PosePrior b = prior_from_joints(perturbed(truth, 0.1, rng), cov);
    err_single.push_back(mean_joint_error(refine_pose({a}, skeleton).joints, truth));
    err_coop.push_back(mean_joint_error(refine_pose({a, b}, skeleton).joints, truth));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  CHECK(median(err_coop) <= median(err_single));
}

TEST_CASE("refine_pose: planar rigid-motion equivariance") {
  std::mt19937_64 rng(26);
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  const JointArray truth = posed_joints({1.0, -2.0, 0.7}, 1.75);

  const PosePrior prior = prior_from_joints(perturbed(truth, 0.06, rng),
                                            0.01 * Eigen::Matrix3d::Identity());
  LidarJointMeasurement lidar{kRightHip, truth[kRightHip], 0.002 * Eigen::Matrix3d::Identity()};

  const double phi = 1.1;
  const Eigen::Vector3d shift(0.8, -0.4, 0.0);
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  rot(0, 0) = std::cos(phi);
  rot(0, 1) = -std::sin(phi);
  rot(1, 0) = std::sin(phi);
  rot(1, 1) = std::cos(phi);

  PosePrior prior_t = prior;
  for (auto& g : prior_t.joints) {
    const Eigen::Vector3d m = rot * g.mean.vec() + shift;
    g.mean = {m.x(), m.y(), m.z()};
    g.cov = rot * g.cov * rot.transpose();
  }
  LidarJointMeasurement lidar_t = lidar;
  const Eigen::Vector3d lm = rot * lidar.mean.vec() + shift;
  lidar_t.mean = {lm.x(), lm.y(), lm.z()};
  lidar_t.cov = rot * lidar.cov * rot.transpose();

  const RefinedPose base = refine_pose({prior}, skeleton, {lidar});
  const RefinedPose moved = refine_pose({prior_t}, skeleton, {lidar_t});
  for (int i = 0; i < kJointCount; ++i) {
    const Eigen::Vector3d want = rot * base.joints[static_cast<size_t>(i)].vec() + shift;
    CHECK((moved.joints[static_cast<size_t>(i)].vec() - want).norm() < 1e-6);
  }
}

TEST_CASE("heading_from_pose: axis-aligned and rotated examples") {
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  RefinedPose pose;
  pose.joints = canonical_joints(1.75);  // facing +x, left shoulder at +y
  CHECK(heading_from_pose(pose, skeleton) == doctest::Approx(0.0).epsilon(1e-12));

  RefinedPose rotated;
  rotated.joints = posed_joints({0.0, 0.0, std::numbers::pi / 2.0}, 1.75);
  CHECK(heading_from_pose(rotated, skeleton) ==
        doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-12));

  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 200; ++i) {
    const double phi = u(rng);
    RefinedPose p;
    p.joints = posed_joints({0.3, -0.7, phi}, 1.75);
    CHECK(std::abs(angle_diff(heading_from_pose(p, skeleton), wrap_angle(phi))) < 1e-9);
  }
}

TEST_CASE("heading_from_pose: disagreement falls back to velocity heading") {
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  RefinedPose pose;
  pose.joints = canonical_joints(1.75);
  // Twist hips by 180 degrees: swap left and right hip.
  std::swap(pose.joints[kLeftHip], pose.joints[kRightHip]);
  const double fallback = 2.0;
  CHECK(heading_from_pose(pose, skeleton, fallback) == doctest::Approx(fallback));
}

TEST_CASE("heading_from_pose: missing joints") {
  const SkeletonModel skeleton = SkeletonModel::standard(1.75);
  RefinedPose pose;
  pose.joints = canonical_joints(1.75);
  pose.joints[kLeftShoulder].x = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(heading_from_pose(pose, skeleton), MissingJoints);
  CHECK(heading_from_pose(pose, skeleton, 0.5) == doctest::Approx(0.5));
}
