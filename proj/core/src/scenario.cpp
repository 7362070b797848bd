#include "socnav/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "socnav/error.hpp"

namespace socnav {

using nlohmann::json;

ProjectionMatrix make_overhead_camera(const Eigen::Vector3d& position, double yaw,
                                      double pitch, double focal, double cx, double cy) {
  const double cy_ = std::cos(yaw), sy_ = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const Eigen::Vector3d dir(cp * cy_, cp * sy_, -sp);      // optical axis
  const Eigen::Vector3d right(sy_, -cy_, 0.0);             // image +x
  const Eigen::Vector3d down = dir.cross(right);           // image +y

  Eigen::Matrix3d rotation;
  rotation.row(0) = right;
  rotation.row(1) = down;
  rotation.row(2) = dir;
  const Eigen::Vector3d translation = -rotation * position;

  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = focal;
  k(1, 1) = focal;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return ProjectionMatrix::compose(k, rotation, translation);
}

namespace {

Eigen::Vector2d parse_vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

PlanarPose parse_pose(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected [x, y, heading]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

CameraConfig parse_camera(const json& j) {
  CameraConfig cam;
  cam.image_width = j.value("image_width", 1280.0);
  cam.image_height = j.value("image_height", 720.0);
  if (j.contains("h")) {
    const auto& h = j.at("h");
    if (!h.is_array() || h.size() != 12) throw ConfigError("camera h must hold 12 numbers");
    for (size_t i = 0; i < 12; ++i) cam.h_row_major[i] = h[i].get<double>();
  } else if (j.contains("mount")) {
    const auto& m = j.at("mount");
    const auto& pos = m.at("position");
    if (!pos.is_array() || pos.size() != 3) throw ConfigError("mount position must hold 3 numbers");
    const ProjectionMatrix proj = make_overhead_camera(
        {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()},
        m.at("yaw").get<double>(), m.at("pitch").get<double>(),
        m.value("focal", 600.0), m.value("cx", cam.image_width / 2.0),
        m.value("cy", cam.image_height / 2.0));
    cam.h_row_major = proj.row_major();
  } else {
    throw ConfigError("camera needs either 'h' (12 numbers) or 'mount'");
  }
  cam.projection();  // validates
  return cam;
}

NodeConfig parse_node(const json& j, int default_id) {
  NodeConfig node;
  node.id = j.value("id", default_id);
  if (!j.contains("cameras") || !j.at("cameras").is_array() || j.at("cameras").empty()) {
    throw ConfigError("node needs at least one camera");
  }
  for (const auto& cam : j.at("cameras")) node.cameras.push_back(parse_camera(cam));
  if (j.contains("pixel_noise")) {
    const auto& n = j.at("pixel_noise");
    node.pixel_noise.sigma_xp = n.value("sigma_xp", 2.0);
    node.pixel_noise.sigma_yp = n.value("sigma_yp", 2.0);
    node.pixel_noise.sigma_zw = n.value("sigma_zw", 0.02);
  }
  node.lidar_enabled = j.value("lidar_enabled", false);
  if (j.contains("lidar_joints")) {
    node.lidar_joints.clear();
    for (const auto& idx : j.at("lidar_joints")) node.lidar_joints.push_back(idx.get<int>());
  }
  node.lidar_sigma = j.value("lidar_sigma", 0.03);
  node.latency_fixed_ms = j.value("latency_fixed_ms", 0.0);
  node.latency_jitter_ms = j.value("latency_jitter_ms", 0.0);
  return node;
}

PedestrianConfig parse_pedestrian(const json& j) {
  PedestrianConfig ped;
  ped.start = parse_vec2(j.at("start"));
  ped.stature = j.value("stature", 1.75);
  ped.speed = j.value("speed", 1.2);
  ped.start_delay = j.value("start_delay", 0.0);
  if (j.contains("heading")) ped.heading = j.at("heading").get<double>();
  if (j.contains("waypoints")) {
    for (const auto& w : j.at("waypoints")) ped.waypoints.push_back(parse_vec2(w));
  }
  return ped;
}

void parse_mpc(const json& j, MpcParams& p) {
  p.np = j.value("np", p.np);
  p.nc = j.value("nc", p.nc);
  p.ts = j.value("ts", p.ts);
  p.ps_weight = j.value("ps_weight", p.ps_weight);
  auto diag3 = [&](const char* key, Eigen::Matrix3d& m) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw ConfigError("expected 3 diagonal weights");
    m = Eigen::Vector3d(a[0].get<double>(), a[1].get<double>(), a[2].get<double>()).asDiagonal();
  };
  auto diag2 = [&](const char* key, Eigen::Matrix2d& m) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw ConfigError("expected 2 diagonal weights");
    m = Eigen::Vector2d(a[0].get<double>(), a[1].get<double>()).asDiagonal();
  };
  diag3("q", p.q_track);
  diag2("r", p.r_steer);
  diag2("t", p.t_vel);
  auto vec4 = [&](const char* key, Eigen::Vector4d& v) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 4) throw ConfigError("expected 4 entries");
    for (int i = 0; i < 4; ++i) v(i) = a[static_cast<size_t>(i)].get<double>();
  };
  vec4("u_min", p.u_min);
  vec4("u_max", p.u_max);
  vec4("du_min", p.du_min);
  vec4("du_max", p.du_max);
}

void parse_skeleton(const json& j, SkeletonModel& skeleton) {
  if (j.contains("height_fractions")) {
    const auto& f = j.at("height_fractions");
    if (!f.is_array() || f.size() != kJointCount) {
      throw ConfigError("height_fractions must hold 17 numbers");
    }
    for (size_t i = 0; i < kJointCount; ++i) {
      skeleton.height_fractions[i] = f[i].get<double>();
    }
  }
  if (j.contains("bones")) {
    skeleton.bones.clear();
    for (const auto& b : j.at("bones")) {
      if (!b.is_array() || b.size() != 4) throw ConfigError("bone must be [a, b, length, sigma]");
      skeleton.bones.push_back(
          {b[0].get<int>(), b[1].get<int>(), b[2].get<double>(), b[3].get<double>()});
    }
  }
  skeleton.validate();
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (world.path.empty()) throw ConfigError("world.path must be non-empty");
  if (!(world.goal_tolerance > 0.0)) throw ConfigError("goal tolerance must be positive");
  for (size_t i = 1; i < world.path.size(); ++i) {
    if ((world.path[i].position() - world.path[i - 1].position()).norm() > 1.0) {
      throw ConfigError("consecutive path poses must be within 1 m");
    }
  }
  robot.mpc.validate();
  ps.validate();
  skeleton.validate();
  for (const PedestrianConfig& p : pedestrians) {
    if (!(p.speed > 0.0)) throw ConfigError("pedestrian speed must be positive");
    if (!(p.stature > 0.5 && p.stature < 2.5)) throw ConfigError("implausible stature");
    if (p.start_delay < 0.0) throw ConfigError("start delay must be non-negative");
  }
  for (const NodeConfig& n : nodes) {
    if (n.cameras.empty()) throw ConfigError("node without cameras");
    if (!(n.pixel_noise.sigma_xp > 0.0 && n.pixel_noise.sigma_yp > 0.0 &&
          n.pixel_noise.sigma_zw > 0.0)) {
      throw ConfigError("pixel noise must be positive");
    }
    if (n.latency_fixed_ms < 0.0 || n.latency_jitter_ms < 0.0) {
      throw ConfigError("latency must be non-negative");
    }
    for (int idx : n.lidar_joints) {
      if (idx < 0 || idx >= kJointCount) throw ConfigError("lidar joint index out of range");
    }
  }
  if (!(fusion.gate_distance > 0.0) || fusion.miss_limit < 1 || fusion.spawn_confirmations < 1) {
    throw ConfigError("invalid fusion config");
  }
}

ScenarioConfig parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }

  ScenarioConfig cfg;
  try {
    cfg.description = j.value("description", "");
    cfg.seed = j.value("seed", 1ULL);
    cfg.duration = j.value("duration", 30.0);

    const auto& world = j.at("world");
    for (const auto& p : world.at("path")) cfg.world.path.push_back(parse_pose(p));
    cfg.world.goal_tolerance = world.value("goal_tolerance", 0.3);

    if (j.contains("robot")) {
      const auto& r = j.at("robot");
      if (r.contains("initial")) {
        const PlanarPose p = parse_pose(r.at("initial"));
        cfg.robot.initial = {p.x, p.y, p.heading};
      }
      cfg.robot.geometry.l_f = r.value("l_f", 1.2);
      cfg.robot.geometry.l_r = r.value("l_r", 1.2);
      cfg.robot.geometry.half_width = r.value("half_width", 0.55);
      cfg.robot.v_f_ref = r.value("v_f_ref", 0.7);
      cfg.robot.v_r_ref = r.value("v_r_ref", 0.7);
      if (r.contains("mpc")) parse_mpc(r.at("mpc"), cfg.robot.mpc);
    }

    if (j.contains("pedestrians")) {
      for (const auto& p : j.at("pedestrians")) cfg.pedestrians.push_back(parse_pedestrian(p));
    }
    if (j.contains("nodes")) {
      int next_id = 0;
      for (const auto& n : j.at("nodes")) cfg.nodes.push_back(parse_node(n, next_id++));
    }

    if (j.contains("ps")) {
      const auto& ps = j.at("ps");
      cfg.ps = PsParams::from_lateral_variance(ps.value("sigma_yy", 0.36),
                                               ps.value("k", 100.0),
                                               ps.value("weight", 1.0));
    }
    if (j.contains("fusion")) {
      const auto& f = j.at("fusion");
      cfg.fusion.gate_distance = f.value("gate_distance", 1.0);
      cfg.fusion.process_noise.sigma_accel = f.value("sigma_accel", 0.8);
      cfg.fusion.process_noise.sigma_turn_accel = f.value("sigma_turn_accel", 0.8);
      cfg.fusion.measurement_noise.sigma_xy = f.value("sigma_xy", 0.08);
      cfg.fusion.measurement_noise.sigma_yaw = f.value("sigma_yaw", 0.3);
      cfg.fusion.miss_limit = f.value("miss_limit", 5);
      cfg.fusion.spawn_confirmations = f.value("spawn_confirmations", 2);
      cfg.fusion.delay_compensation = f.value("delay_compensation", true);
    }
    if (j.contains("stature_prior")) {
      const auto& s = j.at("stature_prior");
      cfg.stature_prior.mean = s.value("mean", 1.75);
      cfg.stature_prior.stddev = s.value("stddev", 0.07);
    }
    cfg.skeleton = SkeletonModel::standard(cfg.stature_prior.mean);
    if (j.contains("skeleton")) parse_skeleton(j.at("skeleton"), cfg.skeleton);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario field error: ") + e.what());
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace socnav
