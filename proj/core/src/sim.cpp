#include "socnav/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "socnav/angles.hpp"
#include "socnav/error.hpp"
#include "socnav/mpc.hpp"

namespace socnav {

namespace {

constexpr double kWaypointAdvance = 0.1;  // m

std::string format_number(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw ConfigError("bad number in log: " + s);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

const char* class_name(ObjectClass c) {
  return c == ObjectClass::kHuman ? "human" : "robot";
}

const char* status_name(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kMaxIterations: return "max_iter";
    case QpStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

QpStatus status_from_name(const std::string& s) {
  if (s == "optimal") return QpStatus::kOptimal;
  if (s == "max_iter") return QpStatus::kMaxIterations;
  if (s == "infeasible") return QpStatus::kInfeasible;
  throw ConfigError("unknown qp status: " + s);
}

}  // namespace

PedestrianState initial_pedestrian_state(const PedestrianConfig& cfg) {
  PedestrianState s;
  s.position = cfg.start;
  s.delay_remaining = cfg.start_delay;
  s.done = cfg.waypoints.empty();
  if (cfg.heading) {
    s.heading = *cfg.heading;
    return s;
  }
  const Eigen::Vector2d target =
      cfg.waypoints.empty() ? cfg.start : cfg.waypoints.front();
  const Eigen::Vector2d dir = target - cfg.start;
  s.heading = dir.norm() > 1e-12 ? std::atan2(dir.y(), dir.x()) : 0.0;
  return s;
}

void step_pedestrians(std::vector<PedestrianState>& states,
                      const std::vector<PedestrianConfig>& configs, double dt) {
  if (!(dt > 0.0)) throw ConfigError("step_pedestrians requires dt > 0");
  for (size_t i = 0; i < states.size(); ++i) {
    PedestrianState& s = states[i];
    const PedestrianConfig& cfg = configs[i];
    if (s.done) continue;

    double remaining = dt;
    if (s.delay_remaining > 0.0) {
      const double wait = std::min(remaining, s.delay_remaining);
      s.delay_remaining -= wait;
      remaining -= wait;
    }

    while (remaining > 1e-12 && !s.done) {
      const Eigen::Vector2d target = cfg.waypoints[s.waypoint_index];
      const Eigen::Vector2d to_target = target - s.position;
      const double dist = to_target.norm();
      if (dist <= kWaypointAdvance) {
        if (++s.waypoint_index >= cfg.waypoints.size()) s.done = true;
        continue;
      }
      s.heading = std::atan2(to_target.y(), to_target.x());
      const double step_len = cfg.speed * remaining;
      if (step_len >= dist) {
        s.position = target;
        remaining -= dist / cfg.speed;
      } else {
        s.position += to_target * (step_len / dist);
        remaining = 0.0;
      }
    }
  }
}

std::vector<Detection> synthesize_observations(
    const std::vector<PedestrianState>& peds,
    const std::vector<PedestrianConfig>& ped_cfg, const NodeConfig& node,
    const SkeletonModel& skeleton, const StaturePrior& stature_prior, double t,
    std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Detection> detections;

  for (size_t pi = 0; pi < peds.size(); ++pi) {
    const JointArray truth = posed_joints(
        {peds[pi].position.x(), peds[pi].position.y(), peds[pi].heading},
        ped_cfg[pi].stature);

    std::vector<PosePrior> priors;
    for (const CameraConfig& cam : node.cameras) {
      const ProjectionMatrix h = cam.projection();
      std::array<PixelPoint, kJointCount> keypoints{};
      bool visible = true;
      for (int j = 0; j < kJointCount && visible; ++j) {
        const Eigen::Vector4d hw(truth[static_cast<size_t>(j)].x,
                                 truth[static_cast<size_t>(j)].y,
                                 truth[static_cast<size_t>(j)].z, 1.0);
        const Eigen::Vector3d uvw = h.matrix() * hw;
        if (uvw.z() <= kProjectionScaleEps) {
          visible = false;
          break;
        }
        const double px = uvw.x() / uvw.z();
        const double py = uvw.y() / uvw.z();
        if (px < 0.0 || px > cam.image_width || py < 0.0 || py > cam.image_height) {
          visible = false;
          break;
        }
        keypoints[static_cast<size_t>(j)] = {px, py};
      }
      if (!visible) continue;

      PosePrior prior;
      prior.source_node = node.id;
      prior.timestamp = t;
      for (int j = 0; j < kJointCount; ++j) {
        PixelPoint noisy = keypoints[static_cast<size_t>(j)];
        noisy.x += node.pixel_noise.sigma_xp * gauss(rng);
        noisy.y += node.pixel_noise.sigma_yp * gauss(rng);
        prior.joints[static_cast<size_t>(j)] = joint_prior_from_keypoint(
            noisy, j, stature_prior, h, node.pixel_noise, skeleton);
      }
      priors.push_back(std::move(prior));
    }
    if (priors.empty()) continue;

    std::vector<LidarJointMeasurement> lidar;
    if (node.lidar_enabled) {
      for (int j : node.lidar_joints) {
        LidarJointMeasurement m;
        m.joint_index = j;
        m.mean = {truth[static_cast<size_t>(j)].x + node.lidar_sigma * gauss(rng),
                  truth[static_cast<size_t>(j)].y + node.lidar_sigma * gauss(rng),
                  truth[static_cast<size_t>(j)].z + node.lidar_sigma * gauss(rng)};
        m.cov = node.lidar_sigma * node.lidar_sigma * Eigen::Matrix3d::Identity();
        lidar.push_back(m);
      }
    }

    Detection det;
    det.object_class = ObjectClass::kHuman;
    det.node_id = node.id;
    det.timestamp = t;
    det.refined_pose = refine_pose(priors, skeleton, lidar);
    det.yaw = heading_from_pose(*det.refined_pose, skeleton);
    const WorldPoint& lh = det.refined_pose->joints[kLeftHip];
    const WorldPoint& rh = det.refined_pose->joints[kRightHip];
    det.position = {0.5 * (lh.x + rh.x), 0.5 * (lh.y + rh.y)};
    det.priors = std::move(priors);
    det.lidar = std::move(lidar);
    detections.push_back(std::move(det));
  }
  return detections;
}

std::vector<DeliveryItem> inject_latency(std::vector<Detection> detections,
                                         const NodeConfig& node, std::mt19937_64& rng,
                                         int& sequence_counter) {
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<DeliveryItem> items;
  items.reserve(detections.size());
  for (Detection& det : detections) {
    double delay = node.latency_fixed_ms / 1000.0;
    if (node.latency_jitter_ms > 0.0) {
      delay += jitter(rng) * node.latency_jitter_ms / 1000.0;
    }
    items.push_back({det.timestamp + delay, node.id, sequence_counter++, std::move(det)});
  }
  return items;
}

std::vector<Detection> merge_codetections(std::vector<Detection> detections,
                                          double merge_distance,
                                          const SkeletonModel& skeleton) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) {
                     return std::tie(a.timestamp, a.node_id) < std::tie(b.timestamp, b.node_id);
                   });

  std::vector<int> cluster(detections.size(), -1);
  int next_cluster = 0;
  for (size_t i = 0; i < detections.size(); ++i) {
    if (cluster[i] < 0) cluster[i] = next_cluster++;
    for (size_t j = i + 1; j < detections.size(); ++j) {
      if (detections[j].timestamp != detections[i].timestamp) break;
      if (cluster[j] >= 0) continue;
      if (detections[j].object_class != detections[i].object_class) continue;
      if ((detections[j].position - detections[i].position).norm() <= merge_distance) {
        cluster[j] = cluster[i];
      }
    }
  }

  std::vector<Detection> merged;
  for (int c = 0; c < next_cluster; ++c) {
    std::vector<size_t> members;
    for (size_t i = 0; i < detections.size(); ++i) {
      if (cluster[i] == c) members.push_back(i);
    }
    if (members.size() == 1) {
      merged.push_back(std::move(detections[members[0]]));
      continue;
    }

    Detection out;
    out.object_class = detections[members[0]].object_class;
    out.timestamp = detections[members[0]].timestamp;
    out.node_id = detections[members[0]].node_id;
    for (size_t m : members) {
      const Detection& d = detections[m];
      out.node_id = std::min(out.node_id, d.node_id);
      out.priors.insert(out.priors.end(), d.priors.begin(), d.priors.end());
      out.lidar.insert(out.lidar.end(), d.lidar.begin(), d.lidar.end());
    }
    if (out.object_class == ObjectClass::kHuman && !out.priors.empty()) {
      out.refined_pose = refine_pose(out.priors, skeleton, out.lidar);
      out.yaw = heading_from_pose(*out.refined_pose, skeleton);
      const WorldPoint& lh = out.refined_pose->joints[kLeftHip];
      const WorldPoint& rh = out.refined_pose->joints[kRightHip];
      out.position = {0.5 * (lh.x + rh.x), 0.5 * (lh.y + rh.y)};
    } else {
      out.position = detections[members[0]].position;
      out.yaw = detections[members[0]].yaw;
    }
    merged.push_back(std::move(out));
  }
  return merged;
}

EpisodeLog run_episode(const ScenarioConfig& cfg) {
  cfg.validate();

  EpisodeLog log;
  log.ts = cfg.robot.mpc.ts;
  log.geometry = cfg.robot.geometry;
  log.goal = cfg.world.path.back().position();
  log.goal_tolerance = cfg.world.goal_tolerance;

  std::vector<PedestrianState> peds;
  for (const PedestrianConfig& p : cfg.pedestrians) {
    peds.push_back(initial_pedestrian_state(p));
  }

  // One generator per node, derived from the scenario seed by fixed offsets,
  // so adding or removing nodes leaves the other streams untouched.
  std::vector<std::mt19937_64> node_rng;
  for (size_t i = 0; i < cfg.nodes.size(); ++i) {
    node_rng.emplace_back(cfg.seed + 1 + i);
  }

  Tracker tracker(cfg.fusion);
  Planner planner(cfg.robot.mpc, cfg.robot.geometry, cfg.ps);
  const Reference ref{cfg.world.path, cfg.robot.v_f_ref, cfg.robot.v_r_ref};

  RobotState state = cfg.robot.initial;
  ControlInput u_prev{};
  std::vector<DeliveryItem> pending;
  int sequence = 0;

  const int max_cycles = static_cast<int>(std::ceil(cfg.duration / log.ts));
  for (int k = 0; k < max_cycles; ++k) {
    const double t = k * log.ts;

    TruthRow truth;
    truth.t = t;
    truth.robot = state;
    for (const PedestrianState& p : peds) {
      truth.pedestrians.push_back({p.position.x(), p.position.y(), p.heading});
    }
    log.truth.push_back(truth);

    for (size_t ni = 0; ni < cfg.nodes.size(); ++ni) {
      std::vector<Detection> dets = synthesize_observations(
          peds, cfg.pedestrians, cfg.nodes[ni], cfg.skeleton, cfg.stature_prior, t,
          node_rng[ni]);
      int person_index = 0;
      for (const Detection& d : dets) {
        PerceptionRow row;
        row.t = t;
        row.node_id = cfg.nodes[ni].id;
        row.person_index = person_index++;
        row.yaw = d.yaw.value_or(0.0);
        row.joints = d.refined_pose ? d.refined_pose->joints : JointArray{};
        log.perception.push_back(row);
      }
      std::vector<DeliveryItem> items =
          inject_latency(std::move(dets), cfg.nodes[ni], node_rng[ni], sequence);
      pending.insert(pending.end(), std::make_move_iterator(items.begin()),
                     std::make_move_iterator(items.end()));
    }

    std::vector<DeliveryItem> due;
    std::vector<DeliveryItem> still_pending;
    for (DeliveryItem& item : pending) {
      (item.delivery_time <= t ? due : still_pending).push_back(std::move(item));
    }
    pending = std::move(still_pending);
    std::sort(due.begin(), due.end(), [](const DeliveryItem& a, const DeliveryItem& b) {
      return std::tie(a.delivery_time, a.node_id, a.sequence) <
             std::tie(b.delivery_time, b.node_id, b.sequence);
    });
    std::vector<Detection> delivered;
    delivered.reserve(due.size());
    for (DeliveryItem& item : due) delivered.push_back(std::move(item.detection));

    delivered = merge_codetections(std::move(delivered),
                                   0.5 * cfg.fusion.gate_distance, cfg.skeleton);

    const std::vector<FusedHuman> humans = tracker.fuse_step(
        std::move(delivered), t, cfg.robot.mpc.np, cfg.robot.mpc.ts);

    for (const FusedHuman& h : humans) {
      log.tracks.push_back({t, h.track_id, ObjectClass::kHuman, h.position.x(),
                            h.position.y(), h.speed, h.yaw, h.turn_rate, h.compensated});
    }

    std::vector<HumanPrediction> predictions;
    predictions.reserve(humans.size());
    for (const FusedHuman& h : humans) predictions.push_back({h.predicted});

    const PlanResult plan = planner.plan_step(state, u_prev, ref, predictions);

    PlanRow plan_row;
    plan_row.t = t;
    plan_row.state = state;
    plan_row.u0 = plan.u0;
    plan_row.status = plan.qp_status;
    plan_row.j1 = plan.j1;
    plan_row.j2 = plan.j2;
    plan_row.j3 = plan.j3;
    plan_row.solve_time_ms = plan.solve_time * 1000.0;
    for (size_t i = 1; i < plan.predicted_states.size(); ++i) {
      for (const HumanPrediction& hp : predictions) {
        if (hp.poses.empty()) continue;
        const size_t hi = std::min(i - 1, hp.poses.size() - 1);
        plan_row.min_predicted_clearance = std::min(
            plan_row.min_predicted_clearance,
            footprint_clearance(plan.predicted_states[i].pose(), cfg.robot.geometry,
                                hp.poses[hi].position()));
      }
    }
    log.plan.push_back(plan_row);

    state = step(state, plan.u0, cfg.robot.geometry, log.ts);
    u_prev = plan.u0;
    step_pedestrians(peds, cfg.pedestrians, log.ts);

    if ((Eigen::Vector2d(state.x, state.y) - log.goal).norm() <= log.goal_tolerance) {
      log.goal_reached = true;
      log.goal_time = (k + 1) * log.ts;
      break;
    }
  }

  // Terminal truth row so travel distance covers the final motion.
  TruthRow final_row;
  final_row.t = log.goal_reached ? log.goal_time : max_cycles * log.ts;
  final_row.robot = state;
  for (const PedestrianState& p : peds) {
    final_row.pedestrians.push_back({p.position.x(), p.position.y(), p.heading});
  }
  log.truth.push_back(final_row);
  return log;
}

std::string truth_csv(const EpisodeLog& log) {
  std::ostringstream out;
  const size_t peds = log.truth.empty() ? 0 : log.truth.front().pedestrians.size();
  out << "t,robot_x,robot_y,robot_psi";
  for (size_t i = 0; i < peds; ++i) {
    out << ",ped" << i << "_x,ped" << i << "_y,ped" << i << "_heading";
  }
  out << "\n";
  for (const TruthRow& row : log.truth) {
    out << format_number(row.t) << ',' << format_number(row.robot.x) << ','
        << format_number(row.robot.y) << ',' << format_number(row.robot.psi);
    for (const PlanarPose& p : row.pedestrians) {
      out << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
          << format_number(p.heading);
    }
    out << "\n";
  }
  return out.str();
}

std::string perception_csv(const EpisodeLog& log) {
  std::ostringstream out;
  out << "t,node_id,person_index,yaw";
  for (int j = 0; j < kJointCount; ++j) {
    out << ",j" << j << "_x,j" << j << "_y,j" << j << "_z";
  }
  out << "\n";
  for (const PerceptionRow& row : log.perception) {
    out << format_number(row.t) << ',' << row.node_id << ',' << row.person_index << ','
        << format_number(row.yaw);
    for (const WorldPoint& p : row.joints) {
      out << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
          << format_number(p.z);
    }
    out << "\n";
  }
  return out.str();
}

std::string tracks_csv(const EpisodeLog& log) {
  std::ostringstream out;
  out << "t,track_id,class,x,y,v,theta,omega,compensated\n";
  for (const TrackRow& row : log.tracks) {
    out << format_number(row.t) << ',' << row.track_id << ',' << class_name(row.object_class)
        << ',' << format_number(row.x) << ',' << format_number(row.y) << ','
        << format_number(row.v) << ',' << format_number(row.theta) << ','
        << format_number(row.omega) << ',' << (row.compensated ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string plan_csv(const EpisodeLog& log, bool include_timing) {
  std::ostringstream out;
  out << "t,x,y,psi,v_f,v_r,delta_f,delta_r,qp_status,j1,j2,j3";
  if (include_timing) out << ",solve_time_ms";
  out << ",min_predicted_clearance\n";
  for (const PlanRow& row : log.plan) {
    out << format_number(row.t) << ',' << format_number(row.state.x) << ','
        << format_number(row.state.y) << ',' << format_number(row.state.psi) << ','
        << format_number(row.u0.v_f) << ',' << format_number(row.u0.v_r) << ','
        << format_number(row.u0.delta_f) << ',' << format_number(row.u0.delta_r) << ','
        << status_name(row.status) << ',' << format_number(row.j1) << ','
        << format_number(row.j2) << ',' << format_number(row.j3);
    if (include_timing) out << ',' << format_number(row.solve_time_ms);
    out << ',' << format_number(row.min_predicted_clearance) << "\n";
  }
  return out.str();
}

std::string metrics_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "position_mae,position_rmse,yaw_mae_deg,yaw_rmse_deg,matched_samples,"
         "clearance_min,clearance_mean,travel_distance,travel_time,goal_reached,"
         "solve_ms_median,solve_ms_mean,solve_ms_p95,solve_ms_max\n";
  out << format_number(r.position_mae) << ',' << format_number(r.position_rmse) << ','
      << format_number(r.yaw_mae_deg) << ',' << format_number(r.yaw_rmse_deg) << ','
      << r.matched_samples << ',' << format_number(r.clearance_min) << ','
      << format_number(r.clearance_mean) << ',' << format_number(r.travel_distance) << ','
      << format_number(r.travel_time) << ',' << (r.goal_reached ? 1 : 0) << ','
      << format_number(r.solve_ms_median) << ',' << format_number(r.solve_ms_mean) << ','
      << format_number(r.solve_ms_p95) << ',' << format_number(r.solve_ms_max) << "\n";
  return out.str();
}

void write_episode_logs(const EpisodeLog& log, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + name + " in " + dir);
    out << content;
  };
  write("truth.csv", truth_csv(log));
  write("perception.csv", perception_csv(log));
  write("tracks.csv", tracks_csv(log));
  write("plan.csv", plan_csv(log));
  write("metrics.csv", metrics_csv(compute_metrics(log)));

  nlohmann::json meta;
  meta["ts"] = log.ts;
  meta["goal"] = {log.goal.x(), log.goal.y()};
  meta["goal_tolerance"] = log.goal_tolerance;
  meta["geometry"] = {{"l_f", log.geometry.l_f},
                      {"l_r", log.geometry.l_r},
                      {"half_width", log.geometry.half_width}};
  meta["goal_reached"] = log.goal_reached;
  meta["goal_time"] = log.goal_time;
  write("meta.json", meta.dump(2) + "\n");
}

EpisodeLog read_episode_logs(const std::string& dir) {
  namespace fs = std::filesystem;
  auto read_file = [&](const std::string& name) {
    std::ifstream in(fs::path(dir) / name, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + name + " in " + dir);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };

  EpisodeLog log;
  const nlohmann::json meta = nlohmann::json::parse(read_file("meta.json"));
  log.ts = meta.at("ts").get<double>();
  log.goal = {meta.at("goal")[0].get<double>(), meta.at("goal")[1].get<double>()};
  log.goal_tolerance = meta.at("goal_tolerance").get<double>();
  log.geometry.l_f = meta.at("geometry").at("l_f").get<double>();
  log.geometry.l_r = meta.at("geometry").at("l_r").get<double>();
  log.geometry.half_width = meta.at("geometry").at("half_width").get<double>();
  log.goal_reached = meta.at("goal_reached").get<bool>();
  log.goal_time = meta.at("goal_time").get<double>();

  auto for_each_row = [](const std::string& content, auto&& fn) {
    std::istringstream in(content);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      fn(split_csv(line));
    }
  };

  for_each_row(read_file("truth.csv"), [&](const std::vector<std::string>& f) {
    TruthRow row;
    row.t = parse_number(f.at(0));
    row.robot = {parse_number(f.at(1)), parse_number(f.at(2)), parse_number(f.at(3))};
    for (size_t i = 4; i + 3 <= f.size(); i += 3) {
      row.pedestrians.push_back({parse_number(f.at(i)), parse_number(f.at(i + 1)),
                                 parse_number(f.at(i + 2))});
    }
    log.truth.push_back(std::move(row));
  });

  for_each_row(read_file("tracks.csv"), [&](const std::vector<std::string>& f) {
    TrackRow row;
    row.t = parse_number(f.at(0));
    row.track_id = static_cast<int>(parse_number(f.at(1)));
    row.object_class = f.at(2) == "robot" ? ObjectClass::kRobot : ObjectClass::kHuman;
    row.x = parse_number(f.at(3));
    row.y = parse_number(f.at(4));
    row.v = parse_number(f.at(5));
    row.theta = parse_number(f.at(6));
    row.omega = parse_number(f.at(7));
    row.compensated = parse_number(f.at(8)) != 0.0;
    log.tracks.push_back(row);
  });

  for_each_row(read_file("plan.csv"), [&](const std::vector<std::string>& f) {
    PlanRow row;
    row.t = parse_number(f.at(0));
    row.state = {parse_number(f.at(1)), parse_number(f.at(2)), parse_number(f.at(3))};
    row.u0 = {parse_number(f.at(4)), parse_number(f.at(5)), parse_number(f.at(6)),
              parse_number(f.at(7))};
    row.status = status_from_name(f.at(8));
    row.j1 = parse_number(f.at(9));
    row.j2 = parse_number(f.at(10));
    row.j3 = parse_number(f.at(11));
    row.solve_time_ms = parse_number(f.at(12));
    row.min_predicted_clearance = parse_number(f.at(13));
    log.plan.push_back(row);
  });
  return log;
}

}  // namespace socnav
