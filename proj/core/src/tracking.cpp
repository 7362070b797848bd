#include "socnav/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Dense>

#include "socnav/angles.hpp"
#include "socnav/error.hpp"

namespace socnav {

namespace {

constexpr double kOmegaEps = 1e-6;

void cvtr_mean(CvtrState& s, double dt) {
  const double v = s(2), theta = s(3), omega = s(4);
  if (std::abs(omega) > kOmegaEps) {
    s(0) += (v / omega) * (std::sin(theta + omega * dt) - std::sin(theta));
    s(1) += (v / omega) * (-std::cos(theta + omega * dt) + std::cos(theta));
  } else {
    s(0) += v * std::cos(theta) * dt;
    s(1) += v * std::sin(theta) * dt;
  }
  s(3) = wrap_angle(theta + omega * dt);
}

CvtrCov cvtr_jacobian(const CvtrState& s, double dt) {
  const double v = s(2), theta = s(3), omega = s(4);
  CvtrCov f = CvtrCov::Identity();
  if (std::abs(omega) > kOmegaEps) {
    const double st = std::sin(theta), ct = std::cos(theta);
    const double st1 = std::sin(theta + omega * dt), ct1 = std::cos(theta + omega * dt);
    f(0, 2) = (st1 - st) / omega;
    f(0, 3) = (v / omega) * (ct1 - ct);
    f(0, 4) = (v / omega) * dt * ct1 - (v / (omega * omega)) * (st1 - st);
    f(1, 2) = (-ct1 + ct) / omega;
    f(1, 3) = (v / omega) * (st1 - st);
    f(1, 4) = (v / omega) * dt * st1 - (v / (omega * omega)) * (-ct1 + ct);
  } else {
    const double st = std::sin(theta), ct = std::cos(theta);
    f(0, 2) = ct * dt;
    f(0, 3) = -v * st * dt;
    f(0, 4) = -0.5 * v * st * dt * dt;
    f(1, 2) = st * dt;
    f(1, 3) = v * ct * dt;
    f(1, 4) = 0.5 * v * ct * dt * dt;
  }
  f(3, 4) = dt;
  return f;
}

CvtrCov process_noise_cov(const CvtrState& s, double dt, const ProcessNoise& q) {
  // White acceleration on v, white turn acceleration on omega.
  const double theta = s(3);
  Eigen::Matrix<double, 5, 2> g = Eigen::Matrix<double, 5, 2>::Zero();
  g(0, 0) = 0.5 * dt * dt * std::cos(theta);
  g(1, 0) = 0.5 * dt * dt * std::sin(theta);
  g(2, 0) = dt;
  g(3, 1) = 0.5 * dt * dt;
  g(4, 1) = dt;
  Eigen::Vector2d var(q.sigma_accel * q.sigma_accel,
                      q.sigma_turn_accel * q.sigma_turn_accel);
  return g * var.asDiagonal() * g.transpose();
}

void symmetrize(CvtrCov& p) { p = 0.5 * (p + p.transpose()).eval(); }

Track spawn_track(const Detection& det, const FusionConfig& cfg, int id) {
  Track t;
  t.id = id;
  t.object_class = det.object_class;
  t.state.setZero();
  t.state(0) = det.position.x();
  t.state(1) = det.position.y();
  t.state(3) = det.yaw.value_or(0.0);
  t.cov.setZero();
  const double pos_var = cfg.measurement_noise.sigma_xy * cfg.measurement_noise.sigma_xy;
  t.cov(0, 0) = pos_var;
  t.cov(1, 1) = pos_var;
  t.cov(2, 2) = 1.0;  // unknown speed
  t.cov(3, 3) = det.yaw ? cfg.measurement_noise.sigma_yaw * cfg.measurement_noise.sigma_yaw
                        : std::numbers::pi * std::numbers::pi / 3.0;
  t.cov(4, 4) = 0.5;
  t.last_update = det.timestamp;
  t.hits = 1;
  t.confirmed = cfg.spawn_confirmations <= 1;
  return t;
}

}  // namespace

std::pair<CvtrState, CvtrCov> cvtr_predict(const CvtrState& state, const CvtrCov& cov,
                                           double dt, const ProcessNoise& q) {
  if (dt < 0.0) throw ConfigError("cvtr_predict requires dt >= 0");
  CvtrState s = state;
  const CvtrCov f = cvtr_jacobian(state, dt);
  cvtr_mean(s, dt);
  CvtrCov p = f * cov * f.transpose() + process_noise_cov(state, dt, q);
  symmetrize(p);
  return {s, p};
}

Association associate(const std::vector<Detection>& detections,
                      const std::vector<Track>& tracks, const FusionConfig& cfg) {
  struct Candidate {
    double distance;
    int track_id;
    int det_index;
    int track_index;
  };
  std::vector<Candidate> candidates;
  for (size_t d = 0; d < detections.size(); ++d) {
    for (size_t t = 0; t < tracks.size(); ++t) {
      if (detections[d].object_class != tracks[t].object_class) continue;
      const double dist =
          (detections[d].position - tracks[t].state.head<2>()).norm();
      if (dist <= cfg.gate_distance) {
        candidates.push_back({dist, tracks[t].id, static_cast<int>(d), static_cast<int>(t)});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.track_id, a.det_index) <
           std::tie(b.distance, b.track_id, b.det_index);
  });

  Association out;
  std::vector<bool> det_used(detections.size(), false);
  std::vector<bool> track_used(tracks.size(), false);
  for (const Candidate& c : candidates) {
    if (det_used[static_cast<size_t>(c.det_index)] ||
        track_used[static_cast<size_t>(c.track_index)]) {
      continue;
    }
    det_used[static_cast<size_t>(c.det_index)] = true;
    track_used[static_cast<size_t>(c.track_index)] = true;
    out.matches.emplace_back(c.det_index, c.track_index);
  }
  for (size_t d = 0; d < detections.size(); ++d) {
    if (!det_used[d]) out.unmatched_detections.push_back(static_cast<int>(d));
  }
  for (size_t t = 0; t < tracks.size(); ++t) {
    if (!track_used[t]) out.unmatched_tracks.push_back(static_cast<int>(t));
  }
  return out;
}

Track ekf_update(const Track& track, const Detection& detection,
                 const FusionConfig& cfg) {
  const bool with_yaw = detection.yaw.has_value();
  const int m = with_yaw ? 3 : 2;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, 5);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  if (with_yaw) h(2, 3) = 1.0;

  Eigen::VectorXd innovation(m);
  innovation(0) = detection.position.x() - track.state(0);
  innovation(1) = detection.position.y() - track.state(1);
  if (with_yaw) innovation(2) = angle_diff(*detection.yaw, track.state(3));

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  const double pos_var = cfg.measurement_noise.sigma_xy * cfg.measurement_noise.sigma_xy;
  r(0, 0) = pos_var;
  r(1, 1) = pos_var;
  if (with_yaw) r(2, 2) = cfg.measurement_noise.sigma_yaw * cfg.measurement_noise.sigma_yaw;

  const Eigen::MatrixXd s = h * track.cov * h.transpose() + r;
  const Eigen::MatrixXd k = track.cov * h.transpose() * s.ldlt().solve(
                                Eigen::MatrixXd::Identity(m, m));

  Track out = track;
  out.state += k * innovation;
  out.state(3) = wrap_angle(out.state(3));
  const CvtrCov ikh = CvtrCov::Identity() - k * h;
  out.cov = ikh * track.cov * ikh.transpose() + k * r * k.transpose();
  symmetrize(out.cov);
  return out;
}

Track compensate_delay(const Track& track, double now, const ProcessNoise& q) {
  if (now < track.last_update) throw ConfigError("compensate_delay requires now >= last_update");
  Track out = track;
  std::tie(out.state, out.cov) = cvtr_predict(track.state, track.cov, now - track.last_update, q);
  out.last_update = now;
  return out;
}

std::vector<PersonPose> predict_person_trajectory(const CvtrState& state, int steps,
                                                  double dt) {
  std::vector<PersonPose> out;
  out.reserve(static_cast<size_t>(steps));
  CvtrState s = state;
  for (int i = 0; i < steps; ++i) {
    cvtr_mean(s, dt);
    out.push_back({s(0), s(1), s(3)});
  }
  return out;
}

std::vector<FusedHuman> Tracker::fuse_step(std::vector<Detection> detections, double now,
                                           int prediction_steps, double prediction_dt) {
  if (!cfg_.delay_compensation) {
    for (Detection& d : detections) d.timestamp = now;
  }

  // Stable processing order: capture stamp, then node, then arrival order.
  std::vector<int> order(detections.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Detection& da = detections[static_cast<size_t>(a)];
    const Detection& db = detections[static_cast<size_t>(b)];
    return std::tie(da.timestamp, da.node_id) < std::tie(db.timestamp, db.node_id);
  });

  std::vector<bool> matched_this_step(tracks_.size(), false);
  std::vector<bool> spawned_this_step(tracks_.size(), false);
  auto mark_matched = [&](size_t idx) {
    if (idx >= matched_this_step.size()) {
      matched_this_step.resize(idx + 1, false);
      spawned_this_step.resize(idx + 1, false);
    }
    matched_this_step[idx] = true;
  };

  // Process per (stamp, node) batch: detections within a batch are distinct
  // objects, so association is one-to-one; the same track may still be updated
  // by several nodes in one cycle through successive batches.
  size_t pos = 0;
  while (pos < order.size()) {
    size_t end = pos;
    const Detection& head = detections[static_cast<size_t>(order[pos])];
    while (end < order.size()) {
      const Detection& d = detections[static_cast<size_t>(order[end])];
      if (d.timestamp != head.timestamp || d.node_id != head.node_id) break;
      ++end;
    }

    std::vector<Detection> batch;
    for (size_t i = pos; i < end; ++i) batch.push_back(detections[static_cast<size_t>(order[i])]);
    const double stamp = head.timestamp;

    // Gate against track positions predicted to the batch stamp.
    std::vector<Track> predicted = tracks_;
    for (Track& t : predicted) {
      const double dt = std::max(0.0, stamp - t.last_update);
      std::tie(t.state, t.cov) = cvtr_predict(t.state, t.cov, dt, cfg_.process_noise);
    }
    const Association assoc = associate(batch, predicted, cfg_);

    for (const auto& [det_idx, trk_idx] : assoc.matches) {
      Track& t = tracks_[static_cast<size_t>(trk_idx)];
      const double dt = stamp - t.last_update;
      if (dt > 0.0) {
        std::tie(t.state, t.cov) = cvtr_predict(t.state, t.cov, dt, cfg_.process_noise);
        t.last_update = stamp;
      }
      t = ekf_update(t, batch[static_cast<size_t>(det_idx)], cfg_);
      mark_matched(static_cast<size_t>(trk_idx));
    }
    for (int det_idx : assoc.unmatched_detections) {
      tracks_.push_back(spawn_track(batch[static_cast<size_t>(det_idx)], cfg_, next_id_++));
      mark_matched(tracks_.size() - 1);
      spawned_this_step[tracks_.size() - 1] = true;
    }
    pos = end;
  }

  // Lifecycle: confirmations count once per fusion cycle; a missed pending
  // track dies immediately, a confirmed one after miss_limit cycles.
  matched_this_step.resize(tracks_.size(), false);
  spawned_this_step.resize(tracks_.size(), false);
  std::vector<Track> kept;
  kept.reserve(tracks_.size());
  for (size_t i = 0; i < tracks_.size(); ++i) {
    Track& t = tracks_[i];
    if (matched_this_step[i]) {
      t.misses = 0;
      if (!t.confirmed && !spawned_this_step[i]) {
        ++t.hits;
        if (t.hits >= cfg_.spawn_confirmations) t.confirmed = true;
      }
      kept.push_back(t);
    } else {
      if (!t.confirmed) continue;  // drop pending on first miss
      if (++t.misses >= cfg_.miss_limit) continue;
      kept.push_back(t);
    }
  }
  tracks_ = std::move(kept);

  std::vector<FusedHuman> humans;
  for (const Track& t : tracks_) {
    if (!t.confirmed || t.object_class != ObjectClass::kHuman) continue;
    Track current = t;
    if (cfg_.delay_compensation && now > t.last_update) {
      current = compensate_delay(t, now, cfg_.process_noise);
    }
    FusedHuman h;
    h.track_id = t.id;
    h.position = current.state.head<2>();
    h.speed = current.state(2);
    h.yaw = current.state(3);
    h.turn_rate = current.state(4);
    h.compensated = cfg_.delay_compensation;
    h.predicted = predict_person_trajectory(current.state, prediction_steps, prediction_dt);
    humans.push_back(std::move(h));
  }
  return humans;
}

}  // namespace socnav
