// Command-line front end: scenario runner, metrics reader, seed/latency
// sweeps, and a personal-space field exporter.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "socnav/metrics.hpp"
#include "socnav/scenario.hpp"
#include "socnav/sim.hpp"
#include "socnav/social_field.hpp"

namespace {

using namespace socnav;

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> latency_ms;
  std::optional<double> ps_weight;
  bool disable_lidar{false};
  std::optional<int> nodes;
  std::optional<bool> delay_compensation;
};

ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.latency_ms) {
    for (NodeConfig& n : cfg.nodes) n.latency_fixed_ms = *o.latency_ms;
  }
  if (o.ps_weight) cfg.robot.mpc.ps_weight = *o.ps_weight;
  if (o.disable_lidar) {
    for (NodeConfig& n : cfg.nodes) n.lidar_enabled = false;
  }
  if (o.nodes) {
    if (*o.nodes < 0 || static_cast<size_t>(*o.nodes) > cfg.nodes.size()) {
      throw ConfigError("--nodes exceeds the scenario's node count");
    }
    cfg.nodes.resize(static_cast<size_t>(*o.nodes));
  }
  if (o.delay_compensation) cfg.fusion.delay_compensation = *o.delay_compensation;
  return cfg;
}

void print_report(const MetricsReport& r) {
  std::printf("position error      : MAE %.4f m, RMSE %.4f m (%d samples)\n",
              r.position_mae, r.position_rmse, r.matched_samples);
  std::printf("yaw error           : MAE %.2f deg, RMSE %.2f deg\n", r.yaw_mae_deg,
              r.yaw_rmse_deg);
  std::printf("clearance           : min %.3f m, mean %.3f m\n", r.clearance_min,
              r.clearance_mean);
  std::printf("travel              : %.2f m in %.1f s (goal %s)\n", r.travel_distance,
              r.travel_time, r.goal_reached ? "reached" : "not reached");
  std::printf("plan solve time [ms]: median %.2f, mean %.2f, p95 %.2f, max %.2f\n",
              r.solve_ms_median, r.solve_ms_mean, r.solve_ms_p95, r.solve_ms_max);
}

int cmd_run(const std::string& scenario_path, const RunOverrides& overrides,
            std::string out_dir) {
  const ScenarioConfig cfg = apply_overrides(load_scenario(scenario_path), overrides);
  if (out_dir.empty()) {
    const std::string stem = std::filesystem::path(scenario_path).stem().string();
    out_dir = "logs/" + stem + "_seed" + std::to_string(cfg.seed);
  }
  const EpisodeLog log = run_episode(cfg);
  write_episode_logs(log, out_dir);
  std::printf("scenario : %s\n", scenario_path.c_str());
  std::printf("seed     : %llu\n", static_cast<unsigned long long>(cfg.seed));
  std::printf("logs     : %s\n", out_dir.c_str());
  print_report(compute_metrics(log));
  return 0;
}

int cmd_metrics(const std::string& log_dir) {
  const EpisodeLog log = read_episode_logs(log_dir);
  const MetricsReport report = compute_metrics(log);
  print_report(report);
  std::ofstream out(std::filesystem::path(log_dir) / "metrics.csv", std::ios::binary);
  out << metrics_csv(report);
  std::printf("metrics.csv written to %s\n", log_dir.c_str());
  return 0;
}

int cmd_sweep(const std::string& scenario_path, int seeds, std::uint64_t seed_base,
              const std::vector<double>& latencies, const RunOverrides& base_overrides,
              const std::string& out_file) {
  const std::vector<double> levels = latencies.empty()
                                         ? std::vector<double>{-1.0}  // scenario default
                                         : latencies;
  std::ostringstream csv;
  csv << "latency_ms,seed,position_mae,position_rmse,yaw_mae_deg,clearance_min,"
         "travel_distance,travel_time,goal_reached\n";

  struct Group {
    double latency;
    std::vector<MetricsReport> reports;
  };
  std::vector<Group> groups;
  for (double latency : levels) {
    Group group{latency, {}};
    for (int s = 0; s < seeds; ++s) {
      RunOverrides o = base_overrides;
      o.seed = seed_base + static_cast<std::uint64_t>(s);
      if (latency >= 0.0) o.latency_ms = latency;
      const ScenarioConfig cfg = apply_overrides(load_scenario(scenario_path), o);
      const MetricsReport r = compute_metrics(run_episode(cfg));
      group.reports.push_back(r);
      csv << (latency >= 0.0 ? latency : 0.0) << ',' << *o.seed << ',' << r.position_mae
          << ',' << r.position_rmse << ',' << r.yaw_mae_deg << ',' << r.clearance_min
          << ',' << r.travel_distance << ',' << r.travel_time << ','
          << (r.goal_reached ? 1 : 0) << "\n";
      std::printf(
          "latency %6.1f ms seed %llu: pos MAE %.4f m, clearance %.3f m, time %.1f s\n",
          latency >= 0.0 ? latency : 0.0, static_cast<unsigned long long>(*o.seed),
          r.position_mae, r.clearance_min, r.travel_time);
    }
    groups.push_back(std::move(group));
  }

  auto mean_std = [](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::make_pair(mean, v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0);
  };
  for (const Group& g : groups) {
    auto col = [&](auto getter) {
      std::vector<double> v;
      for (const MetricsReport& r : g.reports) v.push_back(getter(r));
      return mean_std(v);
    };
    const auto pos = col([](const MetricsReport& r) { return r.position_mae; });
    const auto clr = col([](const MetricsReport& r) { return r.clearance_min; });
    const auto dst = col([](const MetricsReport& r) { return r.travel_distance; });
    const auto tme = col([](const MetricsReport& r) { return r.travel_time; });
    csv << (g.latency >= 0.0 ? g.latency : 0.0) << ",mean," << pos.first << ",,,"
        << clr.first << ',' << dst.first << ',' << tme.first << ",\n";
    csv << (g.latency >= 0.0 ? g.latency : 0.0) << ",std," << pos.second << ",,,"
        << clr.second << ',' << dst.second << ',' << tme.second << ",\n";
    std::printf(
        "latency %6.1f ms aggregate: pos MAE %.4f +/- %.4f m, clearance %.3f +/- %.3f m, "
        "time %.1f +/- %.1f s\n",
        g.latency >= 0.0 ? g.latency : 0.0, pos.first, pos.second, clr.first, clr.second,
        tme.first, tme.second);
  }

  std::ofstream out(out_file, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", out_file.c_str());
    return 1;
  }
  out << csv.str();
  std::printf("sweep CSV written to %s\n", out_file.c_str());
  return 0;
}

int cmd_field_grid(double sigma_yy, double k, double weight, double heading, double range,
                   double step, const std::string& out_file) {
  const PsParams params = PsParams::from_lateral_variance(sigma_yy, k, weight);
  params.validate();
  const PersonPose person{0.0, 0.0, heading};
  std::ostringstream csv;
  csv << "x,y,omega\n";
  for (double x = -range; x <= range + 1e-9; x += step) {
    for (double y = -range; y <= range + 1e-9; y += step) {
      csv << x << ',' << y << ',' << ps_value(person, {x, y}, params) << "\n";
    }
  }
  std::ofstream out(out_file, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", out_file.c_str());
    return 1;
  }
  out << csv.str();
  std::printf("field grid written to %s\n", out_file.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infrastructure-assisted social navigation simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one scenario episode and write logs");
  std::string scenario_path;
  std::string out_dir;
  RunOverrides overrides;
  std::uint64_t seed_value = 0;
  double latency_value = 0.0, ps_weight_value = 0.0;
  int nodes_value = 0;
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  auto* seed_opt = run->add_option("--seed", seed_value, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory (default logs/<stem>_seed<N>)");
  auto* lat_opt =
      run->add_option("--latency-ms", latency_value, "Override fixed latency on all nodes");
  auto* psw_opt = run->add_option("--ps-weight", ps_weight_value,
                                  "Override the personal-space cost weight");
  run->add_flag("--disable-lidar", overrides.disable_lidar, "Disable LiDAR on all nodes");
  auto* nodes_opt = run->add_option("--nodes", nodes_value, "Use only the first N sensor nodes")
                        ->check(CLI::Range(1, 64));
  bool no_compensation = false;
  run->add_flag("--no-delay-compensation", no_compensation,
                "Baseline fusion: ignore detection stamps");

  auto* metrics = app.add_subcommand("metrics", "Recompute metrics from a log directory");
  std::string log_dir;
  metrics->add_option("log_dir", log_dir, "Directory with truth/tracks/plan CSVs")->required();

  auto* sweep = app.add_subcommand("sweep", "Repeat a scenario across seeds and latencies");
  std::string sweep_scenario, sweep_out = "sweep.csv";
  int sweep_seeds = 10;
  std::uint64_t sweep_seed_base = 1;
  std::vector<double> sweep_latencies;
  RunOverrides sweep_overrides;
  double sweep_ps_weight = 0.0;
  sweep->add_option("scenario", sweep_scenario, "Scenario JSON file")->required();
  sweep->add_option("--seeds", sweep_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  sweep->add_option("--seed-base", sweep_seed_base, "First seed value");
  sweep->add_option("--latencies", sweep_latencies,
                    "Fixed latency levels in ms (default: scenario value)");
  auto* sweep_psw =
      sweep->add_option("--ps-weight", sweep_ps_weight, "Override the personal-space weight");
  sweep->add_flag("--disable-lidar", sweep_overrides.disable_lidar,
                  "Disable LiDAR on all nodes");
  bool sweep_no_comp = false;
  sweep->add_flag("--no-delay-compensation", sweep_no_comp,
                  "Baseline fusion: ignore detection stamps");
  sweep->add_option("--out", sweep_out, "Output CSV path");

  auto* grid = app.add_subcommand("field-grid", "Export the personal-space field as CSV");
  double grid_sigma_yy = 0.36, grid_k = 100.0, grid_weight = 1.0, grid_heading = 0.0;
  double grid_range = 3.0, grid_step = 0.05;
  std::string grid_out = "field.csv";
  grid->add_option("--sigma-yy", grid_sigma_yy, "Lateral/rear variance in m^2");
  grid->add_option("--k", grid_k, "Front/rear blend slope in 1/m");
  grid->add_option("--weight", grid_weight, "Cost scale");
  grid->add_option("--heading", grid_heading, "Person heading in rad");
  grid->add_option("--range", grid_range, "Half extent of the grid in m");
  grid->add_option("--step", grid_step, "Grid resolution in m");
  grid->add_option("--out", grid_out, "Output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (*seed_opt) overrides.seed = seed_value;
      if (*lat_opt) overrides.latency_ms = latency_value;
      if (*psw_opt) overrides.ps_weight = ps_weight_value;
      if (*nodes_opt) overrides.nodes = nodes_value;
      if (no_compensation) overrides.delay_compensation = false;
      return cmd_run(scenario_path, overrides, out_dir);
    }
    if (metrics->parsed()) return cmd_metrics(log_dir);
    if (sweep->parsed()) {
      if (*sweep_psw) sweep_overrides.ps_weight = sweep_ps_weight;
      if (sweep_no_comp) sweep_overrides.delay_compensation = false;
      return cmd_sweep(sweep_scenario, sweep_seeds, sweep_seed_base, sweep_latencies,
                       sweep_overrides, sweep_out);
    }
    if (grid->parsed()) {
      return cmd_field_grid(grid_sigma_yy, grid_k, grid_weight, grid_heading, grid_range,
                            grid_step, grid_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
