#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "softcbf/softcbf.hpp"

namespace fs = std::filesystem;
using namespace softcbf;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<double> dt;
  std::optional<double> duration;
};

Scenario load_with_overrides(const std::string& path, const Globals& g) {
  Scenario sc = load_scenario(path);
  if (g.seed) sc.seed = *g.seed;
  if (g.dt) sc.dt_s = *g.dt;
  if (g.duration) sc.duration_s = *g.duration;
  sc.validate();
  return sc;
}

fs::path out_file(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

void print_summary(const std::string& label, const TrajectoryLog& log) {
  std::printf("%s: %zu records, rmse %.6g m, min barrier %.6g m, final V %.6g m^2, control %.6g s total (%.3g us/step)\n",
              label.c_str(), log.size(), log.summary.rmse, log.summary.min_barrier, log.summary.final_V,
              log.summary.control_seconds_total, 1e6 * log.summary.control_seconds_mean);
}

nlohmann::json plan_json(const PlanResult& r) {
  nlohmann::json j;
  j["reached_goal"] = r.reached_goal;
  j["best_V"] = r.best_V;
  j["samples_used"] = r.samples_used;
  j["planning_seconds"] = r.planning_seconds;
  j["tree_nodes"] = r.nodes.size();
  j["rewires"] = r.rewires;
  j["waypoints"] = nlohmann::json::array();
  for (const auto& w : r.waypoints) j["waypoints"].push_back(std::vector<double>(w.data(), w.data() + w.size()));
  return j;
}

int cmd_run(const Globals& g, const std::string& path, const std::string& controller) {
  Scenario sc = load_with_overrides(path, g);
  if (!controller.empty()) sc.controller = controller_from_string(controller);
  std::string tag = to_string(sc.controller);
  if (tag == "rrt*") tag = "rrt_star";
  const fs::path csv = out_file(g, sc.name + "_" + tag + ".csv");
  TrajectoryLog log;
  try {
    if (sc.controller == ControllerKind::rrt_star) {
      BaselineRun b = run_baseline(sc);
      std::printf("planner: %d samples, %.3f s, best V %.6g, %zu waypoints, goal %s\n", b.plan.samples_used,
                  b.plan.planning_seconds, b.plan.best_V, b.plan.waypoints.size(), b.plan.reached_goal ? "yes" : "no");
      std::ofstream(out_file(g, sc.name + "_plan.json")) << plan_json(b.plan).dump(2) << '\n';
      log = std::move(b.log);
    } else {
      log = run_scenario(sc);
    }
  } catch (const SimulationError& e) {
    write_csv(csv.string(), e.partial_log());
    std::fprintf(stderr, "simulation stopped: %s (partial log in %s)\n", e.what(), csv.c_str());
    return 2;
  }
  write_csv(csv.string(), log);
  print_summary(sc.name + " [" + to_string(sc.controller) + "]", log);
  std::printf("log: %s\n", csv.c_str());
  return 0;
}

int cmd_plan(const Globals& g, const std::string& path) {
  Scenario sc = load_with_overrides(path, g);
  if (!sc.task.setpoint) throw InvalidArgument("plan needs a setpoint scenario");
  const PlanResult r = plan(sc.robot, sc.start(), *sc.task.setpoint, sc.obstacles, planner_config(sc));
  const fs::path f = out_file(g, sc.name + "_plan.json");
  std::ofstream(f) << plan_json(r).dump(2) << '\n';
  std::printf("planner: %d samples, %.3f s, best V %.6g, %zu waypoints, goal %s\nplan: %s\n", r.samples_used,
              r.planning_seconds, r.best_V, r.waypoints.size(), r.reached_goal ? "yes" : "no", f.c_str());
  return 0;
}

int cmd_table1(const Globals& g, int instances, int calls) {
  const Table1Report r = benchmark_table1(instances, calls, 6, g.seed.value_or(0));
  const fs::path f = out_file(g, "table1.csv");
  std::ofstream os(f);
  write_table1_csv(os, r);
  write_table1_csv(std::cout, r);
  std::printf("speedup %.2fx (interior point without polish: %.2fx)\nreport: %s\n", r.speedup, r.speedup_raw,
              f.c_str());
  return 0;
}

int cmd_resolution(const Globals& g, const std::vector<int>& n_res, int configs, const std::string& path) {
  Scenario sc;
  if (!path.empty()) {
    sc = load_with_overrides(path, g);
  } else {
    sc.obstacles = {{Vec3(0.10, 0.08, 0.24), 0.02}, {Vec3(0.12, 0.06, 0.32), 0.02}, {Vec3(0.04, 0.055, 0.20), 0.02}};
    sc.task.setpoint = Vec3(0.10, 0.05, 0.32);
  }
  ResolutionOptions opt;
  opt.n_configurations = configs;
  opt.seed = g.seed.value_or(0);
  const auto rows = benchmark_resolution_scaling(n_res, sc.robot, sc.layout, sc.obstacles,
                                                 task_reference(sc.task, 0.0), sc.safety, opt);
  const fs::path f = out_file(g, "resolution.csv");
  std::ofstream os(f);
  write_resolution_csv(os, rows);
  write_resolution_csv(std::cout, rows);
  std::printf("report: %s\n", f.c_str());
  return 0;
}

int cmd_validate(const Globals& g) {
  bool ok = true;
  for (const auto& c : run_validation(g.seed.value_or(0))) {
    std::printf("%-20s %s  %s\n", c.name.c_str(), c.passed ? "ok  " : "FAIL", c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form CLF-CBF control of tendon-driven continuum robots"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Override the random seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--dt", g.dt, "Override the time step [s]")->check(CLI::PositiveNumber);
  app.add_option("--duration", g.duration, "Override the duration [s]")->check(CLI::NonNegativeNumber);

  std::string scenario_path, controller;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write its trajectory log");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--controller", controller, "closed-form | qp | rrt* | clf-only");

  auto* plan_cmd = app.add_subcommand("plan", "Run the sampling planner alone and write the plan");
  plan_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "Benchmarks");
  bench->require_subcommand(1);
  int instances = 200, calls = 10000, configs = 10;
  std::vector<int> n_res{25, 50, 100, 200, 400, 800};
  auto* table1 = bench->add_subcommand("table1", "Closed form against the interior-point oracle");
  table1->add_option("--instances", instances)->capture_default_str();
  table1->add_option("--calls", calls)->capture_default_str();
  std::string res_scenario;
  auto* resolution = bench->add_subcommand("resolution", "Cost and body error against sphere count");
  resolution->add_option("--n-res", n_res, "Sphere counts")->capture_default_str();
  resolution->add_option("--configs", configs, "Random configurations")->capture_default_str();
  resolution->add_option("--scenario", res_scenario, "Take robot, obstacles and target from a scenario")
      ->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "Run the invariant checks");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(g, scenario_path, controller);
    if (*plan_cmd) return cmd_plan(g, scenario_path);
    if (*table1) return cmd_table1(g, instances, calls);
    if (*resolution) return cmd_resolution(g, n_res, configs, res_scenario);
    if (*validate) return cmd_validate(g);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
