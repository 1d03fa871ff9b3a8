#pragma once

// Closed-loop simulation: scenario definition, reference signals, the
// fixed-step loop with zero-order hold on the input, and log metrics.

#include <chrono>
#include <concepts>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softcbf/closed_form.hpp"
#include "softcbf/errors.hpp"
#include "softcbf/hausdorff.hpp"
#include "softcbf/integrator.hpp"
#include "softcbf/pcs_kinematics.hpp"
#include "softcbf/qp_oracle.hpp"
#include "softcbf/rrt_star.hpp"
#include "softcbf/safety.hpp"
#include "softcbf/tendon.hpp"
#include "softcbf/trajectory_log.hpp"

namespace softcbf {

enum class ControllerKind { closed_form, qp, rrt_star, clf_only };

inline std::string to_string(ControllerKind c) {
  switch (c) {
    case ControllerKind::closed_form: return "closed-form";
    case ControllerKind::qp: return "qp";
    case ControllerKind::rrt_star: return "rrt*";
    case ControllerKind::clf_only: return "clf-only";
  }
  return "?";
}

inline ControllerKind controller_from_string(const std::string& s) {
  if (s == "closed-form") return ControllerKind::closed_form;
  if (s == "qp") return ControllerKind::qp;
  if (s == "rrt*" || s == "rrt*-baseline") return ControllerKind::rrt_star;
  if (s == "clf-only") return ControllerKind::clf_only;
  throw InvalidArgument("unknown controller '" + s + "'");
}

// Circle in the plane spanned by first_axis and normal x first_axis.
struct CircleTask {
  Vec3 center = Vec3(0.0, 0.0, 0.3);
  double radius = 0.06;
  Vec3 normal = Vec3::UnitZ();
  Vec3 first_axis = Vec3::UnitX();
  double speed_rpm = 3.0;
};

struct Task {
  std::optional<Vec3> setpoint;
  std::optional<CircleTask> circle;
};

struct PlannerSettings {
  PlannerConfig planner;  // bounds left empty: filled from the limits below
  double curvature_bound = 15.0;
  double axial_bound = 0.2;
  TrackerConfig tracker;
};

struct Scenario {
  std::string name = "scenario";
  RobotModel robot = default_robot_model();
  TendonLayout layout = default_tendon_layout(default_robot_model());
  SafetyConfig safety;
  std::vector<Obstacle> obstacles;
  Task task;
  ControllerKind controller = ControllerKind::closed_form;
  double duration_s = 20.0;
  double dt_s = 1e-3;
  int n_res = 40;
  double u_clip = kInf;
  std::uint64_t seed = 0;
  std::optional<Configuration> initial_q;
  PlannerSettings planning;

  Configuration start() const { return initial_q ? *initial_q : Configuration::Zero(robot.dof()); }

  void validate() const {
    robot.validate();
    layout.validate(robot);
    safety.validate();
    validate_obstacles(obstacles);
    if (!(dt_s > 0.0)) throw InvalidArgument("dt_s must be positive");
    if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) throw InvalidArgument("duration_s must be finite and >= 0");
    if (n_res < 1) throw InvalidArgument("n_res must be positive");
    if (!(u_clip > 0.0)) throw InvalidArgument("u_clip must be positive");
    if (task.setpoint.has_value() == task.circle.has_value())
      throw InvalidArgument("task needs exactly one of setpoint or circle");
    if (task.circle) {
      const auto& c = *task.circle;
      if (!(c.radius > 0.0)) throw InvalidArgument("circle radius must be positive");
      if (std::abs(c.normal.norm() - 1.0) > 1e-9 || std::abs(c.first_axis.norm() - 1.0) > 1e-9 ||
          std::abs(c.normal.dot(c.first_axis)) > 1e-9)
        throw InvalidArgument("circle normal and first axis must be orthonormal");
    }
    if (controller == ControllerKind::rrt_star && !task.setpoint)
      throw InvalidArgument("the planning baseline needs a setpoint task");
    if (initial_q) check_configuration(robot, *initial_q);
  }
};

inline Vec3 circular_reference(const CircleTask& c, double t) {
  const double phase = 2.0 * std::numbers::pi * (c.speed_rpm / 60.0) * t;
  const Vec3 second = c.normal.cross(c.first_axis);
  return c.center + c.radius * (std::cos(phase) * c.first_axis + std::sin(phase) * second);
}

inline Vec3 task_reference(const Task& task, double t) {
  if (task.setpoint) return *task.setpoint;
  if (task.circle) return circular_reference(*task.circle, t);
  throw InvalidArgument("task has no reference");
}

// RMS of |tip(t) - reference(t)| over the log's time grid.
template <typename Reference>
  requires std::invocable<Reference, double>
double tracking_rmse(const TrajectoryLog& log, Reference&& reference) {
  if (log.empty()) throw InvalidArgument("tracking_rmse needs a non-empty log");
  double acc = 0.0;
  for (const auto& r : log.records) acc += (r.tip - reference(r.t)).squaredNorm();
  return std::sqrt(acc / static_cast<double>(log.size()));
}

inline double tracking_rmse(const TrajectoryLog& log, const Task& task) {
  return tracking_rmse(log, [&](double t) { return task_reference(task, t); });
}

inline PlannerConfig planner_config(const Scenario& sc) {
  PlannerConfig cfg = sc.planning.planner;
  cfg.bounds = default_planning_bounds(sc.robot, sc.planning.curvature_bound, sc.planning.axial_bound);
  cfg.seed = sc.seed;
  cfg.n_res = sc.n_res;
  cfg.d_safe = sc.safety.d_safe;
  return cfg;
}

struct BaselineRun {
  PlanResult plan;
  TrajectoryLog log;
};

inline BaselineRun run_baseline(const Scenario& sc) {
  sc.validate();
  BaselineRun out;
  const PlannerConfig cfg = planner_config(sc);
  out.plan = plan(sc.robot, sc.start(), *sc.task.setpoint, sc.obstacles, cfg);
  TrackerConfig tc = sc.planning.tracker;
  tc.dt = sc.dt_s;
  tc.duration_s = sc.duration_s;
  tc.bounds = cfg.bounds;
  TrackScene scene{*sc.task.setpoint, sc.obstacles, sc.safety, sc.n_res};
  out.log = low_level_track(sc.robot, sc.layout, out.plan.waypoints, tc, scene);
  out.log.summary.rmse = tracking_rmse(out.log, sc.task);
  return out;
}

// Simulates the scenario's controller. The input is computed once per step
// from the current state and held across the Runge-Kutta stages.
inline TrajectoryLog run_scenario(const Scenario& sc) {
  sc.validate();
  if (sc.controller == ControllerKind::rrt_star) return run_baseline(sc).log;

  const long steps = std::lround(sc.duration_s / sc.dt_s);
  const ClfMode mode = mode_of(sc.safety);
  TrajectoryLog log;
  log.records.reserve(steps + 1);
  Configuration q = sc.start();
  using clock = std::chrono::steady_clock;

  auto fail = [&](const std::string& what) {
    finalize_summary(log);
    throw SimulationError(what, std::move(log));
  };

  for (long k = 0; k <= steps; ++k) {
    const double t = k * sc.dt_s;
    const Vec3 target = task_reference(sc.task, t);
    LogRecord r;
    ControlSolution sol;
    SafetyState st;
    try {
      const auto c0 = clock::now();
      st = evaluate_safety(sc.robot, sc.layout, q, target, sc.obstacles, sc.safety, sc.n_res);
      switch (sc.controller) {
        case ControllerKind::closed_form: sol = solve_closed_form(st.rows, sc.safety.w_clf, mode); break;
        case ControllerKind::qp: sol = solve_clf_cbf_qp(st.rows, sc.safety.w_clf, mode); break;
        case ControllerKind::clf_only: sol = solve_clf_only(st.rows, sc.safety.w_clf, mode); break;
        case ControllerKind::rrt_star: break;
      }
      // A generic solver may hand back a non-finite iterate; apply no input then.
      if (!sol.u_star.allFinite()) sol.u_star = Eigen::VectorXd::Zero(sc.layout.tendon_count());
      sol.u_star = clamp_input(sol.u_star, sc.u_clip);
      log.summary.control_seconds_total += std::chrono::duration<double>(clock::now() - c0).count();
      ++log.summary.control_calls;
    } catch (const Error& e) {
      fail(e.what());
    }
    r.t = t;
    r.q = q;
    r.tip = st.tip;
    r.u = sol.u_star;
    r.V = st.V;
    r.b_lse = st.b_lse;
    r.b_min = st.b_min;
    r.lambda_V = sol.lambda_V;
    r.lambda_h = sol.lambda_h;
    r.delta = sol.delta_star;
    r.active_set = std::string(to_string(sol.active_set));
    log.records.push_back(std::move(r));
    if (k == steps) break;

    const Eigen::VectorXd& u = log.records.back().u;
    try {
      q = integrate_step_tsit5([&](const Eigen::VectorXd& x) { return actuation_rhs(sc.robot, sc.layout, x, u); },
                               q, sc.dt_s)
              .x;
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  finalize_summary(log);
  log.summary.rmse = tracking_rmse(log, sc.task);
  return log;
}

}  // namespace softcbf
