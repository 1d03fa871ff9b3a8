#pragma once

// Sampling-based baseline: RRT* in the affine-normalized configuration space
// with barrier screening along edges, and the kinematic setpoint tracker that
// follows its waypoints.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "softcbf/errors.hpp"
#include "softcbf/integrator.hpp"
#include "softcbf/pcs_kinematics.hpp"
#include "softcbf/safety.hpp"
#include "softcbf/tendon.hpp"
#include "softcbf/trajectory_log.hpp"

namespace softcbf {

// Physical strain limits mapped to [0, 1]^n.
struct PlanningBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::Index size() const { return lo.size(); }

  void validate() const {
    if (lo.size() != hi.size() || lo.size() == 0) throw InvalidArgument("planning bounds need matching non-empty lo/hi");
    if (!lo.allFinite() || !hi.allFinite()) throw InvalidArgument("planning bounds must be finite");
    if (!(lo.array() < hi.array()).all()) throw InvalidArgument("planning bounds need lo < hi");
  }
};

// Curvatures (torsion included) within +-curvature, linear strain deviations
// within +-axial, for every active component of the model.
inline PlanningBounds default_planning_bounds(const RobotModel& model, double curvature = 15.0, double axial = 0.2) {
  PlanningBounds b;
  b.lo.resize(model.dof());
  b.hi.resize(model.dof());
  int k = 0;
  for (const auto& mask : model.active_mask)
    for (int c = 0; c < 6; ++c)
      if (mask[c]) {
        const double lim = c < 3 ? curvature : axial;
        b.lo[k] = -lim;
        b.hi[k++] = lim;
      }
  return b;
}

inline Eigen::VectorXd normalize(const Configuration& q, const PlanningBounds& b) {
  if (q.size() != b.size()) throw ConfigurationShapeError("configuration and bounds differ in size");
  return ((q - b.lo).array() / (b.hi - b.lo).array()).matrix();
}

inline Configuration denormalize(const Eigen::VectorXd& x, const PlanningBounds& b) {
  if (x.size() != b.size()) throw ConfigurationShapeError("normalized vector and bounds differ in size");
  return b.lo + (x.array() * (b.hi - b.lo).array()).matrix();
}

inline bool in_unit_cube(const Eigen::VectorXd& x) { return (x.array() >= 0.0).all() && (x.array() <= 1.0).all(); }

struct PlannerConfig {
  double q_step = 0.02;
  double collision_stride = 0.01;
  int neighbor_count = 32;
  int max_samples = 20480;
  double goal_threshold = 1e-4;  // on V, m^2
  PlanningBounds bounds;
  std::uint64_t seed = 0;
  int n_res = 40;
  double d_safe = 0.0;

  void validate(const RobotModel& model) const {
    bounds.validate();
    if (bounds.size() != model.dof()) throw InvalidArgument("planning bounds do not match model dof");
    if (!(collision_stride > 0.0 && collision_stride <= q_step)) throw InvalidArgument("need 0 < stride <= q_step");
    if (neighbor_count < 1) throw InvalidArgument("neighbor_count must be at least 1");
    if (max_samples < 0) throw InvalidArgument("max_samples must be non-negative");
    if (n_res < 1) throw InvalidArgument("n_res must be positive");
  }
};

struct PlanResult {
  std::vector<Configuration> waypoints;
  bool reached_goal = false;
  double best_V = kInf;
  int samples_used = 0;
  double planning_seconds = 0.0;

  // Final tree, normalized coordinates; parent of the root is -1.
  std::vector<Eigen::VectorXd> nodes;
  std::vector<int> parents;
  std::vector<double> costs;
  int rewires = 0;
  bool rewire_increased_cost = false;
};

inline bool configuration_collision_free(const RobotModel& model, const Configuration& q,
                                         std::span<const Obstacle> obstacles, int n_res, double d_safe = 0.0) {
  if (obstacles.empty()) return true;
  return min_barrier(pairwise_barriers(model, q, n_res, obstacles, d_safe)) >= 0.0;
}

namespace detail {

inline bool edge_free_impl(const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, const RobotModel& model,
                           std::span<const Obstacle> obstacles, const PlanningBounds& bounds, double stride, int n_res,
                           double d_safe, bool check_first) {
  if (obstacles.empty()) return true;
  const double len = (xb - xa).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / stride)));
  for (int i = check_first ? 0 : 1; i <= n; ++i) {
    const Eigen::VectorXd x = xa + (static_cast<double>(i) / n) * (xb - xa);
    if (!configuration_collision_free(model, denormalize(x, bounds), obstacles, n_res, d_safe)) return false;
  }
  return true;
}

}  // namespace detail

// True iff every interpolation point (spacing <= stride along the normalized
// segment, endpoints included) has min_ij b_ij >= 0.
inline bool edge_collision_free(const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, const RobotModel& model,
                                std::span<const Obstacle> obstacles, const PlanningBounds& bounds, double stride,
                                int n_res, double d_safe = 0.0) {
  if (!(stride > 0.0)) throw InvalidArgument("collision stride must be positive");
  return detail::edge_free_impl(xa, xb, model, obstacles, bounds, stride, n_res, d_safe, true);
}

inline PlanResult plan(const RobotModel& model, const Configuration& q_start, const Vec3& target,
                       std::span<const Obstacle> obstacles, const PlannerConfig& cfg) {
  cfg.validate(model);
  validate_obstacles(obstacles);
  check_configuration(model, q_start);
  const auto t0 = std::chrono::steady_clock::now();
  if (!configuration_collision_free(model, q_start, obstacles, cfg.n_res, cfg.d_safe))
    throw StartInCollisionError("planner start configuration is in collision");

  PlanResult res;
  auto& nodes = res.nodes;
  auto& parents = res.parents;
  auto& costs = res.costs;
  std::vector<std::vector<int>> children;
  std::vector<double> values;

  nodes.push_back(normalize(q_start, cfg.bounds));
  parents.push_back(-1);
  costs.push_back(0.0);
  children.emplace_back();
  values.push_back(clf_value(model, q_start, target));
  int best = 0;
  res.reached_goal = values[0] < cfg.goal_threshold;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index dim = cfg.bounds.size();
  Eigen::VectorXd sample(dim);
  std::vector<double> dist;
  std::vector<int> order;

  auto edge_free = [&](const Eigen::VectorXd& from, const Eigen::VectorXd& to) {
    return detail::edge_free_impl(from, to, model, obstacles, cfg.bounds, cfg.collision_stride, cfg.n_res,
                                  cfg.d_safe, false);
  };

  // Shift the cost of a subtree by `delta`.
  auto propagate = [&](int root, double delta) {
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      costs[v] += delta;
      for (int c : children[v]) stack.push_back(c);
    }
  };

  int s = 0;
  for (; s < cfg.max_samples && !res.reached_goal; ++s) {
    for (Eigen::Index i = 0; i < dim; ++i) sample[i] = unit(rng);

    const int n = static_cast<int>(nodes.size());
    dist.resize(n);
    for (int i = 0; i < n; ++i) dist[i] = (nodes[i] - sample).norm();
    const int nearest = static_cast<int>(std::min_element(dist.begin(), dist.end()) - dist.begin());
    const double d = dist[nearest];
    if (d == 0.0) continue;
    const Eigen::VectorXd x_new = nodes[nearest] + (std::min(cfg.q_step, d) / d) * (sample - nodes[nearest]);
    if (!in_unit_cube(x_new)) continue;
    if (!edge_free(nodes[nearest], x_new)) continue;

    // k nearest existing nodes to x_new, nearest first.
    for (int i = 0; i < n; ++i) dist[i] = (nodes[i] - x_new).norm();
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    const int k = std::min(cfg.neighbor_count, n);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
    order.resize(k);

    // Cheapest collision-free parent among the neighbours and the nearest node.
    std::vector<int> cand = order;
    if (std::find(cand.begin(), cand.end(), nearest) == cand.end()) cand.push_back(nearest);
    std::stable_sort(cand.begin(), cand.end(),
                     [&](int a, int b) { return costs[a] + dist[a] < costs[b] + dist[b]; });
    int parent = -1;
    for (int c : cand) {
      if (c == nearest || edge_free(nodes[c], x_new)) {
        parent = c;
        break;
      }
    }

    const int id = n;
    nodes.push_back(x_new);
    parents.push_back(parent);
    costs.push_back(costs[parent] + dist[parent]);
    children.emplace_back();
    children[parent].push_back(id);
    values.push_back(clf_value(model, denormalize(x_new, cfg.bounds), target));

    // Rewire neighbours through the new node when that shortens their path.
    for (int nb : order) {
      if (nb == parent) continue;
      const double via = costs[id] + dist[nb];
      if (!(via < costs[nb])) continue;
      if (!edge_free(x_new, nodes[nb])) continue;
      auto& siblings = children[parents[nb]];
      siblings.erase(std::find(siblings.begin(), siblings.end(), nb));
      parents[nb] = id;
      children[id].push_back(nb);
      const double delta = via - costs[nb];
      if (delta > 0.0) res.rewire_increased_cost = true;
      propagate(nb, delta);
      ++res.rewires;
    }

    if (values[id] < values[best]) best = id;
    if (values[id] < cfg.goal_threshold) res.reached_goal = true;
  }
  res.samples_used = s;
  res.best_V = values[best];

  std::vector<int> path;
  for (int v = best; v >= 0; v = parents[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  for (int v : path) res.waypoints.push_back(denormalize(nodes[v], cfg.bounds));
  res.planning_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

struct TrackerConfig {
  double kp = 2.0;              // K_p = kp * I
  double advance_radius = 0.05;  // normalized units
  double timeout_s = 4.0;       // per waypoint
  double dt = 1e-3;
  double duration_s = 20.0;
  PlanningBounds bounds;
};

// What the tracker log reports alongside the state.
struct TrackScene {
  Vec3 target = Vec3::Zero();
  std::vector<Obstacle> obstacles;
  SafetyConfig safety;
  int n_res = 40;
};

// u = J_l Kp (q_d - q), integrated through q' = J_l^+ u with the input held
// over each step. The active waypoint advances once within advance_radius
// (normalized) or after timeout_s.
inline TrajectoryLog low_level_track(const RobotModel& model, const TendonLayout& layout,
                                     std::span<const Configuration> waypoints, const TrackerConfig& cfg,
                                     const TrackScene& scene) {
  if (waypoints.empty()) throw InvalidArgument("tracker needs at least one waypoint");
  if (!(cfg.dt > 0.0) || !(cfg.duration_s >= 0.0)) throw InvalidArgument("tracker needs dt > 0, duration >= 0");
  cfg.bounds.validate();
  const long steps = std::lround(cfg.duration_s / cfg.dt);
  TrajectoryLog log;
  log.records.reserve(steps + 1);
  Configuration q = waypoints.front();
  std::size_t active = 0;
  double since = 0.0;

  for (long k = 0; k <= steps; ++k) {
    const double t = k * cfg.dt;
    while (active + 1 < waypoints.size() &&
           ((normalize(waypoints[active], cfg.bounds) - normalize(q, cfg.bounds)).norm() <= cfg.advance_radius ||
            since >= cfg.timeout_s - 1e-12)) {
      ++active;
      since = 0.0;
    }
    const auto c0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd jl = tendon_jacobian(model, layout, q);
    const Eigen::VectorXd u = jl * (cfg.kp * (waypoints[active] - q));
    log.summary.control_seconds_total +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
    ++log.summary.control_calls;

    const SafetyState st =
        evaluate_safety(model, layout, q, scene.target, scene.obstacles, scene.safety, scene.n_res);
    LogRecord r;
    r.t = t;
    r.q = q;
    r.tip = st.tip;
    r.u = u;
    r.V = st.V;
    r.b_lse = st.b_lse;
    r.b_min = st.b_min;
    log.records.push_back(std::move(r));
    if (k == steps) break;

    try {
      q = integrate_step_tsit5([&](const Eigen::VectorXd& x) { return actuation_rhs(model, layout, x, u); }, q,
                               cfg.dt)
              .x;
    } catch (const Error& e) {
      finalize_summary(log);
      throw SimulationError(e.what(), std::move(log));
    }
    since += cfg.dt;
  }
  finalize_summary(log);
  return log;
}

}  // namespace softcbf
