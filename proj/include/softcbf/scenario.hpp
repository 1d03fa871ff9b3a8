#pragma once

// Scenario files (JSON). Every key is optional; missing keys take the
// defaults of Scenario. See README for the schema.

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "json.hpp"

#include "softcbf/errors.hpp"
#include "softcbf/simulation.hpp"

namespace softcbf {

using json = nlohmann::json;

namespace detail {

inline Vec3 vec3_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json json_of(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline StrainMask mask_of(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "full") return kFullStrain;
    if (s == "no_shear") return kNoShear;
    if (s == "bend_axial") return kBendAxial;
    throw InvalidArgument("unknown strain mask '" + s + "'");
  }
  if (!j.is_array() || j.size() != 6) throw InvalidArgument("strain mask must be a name or 6 booleans");
  StrainMask m{};
  for (int i = 0; i < 6; ++i) m[i] = j[i].get<bool>();
  return m;
}

inline json json_of(const StrainMask& m) {
  if (m == kFullStrain) return "full";
  if (m == kNoShear) return "no_shear";
  if (m == kBendAxial) return "bend_axial";
  json a = json::array();
  for (bool b : m) a.push_back(b);
  return a;
}

// Non-finite numbers are written as null.
inline double number_or_inf(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_null()) return kInf;
  return j[key].get<double>();
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

inline Scenario scenario_from_json(const json& j) {
  using detail::vec3_of;
  Scenario sc;
  try {
    sc.name = j.value("name", sc.name);

    const json robot = j.value("robot", json::object());
    const int segments = robot.value("segments", 2);
    const double length = robot.value("total_length", 0.3);
    const double radius = robot.value("body_radius", 0.036);
    const StrainMask mask = robot.contains("strain_mask") ? detail::mask_of(robot["strain_mask"]) : kFullStrain;
    sc.robot = RobotModel::uniform(segments, length, radius, mask);

    const json tendons = j.value("tendons", json::object());
    sc.layout = default_tendon_layout(sc.robot, tendons.value("routing_radius", 0.036),
                                      tendons.value("segment_twist_deg", 0.0) * std::numbers::pi / 180.0);

    const json safety = j.value("safety", json::object());
    sc.safety.d_safe = safety.value("d_safe", sc.safety.d_safe);
    sc.safety.kappa_lse = safety.value("kappa_lse", sc.safety.kappa_lse);
    sc.safety.gamma = safety.value("gamma", sc.safety.gamma);
    sc.safety.c3 = safety.value("c3", sc.safety.c3);
    sc.safety.w_clf = safety.value("w_clf", sc.safety.w_clf);
    const std::string clf = safety.value("clf", std::string("relaxed"));
    if (clf == "hard") sc.safety.w_clf = kInf;
    else if (clf != "relaxed") throw InvalidArgument("safety.clf must be 'relaxed' or 'hard'");

    for (const auto& o : j.value("obstacles", json::array()))
      sc.obstacles.push_back({vec3_of(o.at("center"), "obstacle center"), o.at("radius").get<double>()});

    const json task = j.at("task");
    if (task.contains("setpoint")) sc.task.setpoint = vec3_of(task["setpoint"], "task.setpoint");
    if (task.contains("circle")) {
      const json c = task["circle"];
      CircleTask ct;
      if (c.contains("center")) ct.center = vec3_of(c["center"], "circle.center");
      ct.radius = c.value("radius", ct.radius);
      if (c.contains("normal")) ct.normal = vec3_of(c["normal"], "circle.normal").normalized();
      if (c.contains("first_axis")) {
        ct.first_axis = vec3_of(c["first_axis"], "circle.first_axis").normalized();
      } else {
        Vec3 e2;
        detail::orthonormal_pair(ct.normal, ct.first_axis, e2);
      }
      ct.speed_rpm = c.value("speed_rpm", ct.speed_rpm);
      sc.task.circle = ct;
    }

    sc.controller = controller_from_string(j.value("controller", std::string("closed-form")));
    sc.duration_s = j.value("duration_s", sc.duration_s);
    sc.dt_s = j.value("dt_s", sc.dt_s);
    sc.n_res = j.value("n_res", sc.n_res);
    sc.u_clip = detail::number_or_inf(j, "u_clip", sc.u_clip);
    sc.seed = j.value("seed", sc.seed);
    if (j.contains("initial_q")) {
      const auto v = j["initial_q"].get<std::vector<double>>();
      sc.initial_q = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    const json p = j.value("planner", json::object());
    auto& pc = sc.planning.planner;
    pc.q_step = p.value("q_step", pc.q_step);
    pc.collision_stride = p.value("collision_stride", pc.collision_stride);
    pc.neighbor_count = p.value("neighbor_count", pc.neighbor_count);
    pc.max_samples = p.value("max_samples", pc.max_samples);
    pc.goal_threshold = p.value("goal_threshold", pc.goal_threshold);
    sc.planning.curvature_bound = p.value("curvature_bound", sc.planning.curvature_bound);
    sc.planning.axial_bound = p.value("axial_bound", sc.planning.axial_bound);
    auto& tc = sc.planning.tracker;
    tc.kp = p.value("kp", tc.kp);
    tc.advance_radius = p.value("advance_radius", tc.advance_radius);
    tc.timeout_s = p.value("timeout_s", tc.timeout_s);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

inline json scenario_to_json(const Scenario& sc) {
  using detail::json_of;
  json j;
  j["name"] = sc.name;
  j["robot"] = {{"segments", sc.robot.num_segments()},
                {"total_length", sc.robot.total_length()},
                {"body_radius", sc.robot.body_radius},
                {"strain_mask", json_of(sc.robot.active_mask.front())}};
  const double twist = sc.layout.tendon_count() > 3 ? wrap_angle(sc.layout.angles[3] - sc.layout.angles[0]) : 0.0;
  j["tendons"] = {{"routing_radius", sc.layout.routing_radius},
                  {"segment_twist_deg", twist * 180.0 / std::numbers::pi}};
  j["safety"] = {{"d_safe", sc.safety.d_safe},
                 {"kappa_lse", sc.safety.kappa_lse},
                 {"gamma", sc.safety.gamma},
                 {"c3", sc.safety.c3},
                 {"clf", sc.safety.hard_clf() ? "hard" : "relaxed"}};
  if (!sc.safety.hard_clf()) j["safety"]["w_clf"] = sc.safety.w_clf;
  j["obstacles"] = json::array();
  for (const auto& o : sc.obstacles) j["obstacles"].push_back({{"center", json_of(o.center)}, {"radius", o.radius}});
  if (sc.task.setpoint) j["task"] = {{"setpoint", json_of(*sc.task.setpoint)}};
  if (sc.task.circle) {
    const auto& c = *sc.task.circle;
    j["task"] = {{"circle",
                  {{"center", json_of(c.center)},
                   {"radius", c.radius},
                   {"normal", json_of(c.normal)},
                   {"first_axis", json_of(c.first_axis)},
                   {"speed_rpm", c.speed_rpm}}}};
  }
  j["controller"] = to_string(sc.controller);
  j["duration_s"] = sc.duration_s;
  j["dt_s"] = sc.dt_s;
  j["n_res"] = sc.n_res;
  j["u_clip"] = detail::finite_or_null(sc.u_clip);
  j["seed"] = sc.seed;
  if (sc.initial_q) j["initial_q"] = std::vector<double>(sc.initial_q->data(), sc.initial_q->data() + sc.initial_q->size());
  const auto& pc = sc.planning.planner;
  const auto& tc = sc.planning.tracker;
  j["planner"] = {{"q_step", pc.q_step},
                  {"collision_stride", pc.collision_stride},
                  {"neighbor_count", pc.neighbor_count},
                  {"max_samples", pc.max_samples},
                  {"goal_threshold", pc.goal_threshold},
                  {"curvature_bound", sc.planning.curvature_bound},
                  {"axial_bound", sc.planning.axial_bound},
                  {"kp", tc.kp},
                  {"advance_radius", tc.advance_radius},
                  {"timeout_s", tc.timeout_s}};
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open scenario file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw InvalidArgument("scenario " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

inline void save_scenario(const std::string& path, const Scenario& sc) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot open " + path + " for writing");
  f << scenario_to_json(sc).dump(2) << '\n';
}

}  // namespace softcbf
