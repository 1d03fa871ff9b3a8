#pragma once

// Quick invariant checks behind the CLI `validate` command.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "softcbf/benchmark.hpp"
#include "softcbf/integrator.hpp"
#include "softcbf/safety.hpp"

namespace softcbf {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

inline std::vector<Obstacle> random_scene(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> xy(-0.15, 0.15), z(0.0, 0.35), r(0.005, 0.03);
  std::vector<Obstacle> obs;
  for (int i = 0; i < n; ++i) obs.push_back({Vec3(xy(rng), xy(rng), z(rng)), r(rng)});
  return obs;
}

template <typename F>
Eigen::VectorXd central_gradient(F&& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace detail

inline CheckResult check_oracle_equivalence(std::uint64_t seed = 0) {
  Table1Report r = benchmark_table1(200, 200, 6, seed, 20);
  const double du = r.metrics.at("||u_c-u_qp||_inf").max;
  const double df = r.metrics.at("|f(u_c)-f(u_qp)|").max;
  const double vc = r.metrics.at("max(Au_c-b,0)").max;
  CheckResult c{"oracle-equivalence", du <= 1e-8 && df <= 1e-10 && vc <= 1e-12 && r.active_set_matches == 200, ""};
  c.detail = detail::fmt("max |du|_inf %.3g, max objective gap %.3g", du, df) + detail::fmt(", violation %.3g", vc) +
             ", active sets " + std::to_string(r.active_set_matches) + "/200";
  return c;
}

inline CheckResult check_lse_sandwich(std::uint64_t seed = 0, int n_scenes = 1000) {
  std::mt19937_64 rng(seed);
  RobotModel m = default_robot_model();
  std::uniform_int_distribution<int> count(1, 5);
  double worst_upper = -kInf, worst_lower = -kInf;
  for (int s = 0; s < n_scenes; ++s) {
    const Configuration q = random_configuration(rng, m);
    const auto obs = detail::random_scene(rng, count(rng));
    const Eigen::MatrixXd b = pairwise_barriers(m, q, 40, obs, 0.0);
    for (double kappa : {10.0, 100.0, 1000.0}) {
      const double lse = lse_barrier(b, kappa);
      worst_upper = std::max(worst_upper, lse - b.minCoeff());
      worst_lower = std::max(worst_lower, b.minCoeff() - std::log(static_cast<double>(b.size())) / kappa - lse);
    }
  }
  return {"lse-sandwich", worst_upper <= 1e-12 && worst_lower <= 1e-12,
          detail::fmt("max(b_lse - min b) %.3g, max(lower bound - b_lse) %.3g", worst_upper, worst_lower)};
}

inline CheckResult check_gradients(std::uint64_t seed = 0, int n_states = 100) {
  std::mt19937_64 rng(seed);
  RobotModel m = default_robot_model();
  SafetyConfig cfg;
  double worst = 0.0;
  for (int s = 0; s < n_states; ++s) {
    const Configuration q = random_configuration(rng, m);
    const auto obs = detail::random_scene(rng, 3);
    const Vec3 target(0.1, 0.05, 0.32);
    const Eigen::VectorXd gv = clf_gradient(m, q, target);
    const Eigen::VectorXd fv = detail::central_gradient([&](const Eigen::VectorXd& x) { return clf_value(m, x, target); },
                                                        q, 1e-6);
    const Eigen::VectorXd gb = lse_barrier_gradient(m, q, 40, obs, cfg).gradient;
    const Eigen::VectorXd fb = detail::central_gradient(
        [&](const Eigen::VectorXd& x) { return lse_barrier(pairwise_barriers(m, x, 40, obs, cfg.d_safe), cfg.kappa_lse); },
        q, 1e-6);
    worst = std::max(worst, (gv - fv).norm() / std::max(fv.norm(), 1e-8));
    worst = std::max(worst, (gb - fb).norm() / std::max(fb.norm(), 1e-8));
  }
  return {"gradients", worst <= 1e-5, detail::fmt("worst relative error %.3g", worst)};
}

// Least-squares slope of global error against step on the pendulum to T = 20.
inline double tsit5_convergence_slope() {
  auto rhs = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd d(2);
    d << v[1], -std::sin(v[0]);
    return d;
  };
  auto run = [&](int n) {
    Eigen::VectorXd x(2);
    x << 1.2, 0.0;
    for (int k = 0; k < n; ++k) x = integrate_step_tsit5(rhs, x, 20.0 / n).x;
    return x;
  };
  const Eigen::VectorXd ref = run(1 << 17);
  std::vector<double> h, e;
  for (int n : {160, 320, 640, 1280}) {
    h.push_back(std::log(20.0 / n));
    e.push_back(std::log((run(n) - ref).norm()));
  }
  double mh = 0.0, me = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    mh += h[i] / h.size();
    me += e[i] / e.size();
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    num += (h[i] - mh) * (e[i] - me);
    den += (h[i] - mh) * (h[i] - mh);
  }
  return num / den;
}

inline CheckResult check_integrator_order() {
  const double slope = tsit5_convergence_slope();
  return {"integrator-order", slope >= 4.5 && slope <= 5.5, detail::fmt("slope %.3f", slope)};
}

inline std::vector<CheckResult> run_validation(std::uint64_t seed = 0) {
  return {check_oracle_equivalence(seed), check_lse_sandwich(seed), check_gradients(seed), check_integrator_order()};
}

}  // namespace softcbf
