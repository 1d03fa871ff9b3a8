#pragma once

// Timing and accuracy harnesses: the two-row closed form against the
// interior-point oracle, and controller cost / body error versus sphere count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softcbf/closed_form.hpp"
#include "softcbf/hausdorff.hpp"
#include "softcbf/qp_oracle.hpp"
#include "softcbf/safety.hpp"
#include "softcbf/tendon.hpp"

namespace softcbf {

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

// Linear-interpolated percentiles.
inline SummaryStats summarize(std::vector<double> v) {
  SummaryStats s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  auto pct = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  for (double x : v) s.mean += x / static_cast<double>(v.size());
  s.median = pct(0.5);
  s.p95 = pct(0.95);
  s.max = v.back();
  return s;
}

// Gaussian rows and offsets; both rows present, so all four active sets occur.
inline ConstraintRows random_constraint_rows(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> n01(0.0, 1.0);
  ConstraintRows r;
  r.a_V.resize(m);
  r.a_h.resize(m);
  for (int i = 0; i < m; ++i) r.a_V[i] = n01(rng);
  for (int i = 0; i < m; ++i) r.a_h[i] = n01(rng);
  r.b_V = n01(rng);
  r.b_h = n01(rng);
  return r;
}

// Stacked A u <= b form of the hard-CLF two-row problem.
inline double max_violation(const ConstraintRows& r, const Eigen::VectorXd& u) {
  const double clf = r.a_V.dot(u) + r.b_V;
  const double cbf = -r.a_h.dot(u) - r.b_h;
  return std::max({clf, cbf, 0.0});
}

inline const std::vector<std::string>& table1_metric_names() {
  static const std::vector<std::string> names{"||u_c-u_qp||_inf", "||u_c-u_qp||_2", "|f(u_c)-f(u_qp)|",
                                              "max(Au_c-b,0)", "max(Au_qp-b,0)"};
  return names;
}

struct Table1Report {
  int n_instances = 0;
  int n_calls = 0;
  int m = 0;
  double closed_form_us = 0.0;
  double qp_us = 0.0;        // interior point + active-set polish
  double qp_raw_us = 0.0;    // interior point only
  double speedup = 0.0;      // qp_us / closed_form_us
  double speedup_raw = 0.0;  // qp_raw_us / closed_form_us
  std::map<std::string, SummaryStats> metrics;
  int active_set_matches = 0;
  int infeasible_instances = 0;
};

namespace detail {

template <typename F>
double mean_call_us(const std::vector<ConstraintRows>& inst, int n_calls, int n_warm, F&& f) {
  volatile double sink = 0.0;
  const int n = static_cast<int>(inst.size());
  for (int c = 0; c < n_warm; ++c) sink = sink + f(inst[c % n]);
  const auto t0 = std::chrono::steady_clock::now();
  for (int c = 0; c < n_calls; ++c) sink = sink + f(inst[c % n]);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return 1e6 * s / n_calls;
}

}  // namespace detail

// Hard-CLF two-row QP (delta = 0), objective |u|^2.
inline Table1Report benchmark_table1(int n_instances = 200, int n_calls = 10000, int m = 6, std::uint64_t seed = 0,
                                     int n_warm = 1000) {
  if (n_instances < 1 || n_calls < 1 || m < 1) throw InvalidArgument("benchmark sizes must be positive");
  std::mt19937_64 rng(seed);
  std::vector<ConstraintRows> inst;
  for (int i = 0; i < n_instances; ++i) inst.push_back(random_constraint_rows(rng, m));

  Table1Report rep;
  rep.n_instances = n_instances;
  rep.n_calls = n_calls;
  rep.m = m;
  std::map<std::string, std::vector<double>> vals;
  const auto& names = table1_metric_names();
  for (const auto& r : inst) {
    const ControlSolution c = solve_closed_form(r, kInf, ClfMode::hard);
    const OracleSolution o = solve_clf_cbf_qp_full(r, kInf, ClfMode::hard);
    if (!c.feasible) ++rep.infeasible_instances;
    const Eigen::VectorXd d = c.u_star - o.control.u_star;
    vals[names[0]].push_back(d.lpNorm<Eigen::Infinity>());
    vals[names[1]].push_back(d.norm());
    vals[names[2]].push_back(std::abs(c.u_star.squaredNorm() - o.control.u_star.squaredNorm()));
    vals[names[3]].push_back(max_violation(r, c.u_star));
    vals[names[4]].push_back(max_violation(r, o.control.u_star));
    if (classify(c.lambda_V, c.lambda_h, 1e-6) == o.control.active_set) ++rep.active_set_matches;
  }
  for (const auto& n : names) rep.metrics[n] = summarize(vals[n]);

  rep.closed_form_us = detail::mean_call_us(inst, n_calls, n_warm, [](const ConstraintRows& r) {
    return solve_closed_form(r, kInf, ClfMode::hard).u_star[0];
  });
  rep.qp_us = detail::mean_call_us(inst, n_calls, n_warm, [](const ConstraintRows& r) {
    return solve_clf_cbf_qp(r, kInf, ClfMode::hard).u_star[0];
  });
  QPOptions raw;
  raw.polish = false;
  rep.qp_raw_us = detail::mean_call_us(inst, n_calls, n_warm, [&](const ConstraintRows& r) {
    return solve_clf_cbf_qp(r, kInf, ClfMode::hard, raw).u_star[0];
  });
  rep.speedup = rep.qp_us / rep.closed_form_us;
  rep.speedup_raw = rep.qp_raw_us / rep.closed_form_us;
  return rep;
}

inline void write_table1_csv(std::ostream& os, const Table1Report& r) {
  char buf[256];
  os << "method,runtime_us_per_call,rel_speedup\n";
  std::snprintf(buf, sizeof buf, "qp_solver,%.6g,1\nqp_solver_no_polish,%.6g,%.6g\nclosed_form,%.6g,%.6g\n",
                r.qp_us, r.qp_raw_us, r.qp_us / r.qp_raw_us, r.closed_form_us, r.speedup);
  os << buf << "\nmetric,mean,median,p95,max\n";
  for (const auto& n : table1_metric_names()) {
    const auto& s = r.metrics.at(n);
    std::snprintf(buf, sizeof buf, "%s,%.3e,%.3e,%.3e,%.3e\n", n.c_str(), s.mean, s.median, s.p95, s.max);
    os << buf;
  }
  os << "\nactive_set_matches," << r.active_set_matches << '/' << r.n_instances << '\n';
}

// Curvatures uniform in +-curvature, linear strain deviations in +-linear.
inline Configuration random_configuration(std::mt19937_64& rng, const RobotModel& model, double curvature = 6.0,
                                          double linear = 0.1) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Configuration q(model.dof());
  int k = 0;
  for (const auto& mask : model.active_mask)
    for (int c = 0; c < 6; ++c)
      if (mask[c]) q[k++] = unit(rng) * (c < 3 ? curvature : linear);
  return q;
}

struct ResolutionOptions {
  int n_configurations = 10;
  int n_calls = 20;  // timed control evaluations per configuration
  std::uint64_t seed = 0;
  bool with_hausdorff = true;
  HausdorffOptions hausdorff;
};

struct ResolutionRow {
  int n_res = 0;
  double closed_form_us = 0.0;  // rows + closed form
  double oracle_us = 0.0;       // pairwise rows + interior point on all N_res * N_obs rows
  double hausdorff_mean = 0.0;
  double hausdorff_max = 0.0;
  std::vector<double> hausdorff;  // per configuration
};

inline std::vector<ResolutionRow> benchmark_resolution_scaling(const std::vector<int>& n_res_list,
                                                               const RobotModel& model, const TendonLayout& layout,
                                                               const std::vector<Obstacle>& obstacles,
                                                               const Vec3& target, const SafetyConfig& config,
                                                               const ResolutionOptions& opt = {}) {
  std::mt19937_64 rng(opt.seed);
  std::vector<Configuration> qs;
  for (int i = 0; i < opt.n_configurations; ++i) qs.push_back(random_configuration(rng, model));
  const ClfMode mode = mode_of(config);
  std::vector<ResolutionRow> rows;
  using clock = std::chrono::steady_clock;
  for (int n_res : n_res_list) {
    ResolutionRow row;
    row.n_res = n_res;
    volatile double sink = 0.0;
    double t_cf = 0.0, t_qp = 0.0;
    for (const auto& q : qs) {
      auto t0 = clock::now();
      for (int c = 0; c < opt.n_calls; ++c) {
        const SafetyState st = evaluate_safety(model, layout, q, target, obstacles, config, n_res);
        sink = sink + solve_closed_form(st.rows, config.w_clf, mode).u_star[0];
      }
      t_cf += std::chrono::duration<double>(clock::now() - t0).count();
      t0 = clock::now();
      for (int c = 0; c < opt.n_calls; ++c) {
        const PairwiseRows pr = assemble_pairwise_rows(model, layout, q, target, obstacles, config, n_res);
        sink = sink + solve_pairwise_qp(pr, config.w_clf, mode).z[0];
      }
      t_qp += std::chrono::duration<double>(clock::now() - t0).count();
      if (opt.with_hausdorff) row.hausdorff.push_back(hausdorff_body_error(model, q, n_res, opt.hausdorff).distance);
    }
    const double calls = static_cast<double>(opt.n_calls) * static_cast<double>(qs.size());
    row.closed_form_us = 1e6 * t_cf / calls;
    row.oracle_us = 1e6 * t_qp / calls;
    if (!row.hausdorff.empty()) {
      for (double h : row.hausdorff) row.hausdorff_mean += h / static_cast<double>(row.hausdorff.size());
      row.hausdorff_max = *std::max_element(row.hausdorff.begin(), row.hausdorff.end());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_resolution_csv(std::ostream& os, const std::vector<ResolutionRow>& rows) {
  char buf[256];
  os << "n_res,closed_form_us,oracle_us,hausdorff_mean_m,hausdorff_max_m\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6g,%.6g,%.6g,%.6g\n", r.n_res, r.closed_form_us, r.oracle_us,
                  r.hausdorff_mean, r.hausdorff_max);
    os << buf;
  }
}

}  // namespace softcbf
