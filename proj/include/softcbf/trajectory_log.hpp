#pragma once

// Per-step simulation records and the versioned CSV log format.
//
// Columns, in order:
//   t, q0..q{n-1}, tip_x, tip_y, tip_z, u0..u{m-1}, V, b_lse, b_min,
//   lambda_V, lambda_h, delta, active_set
// preceded by the comment line "# trajectory-log v1".

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softcbf/errors.hpp"
#include "softcbf/pcs_kinematics.hpp"

namespace softcbf {

inline constexpr const char* kLogVersionLine = "# trajectory-log v1";

struct LogRecord {
  double t = 0.0;
  Eigen::VectorXd q;
  Vec3 tip = Vec3::Zero();
  Eigen::VectorXd u;
  double V = 0.0;
  double b_lse = 0.0;
  double b_min = 0.0;
  double lambda_V = 0.0;
  double lambda_h = 0.0;
  double delta = 0.0;
  std::string active_set = "none";
};

struct LogSummary {
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double min_barrier = std::numeric_limits<double>::infinity();
  double final_V = std::numeric_limits<double>::quiet_NaN();
  double control_seconds_total = 0.0;
  double control_seconds_mean = 0.0;
  long control_calls = 0;
};

struct TrajectoryLog {
  std::vector<LogRecord> records;
  LogSummary summary;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// Thrown when a run stops early; carries the records written so far.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, TrajectoryLog partial)
      : Error(what), partial_(std::make_shared<TrajectoryLog>(std::move(partial))) {}
  const TrajectoryLog& partial_log() const { return *partial_; }

 private:
  std::shared_ptr<const TrajectoryLog> partial_;
};

inline void finalize_summary(TrajectoryLog& log) {
  LogSummary& s = log.summary;
  s.min_barrier = std::numeric_limits<double>::infinity();
  for (const auto& r : log.records) s.min_barrier = std::min(s.min_barrier, r.b_min);
  if (!log.records.empty()) s.final_V = log.records.back().V;
  s.control_seconds_mean = s.control_calls ? s.control_seconds_total / s.control_calls : 0.0;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string csv_header(Eigen::Index dof, Eigen::Index inputs) {
  std::string h = "t";
  for (Eigen::Index i = 0; i < dof; ++i) h += ",q" + std::to_string(i);
  h += ",tip_x,tip_y,tip_z";
  for (Eigen::Index i = 0; i < inputs; ++i) h += ",u" + std::to_string(i);
  h += ",V,b_lse,b_min,lambda_V,lambda_h,delta,active_set";
  return h;
}

inline void write_csv(std::ostream& os, const TrajectoryLog& log) {
  const Eigen::Index n = log.empty() ? 0 : log.records.front().q.size();
  const Eigen::Index m = log.empty() ? 0 : log.records.front().u.size();
  os << kLogVersionLine << '\n' << csv_header(n, m) << '\n';
  using detail::format_double;
  for (const auto& r : log.records) {
    os << format_double(r.t);
    for (Eigen::Index i = 0; i < r.q.size(); ++i) os << ',' << format_double(r.q[i]);
    for (int i = 0; i < 3; ++i) os << ',' << format_double(r.tip[i]);
    for (Eigen::Index i = 0; i < r.u.size(); ++i) os << ',' << format_double(r.u[i]);
    for (double v : {r.V, r.b_lse, r.b_min, r.lambda_V, r.lambda_h, r.delta}) os << ',' << format_double(v);
    os << ',' << r.active_set << '\n';
  }
}

inline void write_csv(const std::string& path, const TrajectoryLog& log) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot open " + path + " for writing");
  write_csv(f, log);
}

inline std::string to_csv(const TrajectoryLog& log) {
  std::ostringstream os;
  write_csv(os, log);
  return os.str();
}

}  // namespace softcbf
