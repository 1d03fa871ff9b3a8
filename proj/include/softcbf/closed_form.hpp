#pragma once

// Closed-form solution of the two-row CLF-CBF QP
//
//   min_u,delta  |u|^2 + w delta^2
//   s.t.         a_V^T u + b_V <= delta,   a_h^T u + b_h >= 0,   delta >= 0
//
// from its KKT conditions. Stationarity gives u = -(lambda_V a_V - lambda_h a_h)/2
// and delta = lambda_V/(2w). With both rows active the multipliers solve
//
//   [G11 + 1/w  -G12] [lambda_V]   [ 2 b_V]
//   [-G12        G22] [lambda_h] = [-2 b_h]
//
// The four active-set candidates are evaluated and the primal/dual feasible
// one with the lowest objective is returned. Hard mode is the w -> inf limit:
// the 1/w term and delta disappear.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "softcbf/errors.hpp"
#include "softcbf/safety.hpp"

namespace softcbf {

enum class ClfMode { relaxed, hard };
enum class ActiveSet { both, clf_only, cbf_only, none };

inline std::string_view to_string(ActiveSet a) {
  switch (a) {
    case ActiveSet::both: return "both";
    case ActiveSet::clf_only: return "clf-only";
    case ActiveSet::cbf_only: return "cbf-only";
    case ActiveSet::none: return "none";
  }
  return "none";
}

inline std::string_view to_string(ClfMode m) { return m == ClfMode::hard ? "hard-clf" : "relaxed"; }

// Active set read off the multipliers: a row counts as active when lambda > tau.
inline ActiveSet classify(double lambda_V, double lambda_h, double tau = 0.0) {
  const bool v = lambda_V > tau, h = lambda_h > tau;
  if (v && h) return ActiveSet::both;
  if (v) return ActiveSet::clf_only;
  if (h) return ActiveSet::cbf_only;
  return ActiveSet::none;
}

struct ControlSolution {
  Eigen::VectorXd u_star;
  double lambda_V = 0.0;
  double lambda_h = 0.0;
  double delta_star = 0.0;
  ActiveSet active_set = ActiveSet::none;
  ClfMode mode = ClfMode::relaxed;
  bool feasible = true;          // false: hard CLF could not be met, CBF kept
  bool degenerate_gram = false;  // both-active system was skipped (Delta <= Delta_min)
};

struct Gram {
  double g11 = 0.0;
  double g12 = 0.0;
  double g22 = 0.0;
};

inline Gram gram_entries(const ConstraintRows& rows) {
  return {rows.a_V.squaredNorm(), rows.a_V.dot(rows.a_h), rows.a_h.squaredNorm()};
}

// |u|^2 + w delta^2 (the delta term is absent in hard mode).
inline double qp_objective(const Eigen::VectorXd& u, double delta, double w_clf, ClfMode mode) {
  return u.squaredNorm() + (mode == ClfMode::relaxed ? w_clf * delta * delta : 0.0);
}

namespace detail {

struct Candidate {
  double lv = 0.0;
  double lh = 0.0;
  bool valid = false;
};

}  // namespace detail

inline ControlSolution solve_closed_form(const ConstraintRows& rows, double w_clf, ClfMode mode) {
  if (rows.a_V.size() != rows.a_h.size()) throw InvalidArgument("constraint rows have different widths");
  if (!rows.allFinite()) throw InvalidArgument("constraint rows must be finite");
  if (mode == ClfMode::relaxed && !(w_clf > 0.0 && std::isfinite(w_clf)))
    throw InvalidArgument("relaxed mode needs a finite positive w_clf");

  const Gram g = gram_entries(rows);
  const bool has_cbf = std::isfinite(rows.b_h);
  if (has_cbf && g.g22 == 0.0 && rows.b_h < 0.0)
    throw InfeasibleBarrierError("barrier violated with zero control authority");

  const double inv_w = mode == ClfMode::relaxed ? 1.0 / w_clf : 0.0;
  const double bv = rows.b_V, bh = rows.b_h;
  const double g11w = g.g11 + inv_w;

  // candidates: both, clf-only, cbf-only, none
  std::array<detail::Candidate, 4> cand;
  ControlSolution out;
  out.mode = mode;

  const double delta = g11w * g.g22 - g.g12 * g.g12;
  const double delta_min = 1e-12 * std::max(1.0, g.g11 * g.g22);
  if (has_cbf) {
    if (delta > delta_min) {
      cand[0] = {(2.0 * bv * g.g22 - 2.0 * bh * g.g12) / delta, (2.0 * bv * g.g12 - 2.0 * bh * g11w) / delta, true};
    } else {
      out.degenerate_gram = true;
    }
  }
  if (g11w > 0.0) cand[1] = {2.0 * bv / g11w, 0.0, true};
  if (has_cbf && g.g22 > 0.0) cand[2] = {0.0, -2.0 * bh / g.g22, true};
  cand[3] = {0.0, 0.0, true};

  // Residuals follow from the Gram entries: a_V^T u and a_h^T u.
  const double scale_v = 1.0 + std::abs(bv);
  const double scale_h = 1.0 + (has_cbf ? std::abs(bh) : 0.0);
  int best = -1, fallback = -1;
  double best_obj = kInf, fallback_viol = kInf;
  for (int k = 0; k < 4; ++k) {
    const auto& c = cand[k];
    if (!c.valid || !std::isfinite(c.lv) || !std::isfinite(c.lh)) continue;
    if (c.lv < 0.0 || c.lh < 0.0) continue;
    const double avu = -0.5 * (c.lv * g.g11 - c.lh * g.g12);
    const double ahu = -0.5 * (c.lv * g.g12 - c.lh * g.g22);
    const double d = 0.5 * c.lv * inv_w;
    const double clf_viol = std::max(0.0, avu + bv - d);
    const bool cbf_ok = !has_cbf || ahu + bh >= -1e-10 * scale_h * (1.0 + c.lh * g.g22);
    const bool clf_ok = clf_viol <= 1e-10 * scale_v * (1.0 + c.lv * g11w);
    // Objective from Gram entries: |u|^2 = (lv^2 G11 - 2 lv lh G12 + lh^2 G22)/4.
    const double obj = 0.25 * (c.lv * c.lv * g.g11 - 2.0 * c.lv * c.lh * g.g12 + c.lh * c.lh * g.g22) +
                       (mode == ClfMode::relaxed ? w_clf * d * d : 0.0);
    if (cbf_ok && clf_ok) {
      if (obj < best_obj) {
        best_obj = obj;
        best = k;
      }
    } else if (cbf_ok && clf_viol < fallback_viol) {
      fallback_viol = clf_viol;
      fallback = k;
    }
  }
  if (best < 0) {
    // Only reachable in hard mode: keep the barrier, get as close to the CLF row as possible.
    out.feasible = false;
    best = fallback >= 0 ? fallback : 3;
  }
  out.lambda_V = cand[best].lv;
  out.lambda_h = cand[best].lh;
  out.u_star = -0.5 * (out.lambda_V * rows.a_V - out.lambda_h * rows.a_h);
  out.delta_star = mode == ClfMode::relaxed ? 0.5 * out.lambda_V * inv_w : 0.0;
  out.active_set = classify(out.lambda_V, out.lambda_h);
  return out;
}

// Task-only controller: the CBF row is dropped.
inline ControlSolution solve_clf_only(const ConstraintRows& rows, double w_clf, ClfMode mode) {
  ConstraintRows r = rows;
  r.a_h = Eigen::VectorXd::Zero(rows.a_V.size());
  r.b_h = kInf;
  return solve_closed_form(r, w_clf, mode);
}

inline ClfMode mode_of(const SafetyConfig& config) { return config.hard_clf() ? ClfMode::hard : ClfMode::relaxed; }

inline Eigen::VectorXd clamp_input(const Eigen::VectorXd& u, double u_clip) {
  if (!std::isfinite(u_clip)) return u;
  return u.cwiseMax(-u_clip).cwiseMin(u_clip);
}

// rows -> closed-form solve -> elementwise clamp to +-u_clip.
inline Eigen::VectorXd control_step(const RobotModel& model, const TendonLayout& layout, const Configuration& q,
                                    const Vec3& target, std::span<const Obstacle> obstacles,
                                    const SafetyConfig& config, int n_res, double u_clip = kInf) {
  const ConstraintRows rows = assemble_rows(model, layout, q, target, obstacles, config, n_res);
  return clamp_input(solve_closed_form(rows, config.w_clf, mode_of(config)).u_star, u_clip);
}

}  // namespace softcbf
