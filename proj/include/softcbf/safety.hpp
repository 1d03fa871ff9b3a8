#pragma once

// Whole-body collision barriers, their log-sum-exp aggregate, the tip
// regulation CLF, and the linear constraint rows handed to the controllers.
//
// Row conventions: CLF row a_V^T u + b_V <= delta, CBF row a_h^T u + b_h >= 0.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "softcbf/errors.hpp"
#include "softcbf/pcs_kinematics.hpp"
#include "softcbf/tendon.hpp"

namespace softcbf {

struct Obstacle {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SafetyConfig {
  double d_safe = 0.0;
  double kappa_lse = 100.0;  // 1/m
  double gamma = 1.0;        // 1/s, alpha(b) = gamma * b
  double c3 = 1.0;           // 1/s
  double w_clf = 100.0;      // infinity selects the hard CLF

  bool hard_clf() const { return std::isinf(w_clf); }

  void validate() const {
    if (!(kappa_lse > 0.0)) throw InvalidArgument("kappa_lse must be positive");
    if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
    if (!(c3 > 0.0)) throw InvalidArgument("c3 must be positive");
    if (!(w_clf > 0.0)) throw InvalidArgument("w_clf must be positive or infinite");
    if (!std::isfinite(d_safe) || d_safe < 0.0) throw InvalidArgument("d_safe must be finite and non-negative");
  }
};

struct ConstraintRows {
  Eigen::VectorXd a_V;
  double b_V = 0.0;
  Eigen::VectorXd a_h;
  double b_h = kInf;

  bool allFinite() const { return a_V.allFinite() && a_h.allFinite() && std::isfinite(b_V) && !std::isnan(b_h); }
};

inline void validate_obstacles(std::span<const Obstacle> obstacles) {
  for (const auto& o : obstacles)
    if (!(o.radius > 0.0) || !o.center.allFinite()) throw InvalidArgument("obstacle radius must be positive");
}

// b_ij for spheres i (rows) and obstacles j (columns).
inline Eigen::MatrixXd pairwise_barriers(const SphereChain& chain, std::span<const Obstacle> obstacles,
                                         double d_safe) {
  Eigen::MatrixXd b(chain.size(), static_cast<Eigen::Index>(obstacles.size()));
  for (int i = 0; i < chain.size(); ++i)
    for (std::size_t j = 0; j < obstacles.size(); ++j)
      b(i, j) = (obstacles[j].center - chain.centers.col(i)).norm() - obstacles[j].radius - chain.radii[i] - d_safe;
  return b;
}

inline Eigen::MatrixXd pairwise_barriers(const RobotModel& model, const Configuration& q, int n_res,
                                         std::span<const Obstacle> obstacles, double d_safe) {
  return pairwise_barriers(sphere_chain(model, q, n_res), obstacles, d_safe);
}

// Smallest pairwise barrier; +inf when there are no obstacles.
inline double min_barrier(const Eigen::MatrixXd& b) { return b.size() ? b.minCoeff() : kInf; }

// -(1/kappa) log sum exp(-kappa b), shifted by the minimum.
inline double lse_barrier(const Eigen::MatrixXd& b, double kappa) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa_lse must be positive");
  if (b.size() == 0) return kInf;
  const double m = b.minCoeff();
  const double s = (-kappa * (b.array() - m)).exp().sum();
  return m - std::log(s) / kappa;
}

// Softmax weights exp(-kappa b_ij) / sum exp(-kappa b_kl).
inline Eigen::MatrixXd lse_weights(const Eigen::MatrixXd& b, double kappa) {
  if (b.size() == 0) return b;
  Eigen::MatrixXd w = (-kappa * (b.array() - b.minCoeff())).exp().matrix();
  return w / w.sum();
}

struct BarrierEvaluation {
  Eigen::MatrixXd pairwise;
  double b_lse = kInf;
  double b_min = kInf;
  Eigen::VectorXd gradient;  // d b_lse / dq
  bool degenerate = false;   // some sphere centre coincided with an obstacle centre
};

namespace detail {

// Positions and Jacobians of every sphere centre in one pass.
struct ChainJacobians {
  SphereChain chain;
  std::vector<Eigen::Matrix3Xd> jacobians;
};

inline ChainJacobians chain_jacobians(const BodyKinematics& body, int n_res) {
  ChainJacobians out;
  out.chain.abscissae = sphere_abscissae(body.model(), n_res);
  out.chain.centers.resize(3, n_res);
  out.chain.radii = Eigen::VectorXd::Constant(n_res, body.model().body_radius);
  out.jacobians.assign(n_res, Eigen::Matrix3Xd(3, body.model().dof()));
  for (int i = 0; i < n_res; ++i) {
    Vec3 p;
    body.position_and_jacobian(out.chain.abscissae[i], p, out.jacobians[i]);
    out.chain.centers.col(i) = p;
  }
  return out;
}

inline Vec3 unit_or_zero(const Vec3& v, bool& degenerate) {
  const double n = v.norm();
  if (n == 0.0) {
    degenerate = true;
    return Vec3::Zero();
  }
  return v / n;
}

inline BarrierEvaluation evaluate_barrier(const BodyKinematics& body, int n_res, std::span<const Obstacle> obstacles,
                                          const SafetyConfig& config) {
  BarrierEvaluation e;
  e.gradient = Eigen::VectorXd::Zero(body.model().dof());
  if (obstacles.empty()) {
    e.pairwise.resize(n_res, 0);
    return e;
  }
  ChainJacobians cj = chain_jacobians(body, n_res);
  e.pairwise = pairwise_barriers(cj.chain, obstacles, config.d_safe);
  e.b_lse = lse_barrier(e.pairwise, config.kappa_lse);
  e.b_min = e.pairwise.minCoeff();
  const Eigen::MatrixXd w = lse_weights(e.pairwise, config.kappa_lse);
  for (int i = 0; i < n_res; ++i) {
    Vec3 dir = Vec3::Zero();
    for (std::size_t j = 0; j < obstacles.size(); ++j)
      dir += w(i, j) * unit_or_zero(cj.chain.centers.col(i) - obstacles[j].center, e.degenerate);
    e.gradient.noalias() += cj.jacobians[i].transpose() * dir;
  }
  return e;
}

}  // namespace detail

// Value, pairwise matrix and gradient of the aggregated barrier.
inline BarrierEvaluation lse_barrier_gradient(const RobotModel& model, const Configuration& q, int n_res,
                                              std::span<const Obstacle> obstacles, const SafetyConfig& config) {
  BodyKinematics body(model, q, true);
  return detail::evaluate_barrier(body, n_res, obstacles, config);
}

// Gradient of a single pair (i, j): unit(c_i - p_obs)^T J_i.
inline Eigen::VectorXd pair_barrier_gradient(const RobotModel& model, const Configuration& q, int n_res, int i,
                                             const Obstacle& obstacle) {
  BodyKinematics body(model, q, true);
  const double s = sphere_abscissae(model, n_res)[i];
  Vec3 p;
  Eigen::Matrix3Xd j(3, model.dof());
  body.position_and_jacobian(s, p, j);
  bool degenerate = false;
  return j.transpose() * detail::unit_or_zero(p - obstacle.center, degenerate);
}

inline double clf_value(const RobotModel& model, const Configuration& q, const Vec3& target) {
  return (target - forward_kinematics(model, q, model.total_length()).translation).squaredNorm();
}

inline Eigen::VectorXd clf_gradient(const RobotModel& model, const Configuration& q, const Vec3& target) {
  BodyKinematics body(model, q, true);
  Vec3 p;
  Eigen::Matrix3Xd j(3, model.dof());
  body.position_and_jacobian(model.total_length(), p, j);
  return -2.0 * j.transpose() * (target - p);
}

// Everything the controllers and the log need from one state.
struct SafetyState {
  ConstraintRows rows;
  double V = 0.0;
  double b_lse = kInf;
  double b_min = kInf;
  bool degenerate = false;
  Vec3 tip = Vec3::Zero();
  Eigen::MatrixXd pseudoinverse;  // J_l^+ at q
};

inline SafetyState evaluate_safety(const RobotModel& model, const TendonLayout& layout, const Configuration& q,
                                   const Vec3& target, std::span<const Obstacle> obstacles, const SafetyConfig& config,
                                   int n_res) {
  BodyKinematics body(model, q, true);
  SafetyState st;
  Eigen::Matrix3Xd jt(3, model.dof());
  body.position_and_jacobian(model.total_length(), st.tip, jt);
  const Vec3 e = target - st.tip;
  st.V = e.squaredNorm();
  const Eigen::VectorXd grad_v = -2.0 * jt.transpose() * e;

  BarrierEvaluation be = detail::evaluate_barrier(body, n_res, obstacles, config);
  st.b_lse = be.b_lse;
  st.b_min = be.b_min;
  st.degenerate = be.degenerate;

  st.pseudoinverse = pseudo_inverse(tendon_jacobian(model, layout, q)).matrix;
  st.rows.a_V = st.pseudoinverse.transpose() * grad_v;
  st.rows.b_V = config.c3 * st.V;
  st.rows.a_h = st.pseudoinverse.transpose() * be.gradient;
  st.rows.b_h = obstacles.empty() ? kInf : config.gamma * be.b_lse;
  return st;
}

// (a_V, b_V, a_h, b_h) with L_g V = grad V^T J_l^+ and b_h = gamma * b_lse.
inline ConstraintRows assemble_rows(const RobotModel& model, const TendonLayout& layout, const Configuration& q,
                                    const Vec3& target, std::span<const Obstacle> obstacles,
                                    const SafetyConfig& config, int n_res) {
  return evaluate_safety(model, layout, q, target, obstacles, config, n_res).rows;
}

// One CBF row per (sphere, obstacle) pair, for the unaggregated QP.
// Row k = i * N_obs + j: a_k^T u + gamma b_ij >= 0.
struct PairwiseRows {
  Eigen::VectorXd a_V;
  double b_V = 0.0;
  Eigen::MatrixXd a_h;  // (N_res N_obs) x m
  Eigen::VectorXd b_h;
};

inline PairwiseRows assemble_pairwise_rows(const RobotModel& model, const TendonLayout& layout,
                                           const Configuration& q, const Vec3& target,
                                           std::span<const Obstacle> obstacles, const SafetyConfig& config,
                                           int n_res) {
  BodyKinematics body(model, q, true);
  PairwiseRows out;
  Vec3 tip;
  Eigen::Matrix3Xd jt(3, model.dof());
  body.position_and_jacobian(model.total_length(), tip, jt);
  const Eigen::MatrixXd pinv = pseudo_inverse(tendon_jacobian(model, layout, q)).matrix;
  const Eigen::MatrixXd jpt = pinv.transpose();
  out.a_V = jpt * (-2.0 * jt.transpose() * (target - tip));
  out.b_V = config.c3 * (target - tip).squaredNorm();

  const int n_obs = static_cast<int>(obstacles.size());
  detail::ChainJacobians cj = detail::chain_jacobians(body, n_res);
  out.a_h.resize(n_res * n_obs, layout.tendon_count());
  out.b_h.resize(n_res * n_obs);
  bool degenerate = false;
  for (int i = 0; i < n_res; ++i) {
    const Eigen::MatrixXd ji = jpt * cj.jacobians[i].transpose();  // m x 3
    for (int j = 0; j < n_obs; ++j) {
      const Vec3 diff = cj.chain.centers.col(i) - obstacles[j].center;
      const int k = i * n_obs + j;
      out.a_h.row(k) = (ji * detail::unit_or_zero(diff, degenerate)).transpose();
      out.b_h[k] = config.gamma * (diff.norm() - obstacles[j].radius - cj.chain.radii[i] - config.d_safe);
    }
  }
  return out;
}

}  // namespace softcbf
