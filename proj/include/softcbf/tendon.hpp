#pragma once

// Tendon routing, tendon lengths and the tendon-actuation Jacobian J_l.
// Control inputs are tendon length rates u; the state evolves as q' = J_l^+ u.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "softcbf/errors.hpp"
#include "softcbf/pcs_kinematics.hpp"
#include "softcbf/se3.hpp"

namespace softcbf {

inline constexpr double kTangentEpsilon = 1e-9;
inline constexpr double kPinvCutoff = 1e-8;

// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (w < 0.0) w += 2.0 * std::numbers::pi;
  return w - std::numbers::pi;
}

struct TendonLayout {
  double routing_radius = 0.036;
  std::vector<double> angles;          // phi_j in [-pi, pi)
  std::vector<int> termination;        // 0-based segment index where tendon j ends

  int tendon_count() const { return static_cast<int>(angles.size()); }

  // Local offset of tendon j from the backbone, (0, R cos phi, R sin phi).
  Vec3 offset(int j) const {
    return {0.0, routing_radius * std::cos(angles[j]), routing_radius * std::sin(angles[j])};
  }

  void validate(const RobotModel& model) const {
    if (angles.empty()) throw InvalidArgument("tendon layout needs at least one tendon");
    if (termination.size() != angles.size())
      throw InvalidArgument("tendon layout needs one termination segment per tendon");
    if (!(routing_radius > 0.0)) throw InvalidArgument("routing radius must be positive");
    for (double a : angles)
      if (!std::isfinite(a) || a < -std::numbers::pi || a >= std::numbers::pi)
        throw InvalidArgument("tendon angles must lie in [-pi, pi)");
    for (int k : termination)
      if (k < 0 || k >= model.num_segments())
        throw InvalidArgument("tendon termination segment " + std::to_string(k) + " out of range");
  }
};

// Three tendons per segment at phi_j = 2 pi j / 3 (j counted from 1 across the
// whole robot), terminating at segment 1, 2, ... in groups of three.
// `segment_twist` rotates each successive group, e.g. pi/3 for a 60 degree offset.
inline TendonLayout default_tendon_layout(const RobotModel& model, double routing_radius = 0.036,
                                          double segment_twist = 0.0) {
  TendonLayout t;
  t.routing_radius = routing_radius;
  for (int i = 0; i < model.num_segments(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const int j = 3 * i + c + 1;
      t.angles.push_back(wrap_angle(2.0 * std::numbers::pi * j / 3.0 + segment_twist * i));
      t.termination.push_back(i);
    }
  }
  return t;
}

// Unit tangent of a tendon at offset d for segment strain xi.
inline Vec3 tendon_tangent(const Twist6& xi, const Vec3& d) {
  Vec3 v = xi.kappa.cross(d) + xi.sigma;
  const double n = v.norm();
  if (!(n > kTangentEpsilon)) throw DegenerateTangentError("tendon tangent argument has norm " + std::to_string(n));
  return v / n;
}

// Theta = [d x t; t].
inline Vec6 local_actuation_map(const Twist6& xi, const Vec3& d) {
  const Vec3 t = tendon_tangent(xi, d);
  Vec6 theta;
  theta << d.cross(t), t;
  return theta;
}

inline Eigen::VectorXd tendon_lengths(const RobotModel& model, const TendonLayout& layout, const Configuration& q) {
  const auto strains = embed(model, q);
  Eigen::VectorXd ell = Eigen::VectorXd::Zero(layout.tendon_count());
  for (int j = 0; j < layout.tendon_count(); ++j) {
    const Vec3 d = layout.offset(j);
    for (int i = 0; i <= layout.termination[j]; ++i)
      ell[j] += local_actuation_map(strains[i], d).dot(strains[i].vector()) * model.segment_lengths[i];
  }
  return ell;
}

// Jacobian with entries Theta^T L_i on active columns. Theta^T xi equals
// |kappa x d + sigma|, whose gradient in xi is Theta itself, so no dTheta/dq
// term is missing.
inline Eigen::MatrixXd tendon_jacobian(const RobotModel& model, const TendonLayout& layout, const Configuration& q) {
  const auto strains = embed(model, q);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(layout.tendon_count(), model.dof());
  for (int j = 0; j < layout.tendon_count(); ++j) {
    const Vec3 d = layout.offset(j);
    for (int i = 0; i <= layout.termination[j]; ++i) {
      const Vec6 row = local_actuation_map(strains[i], d) * model.segment_lengths[i];
      int col = model.segment_offset(i);
      for (int c = 0; c < 6; ++c)
        if (model.active_mask[i][c]) jac(j, col++) = row[c];
    }
  }
  return jac;
}

struct PseudoInverse {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd singular_values;
  int rank = 0;
};

// SVD pseudoinverse; singular values below cutoff * sigma_max are dropped.
inline PseudoInverse pseudo_inverse(const Eigen::MatrixXd& a, double cutoff = kPinvCutoff) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PseudoInverse out;
  out.singular_values = svd.singularValues();
  const double smax = out.singular_values.size() ? out.singular_values[0] : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(out.singular_values.size());
  for (int k = 0; k < inv.size(); ++k) {
    if (smax > 0.0 && out.singular_values[k] > cutoff * smax) {
      inv[k] = 1.0 / out.singular_values[k];
      ++out.rank;
    }
  }
  out.matrix = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

struct ActuationMatrices {
  Eigen::VectorXd tendon_lengths;
  Eigen::MatrixXd jacobian;       // m x n_q
  Eigen::MatrixXd pseudoinverse;  // n_q x m
  Eigen::VectorXd singular_values;
  int rank = 0;

  // Actuation matrix mapping tendon forces to generalized forces.
  Eigen::MatrixXd actuation_matrix() const { return jacobian.transpose(); }
  bool rank_deficient() const { return rank == 0; }
};

inline ActuationMatrices actuation_matrices(const RobotModel& model, const TendonLayout& layout,
                                            const Configuration& q, bool with_lengths = true) {
  ActuationMatrices a;
  if (with_lengths) a.tendon_lengths = tendon_lengths(model, layout, q);
  a.jacobian = tendon_jacobian(model, layout, q);
  PseudoInverse p = pseudo_inverse(a.jacobian);
  a.pseudoinverse = std::move(p.matrix);
  a.singular_values = std::move(p.singular_values);
  a.rank = p.rank;
  return a;
}

// q' = J_l^+(q) u.
inline Eigen::VectorXd actuation_rhs(const RobotModel& model, const TendonLayout& layout, const Configuration& q,
                                     const Eigen::VectorXd& u) {
  if (u.size() != layout.tendon_count()) throw InvalidArgument("input size does not match tendon count");
  if (!u.allFinite()) throw InvalidArgument("input has non-finite entries");
  return actuation_matrices(model, layout, q, false).pseudoinverse * u;
}

}  // namespace softcbf
