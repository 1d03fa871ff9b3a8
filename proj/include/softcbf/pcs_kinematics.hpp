#pragma once

// Piecewise-constant-strain (PCS) kinematics: the backbone is split into N
// segments, each with a constant strain twist. The configuration q stacks the
// deviations of the active strain components from the reference strain,
// segment-major, in twist order.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softcbf/errors.hpp"
#include "softcbf/se3.hpp"

namespace softcbf {

using StrainMask = std::array<bool, 6>;
using Configuration = Eigen::VectorXd;

inline constexpr StrainMask kFullStrain{true, true, true, true, true, true};
// Torsion, both bends and elongation; shear frozen.
inline constexpr StrainMask kNoShear{true, true, true, true, false, false};
// Both bends and elongation; shear and torsion frozen.
inline constexpr StrainMask kBendAxial{false, true, true, true, false, false};

inline int mask_count(const StrainMask& m) {
  int n = 0;
  for (bool b : m) n += b ? 1 : 0;
  return n;
}

// Rotation taking the segment-local backbone tangent (x) to world +z.
inline Pose default_mount() {
  Pose p;
  p.rotation << 0.0, 0.0, -1.0,
                0.0, 1.0, 0.0,
                1.0, 0.0, 0.0;
  return p;
}

struct RobotModel {
  std::vector<double> segment_lengths;
  double body_radius = 0.036;
  std::vector<Twist6> reference_strain;
  std::vector<StrainMask> active_mask;
  Pose mount = default_mount();

  // N equal segments, straight unstretched reference strain.
  static RobotModel uniform(int num_segments, double total_length, double body_radius,
                            const StrainMask& mask, const Pose& mount = default_mount()) {
    if (num_segments < 1) throw InvalidArgument("robot model needs at least one segment");
    RobotModel m;
    m.segment_lengths.assign(num_segments, total_length / num_segments);
    m.body_radius = body_radius;
    m.reference_strain.assign(num_segments, Twist6(Vec3::Zero(), Vec3::UnitX()));
    m.active_mask.assign(num_segments, mask);
    m.mount = mount;
    m.validate();
    return m;
  }

  int num_segments() const { return static_cast<int>(segment_lengths.size()); }

  double total_length() const {
    double l = 0.0;
    for (double li : segment_lengths) l += li;
    return l;
  }

  int dof() const {
    int n = 0;
    for (const auto& m : active_mask) n += mask_count(m);
    return n;
  }

  // Index of the first configuration entry belonging to segment i.
  int segment_offset(int i) const {
    int n = 0;
    for (int k = 0; k < i; ++k) n += mask_count(active_mask[k]);
    return n;
  }

  void validate() const {
    const auto n = segment_lengths.size();
    if (n < 1) throw InvalidArgument("robot model needs at least one segment");
    if (reference_strain.size() != n || active_mask.size() != n)
      throw InvalidArgument("reference strain and mask must have one entry per segment");
    for (double l : segment_lengths)
      if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("segment lengths must be positive");
    if (!(body_radius > 0.0)) throw InvalidArgument("body radius must be positive");
    for (const auto& x : reference_strain) {
      if (!x.allFinite()) throw InvalidArgument("reference strain must be finite");
      if (std::abs(x.sigma.x() - 1.0) > 1e-12)
        throw InvalidArgument("reference axial strain must equal 1");
    }
    const Mat3& r = mount.rotation;
    if ((r.transpose() * r - Mat3::Identity()).norm() > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9)
      throw InvalidArgument("mount rotation must be a proper rotation");
  }
};

// Two 0.15 m segments, 0.036 m body radius.
inline RobotModel default_robot_model(const StrainMask& mask = kFullStrain) {
  return RobotModel::uniform(2, 0.3, 0.036, mask);
}

inline void check_configuration(const RobotModel& model, const Configuration& q) {
  if (q.size() != model.dof())
    throw ConfigurationShapeError("configuration has " + std::to_string(q.size()) +
                                  " entries, model expects " + std::to_string(model.dof()));
  if (!q.allFinite()) throw ConfigurationShapeError("configuration has non-finite entries");
}

// Per-segment strain twists: reference strain with q inserted at active slots.
inline std::vector<Twist6> embed(const RobotModel& model, const Configuration& q) {
  check_configuration(model, q);
  std::vector<Twist6> out;
  out.reserve(model.num_segments());
  int k = 0;
  for (int i = 0; i < model.num_segments(); ++i) {
    Vec6 xi = model.reference_strain[i].vector();
    for (int c = 0; c < 6; ++c)
      if (model.active_mask[i][c]) xi[c] += q[k++];
    out.push_back(Twist6::from_vector(xi));
  }
  return out;
}

// Inverse of embed over the active components; masked components are dropped.
inline Configuration extract(const RobotModel& model, std::span<const Twist6> strains) {
  if (static_cast<int>(strains.size()) != model.num_segments())
    throw ConfigurationShapeError("strain list does not match segment count");
  Configuration q(model.dof());
  int k = 0;
  for (int i = 0; i < model.num_segments(); ++i) {
    Vec6 d = strains[i].vector() - model.reference_strain[i].vector();
    for (int c = 0; c < 6; ++c)
      if (model.active_mask[i][c]) q[k++] = d[c];
  }
  return q;
}

// Kinematic state of the whole backbone for one configuration. Construction
// computes the segment transforms once; queries at any abscissa are then
// O(number of segments).
class BodyKinematics {
 public:
  BodyKinematics(const RobotModel& model, const Configuration& q, bool with_jacobian = true)
      : model_(&model), strains_(embed(model, q)), with_jacobian_(with_jacobian) {
    const int n = model.num_segments();
    starts_.resize(n + 1);
    frames_.resize(n + 1);
    starts_[0] = 0.0;
    frames_[0] = model.mount;
    for (int i = 0; i < n; ++i) {
      starts_[i + 1] = starts_[i] + model.segment_lengths[i];
      frames_[i + 1] = frames_[i] * exp_se3(strains_[i], model.segment_lengths[i]);
    }
    if (with_jacobian_) {
      omega_.resize(n);
      upsilon_.resize(n);
      for (int i = 0; i < n; ++i) {
        const double l = model.segment_lengths[i];
        Mat6 jr = l * se3_right_jacobian(l * strains_[i].vector());
        const Mat3& rot = frames_[i + 1].rotation;
        omega_[i] = rot * jr.topRows<3>();
        upsilon_[i] = rot * jr.bottomRows<3>();
      }
    }
  }

  BodyKinematics(RobotModel&&, const Configuration&, bool = true) = delete;

  const RobotModel& model() const { return *model_; }
  const std::vector<Twist6>& strains() const { return strains_; }
  double length() const { return starts_.back(); }

  Pose pose(double s) const {
    auto [k, r] = locate(s);
    return frames_[k] * exp_se3(strains_[k], r);
  }

  Vec3 position(double s) const { return pose(s).translation; }

  // 3 x dof positional Jacobian at abscissa s, written into `out`.
  void jacobian(double s, Eigen::Ref<Eigen::Matrix3Xd> out) const {
    if (!with_jacobian_) throw InvalidArgument("BodyKinematics built without Jacobian data");
    auto [k, r] = locate(s);
    const Pose e = exp_se3(strains_[k], r);
    const Pose at = frames_[k] * e;
    jacobian_impl(k, r, at, out);
  }

  // Position and Jacobian in one pass.
  void position_and_jacobian(double s, Vec3& p, Eigen::Ref<Eigen::Matrix3Xd> out) const {
    if (!with_jacobian_) throw InvalidArgument("BodyKinematics built without Jacobian data");
    auto [k, r] = locate(s);
    const Pose at = frames_[k] * exp_se3(strains_[k], r);
    p = at.translation;
    jacobian_impl(k, r, at, out);
  }

  Eigen::Matrix3Xd jacobian(double s) const {
    Eigen::Matrix3Xd j(3, model_->dof());
    jacobian(s, j);
    return j;
  }

 private:
  struct Location {
    int segment;
    double residual;
  };

  Location locate(double s) const {
    const double len = starts_.back();
    if (!(s > 0.0) || s > len * (1.0 + 1e-12)) {
      throw DomainError("abscissa " + std::to_string(s) + " outside (0, " + std::to_string(len) + "]");
    }
    const int n = model_->num_segments();
    for (int k = 0; k < n; ++k) {
      if (s <= starts_[k + 1] || k == n - 1) {
        return {k, std::min(s, starts_[k + 1]) - starts_[k]};
      }
    }
    return {n - 1, model_->segment_lengths.back()};
  }

  void scatter(int segment, const Eigen::Matrix<double, 3, 6>& block,
               Eigen::Ref<Eigen::Matrix3Xd> out) const {
    int col = model_->segment_offset(segment);
    const auto& mask = model_->active_mask[segment];
    for (int c = 0; c < 6; ++c)
      if (mask[c]) out.col(col++) = block.col(c);
  }

  void jacobian_impl(int k, double r, const Pose& at, Eigen::Ref<Eigen::Matrix3Xd> out) const {
    if (out.cols() != model_->dof()) throw ConfigurationShapeError("Jacobian buffer has wrong width");
    out.setZero();
    const Vec3& p = at.translation;
    for (int i = 0; i < k; ++i) {
      Eigen::Matrix<double, 3, 6> block =
          -tilde3(p - frames_[i + 1].translation) * omega_[i] + upsilon_[i];
      scatter(i, block, out);
    }
    Mat6 jr = r * se3_right_jacobian(r * strains_[k].vector());
    Eigen::Matrix<double, 3, 6> block = at.rotation * jr.bottomRows<3>();
    scatter(k, block, out);
  }

  const RobotModel* model_;
  std::vector<Twist6> strains_;
  bool with_jacobian_;
  std::vector<double> starts_;
  std::vector<Pose> frames_;  // frames_[i]: pose at the start of segment i
  std::vector<Eigen::Matrix<double, 3, 6>> omega_;
  std::vector<Eigen::Matrix<double, 3, 6>> upsilon_;
};

inline Pose forward_kinematics(const RobotModel& model, const Configuration& q, double s) {
  return BodyKinematics(model, q, false).pose(s);
}

inline Eigen::Matrix3Xd positional_jacobian(const RobotModel& model, const Configuration& q, double s) {
  return BodyKinematics(model, q, true).jacobian(s);
}

struct SphereChain {
  Eigen::Matrix3Xd centers;
  Eigen::VectorXd radii;
  Eigen::VectorXd abscissae;

  int size() const { return static_cast<int>(abscissae.size()); }
};

// Uniform abscissae i * L / n_res for i = 1..n_res (tip included, base excluded).
inline Eigen::VectorXd sphere_abscissae(const RobotModel& model, int n_res) {
  if (n_res < 1) throw InvalidArgument("sphere chain needs at least one sphere");
  const double len = model.total_length();
  Eigen::VectorXd s(n_res);
  for (int i = 0; i < n_res; ++i) s[i] = len * static_cast<double>(i + 1) / n_res;
  s[n_res - 1] = len;
  return s;
}

inline SphereChain sphere_chain(const BodyKinematics& body, int n_res) {
  SphereChain chain;
  chain.abscissae = sphere_abscissae(body.model(), n_res);
  chain.centers.resize(3, n_res);
  for (int i = 0; i < n_res; ++i) chain.centers.col(i) = body.position(chain.abscissae[i]);
  chain.radii = Eigen::VectorXd::Constant(n_res, body.model().body_radius);
  return chain;
}

inline SphereChain sphere_chain(const RobotModel& model, const Configuration& q, int n_res) {
  return sphere_chain(BodyKinematics(model, q, false), n_res);
}

}  // namespace softcbf
