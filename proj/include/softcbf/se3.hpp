#pragma once

// SE(3) primitives for constant-strain rod segments.
//
// Twists are ordered angular-first, (kappa_x, kappa_y, kappa_z, sigma_x,
// sigma_y, sigma_z), everywhere in this library. The segment-local x axis is
// the backbone tangent, so sigma_x is the axial strain.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace softcbf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat4 = Eigen::Matrix4d;

struct Twist6 {
  Vec3 kappa = Vec3::Zero();  // angular strains [1/m]
  Vec3 sigma = Vec3::Zero();  // linear strains [-]

  Twist6() = default;
  Twist6(const Vec3& k, const Vec3& s) : kappa(k), sigma(s) {}

  static Twist6 from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }

  Vec6 vector() const {
    Vec6 v;
    v << kappa, sigma;
    return v;
  }

  Twist6 operator+(const Twist6& o) const { return {kappa + o.kappa, sigma + o.sigma}; }
  Twist6 operator-(const Twist6& o) const { return {kappa - o.kappa, sigma - o.sigma}; }
  Twist6 operator*(double a) const { return {a * kappa, a * sigma}; }
  friend Twist6 operator*(double a, const Twist6& t) { return t * a; }

  bool allFinite() const { return kappa.allFinite() && sigma.allFinite(); }
};

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Pose operator*(const Pose& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -rt * translation};
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

inline Mat3 tilde3(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

inline Vec3 vee3(const Mat3& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

inline Mat4 hat6(const Twist6& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = tilde3(xi.kappa);
  m.topRightCorner<3, 1>() = xi.sigma;
  return m;
}

// Series switch for exp_se3, applied to ||kappa|| * s.
inline constexpr double kExpSeriesThreshold = 1e-8;

namespace detail {

// sin(t)/t
inline double sinc(double t) {
  if (t < 1e-4) return 1.0 - t * t / 6.0 + t * t * t * t / 120.0;
  return std::sin(t) / t;
}

// (1 - cos t)/t^2, written with sin^2(t/2) to avoid cancellation.
inline double one_minus_cos_over_sq(double t) {
  if (t < 1e-4) return 0.5 - t * t / 24.0 + t * t * t * t / 720.0;
  double h = std::sin(0.5 * t) / t;
  return 2.0 * h * h;
}

// (t - sin t)/t^3
inline double t_minus_sin_over_cube(double t) {
  if (t < 0.3) {
    double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0 +
           t2 * t2 * t2 * t2 / 39916800.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

// (t^2 + 2 cos t - 2)/(2 t^4)
inline double coeff_d(double t) {
  if (t < 0.3) {
    double t2 = t * t;
    return 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0 - t2 * t2 * t2 / 3628800.0 +
           t2 * t2 * t2 * t2 / 479001600.0;
  }
  double t2 = t * t;
  return (t2 + 2.0 * std::cos(t) - 2.0) / (2.0 * t2 * t2);
}

// (2t - 3 sin t + t cos t)/(2 t^5)
inline double coeff_e(double t) {
  if (t < 0.3) {
    double t2 = t * t;
    return 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0 - t2 * t2 * t2 / 9979200.0;
  }
  double t2 = t * t;
  return (2.0 * t - 3.0 * std::sin(t) + t * std::cos(t)) / (2.0 * t2 * t2 * t);
}

}  // namespace detail

// Left Jacobian of SO(3): I + B W + C W^2.
inline Mat3 so3_left_jacobian(const Vec3& phi) {
  double t = phi.norm();
  Mat3 w = tilde3(phi);
  return Mat3::Identity() + detail::one_minus_cos_over_sq(t) * w +
         detail::t_minus_sin_over_cube(t) * w * w;
}

// Transform of a constant-strain segment of arclength s: exp(s * hat6(xi)).
inline Pose exp_se3(const Twist6& xi, double s) {
  const Vec3 phi = s * xi.kappa;
  const Vec3 rho = s * xi.sigma;
  const double t = phi.norm();
  const Mat3 w = tilde3(phi);
  const Mat3 w2 = w * w;
  Pose out;
  if (t <= kExpSeriesThreshold) {
    out.rotation = Mat3::Identity() + w + 0.5 * w2;
    out.translation = (Mat3::Identity() + 0.5 * w + w2 / 6.0) * rho;
    return out;
  }
  out.rotation = Mat3::Identity() + detail::sinc(t) * w + detail::one_minus_cos_over_sq(t) * w2;
  out.translation = (Mat3::Identity() + detail::one_minus_cos_over_sq(t) * w +
                     detail::t_minus_sin_over_cube(t) * w2) *
                    rho;
  return out;
}

enum class LogBranch { small_angle, regular, near_pi };

struct LogResult {
  Twist6 twist;
  LogBranch branch = LogBranch::regular;
};

// Inverse of exp_se3 at unit arclength. Rotation angle is returned in [0, pi].
inline LogResult log_se3(const Pose& pose) {
  const Mat3& r = pose.rotation;
  double cos_t = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  // atan2 keeps full precision near 0 and pi where acos loses half the digits.
  double t = std::atan2(0.5 * vee3(r - r.transpose()).norm(), cos_t);
  Vec3 phi;
  LogResult out;
  if (t < 1e-6) {
    // R - R^T = 2 sinc(t) W; sinc ~ 1 - t^2/6
    phi = vee3(r - r.transpose()) * (0.5 / detail::sinc(t));
    out.branch = LogBranch::small_angle;
  } else if (std::numbers::pi - t < 1e-6) {
    // Symmetric part is I + (1 - cos t)(n n^T - I); solve for n n^T.
    Mat3 s = (0.5 * (r + r.transpose()) - cos_t * Mat3::Identity()) / (1.0 - cos_t);
    int k = 0;
    s.diagonal().maxCoeff(&k);
    Vec3 n = s.col(k) / std::sqrt(std::max(s(k, k), 1e-300));
    n.normalize();
    Vec3 skew = vee3(r - r.transpose());
    if (n.dot(skew) < 0.0) n = -n;
    phi = t * n;
    out.branch = LogBranch::near_pi;
  } else {
    phi = vee3(r - r.transpose()) * (0.5 * t / std::sin(t));
    out.branch = LogBranch::regular;
  }
  Mat3 v = so3_left_jacobian(phi);
  out.twist = Twist6(phi, v.lu().solve(pose.translation));
  return out;
}

// Left Jacobian of SE(3) for an angular-first twist zeta = (phi, rho):
// exp((zeta + d)^) ~ exp((J_l d)^) exp(zeta^).
inline Mat6 se3_left_jacobian(const Vec6& zeta) {
  const Vec3 phi = zeta.head<3>();
  const Vec3 rho = zeta.tail<3>();
  const double t = phi.norm();
  const Mat3 p = tilde3(phi);
  const Mat3 r = tilde3(rho);
  const Mat3 pr = p * r;
  const Mat3 rp = r * p;
  const Mat3 prp = pr * p;
  const Mat3 q = 0.5 * r + detail::t_minus_sin_over_cube(t) * (pr + rp + prp) +
                 detail::coeff_d(t) * (p * pr + rp * p - 3.0 * prp) +
                 detail::coeff_e(t) * (prp * p + p * prp);
  const Mat3 jl = so3_left_jacobian(phi);
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = jl;
  j.bottomRightCorner<3, 3>() = jl;
  j.bottomLeftCorner<3, 3>() = q;
  return j;
}

// Right Jacobian: exp((zeta + d)^) ~ exp(zeta^) exp((J_r d)^).
inline Mat6 se3_right_jacobian(const Vec6& zeta) { return se3_left_jacobian(-zeta); }

}  // namespace softcbf
