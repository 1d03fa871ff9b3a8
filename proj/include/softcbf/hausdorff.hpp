#pragma once

// Symmetric Hausdorff distance between the sphere-chain body and the
// continuous body: a tube of radius R around the backbone closed by
// hemispherical caps at base and tip (the boundary of the volume swept by a
// sphere sliding along the backbone).
//
// Tube samples lie outside every chain sphere, so their distance to the union
// surface is min_i |b - c_i| - R. Union surface samples lie inside the swept
// volume, so their distance to its boundary is R - dist(p, backbone). Both
// formulas assume the curvature radius exceeds R and the body does not fold
// back onto itself.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "softcbf/errors.hpp"
#include "softcbf/pcs_kinematics.hpp"

namespace softcbf {

struct HausdorffOptions {
  int dense_count = 2000;     // backbone stations
  int ring_samples = 64;      // points per tube cross-section
  int cap_rings = 16;         // latitude rings per hemispherical cap
  int sphere_samples = 256;   // Fibonacci points per chain sphere
};

struct HausdorffResult {
  double distance = 0.0;      // symmetric
  double tube_to_chain = 0.0;
  double chain_to_tube = 0.0;
};

namespace detail {

inline void orthonormal_pair(const Vec3& t, Vec3& e1, Vec3& e2) {
  Vec3 a = std::abs(t.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  e1 = (a - a.dot(t) * t).normalized();
  e2 = t.cross(e1);
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double l2 = ab.squaredNorm();
  const double t = l2 > 0.0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace detail

inline HausdorffResult hausdorff_body_error(const RobotModel& model, const Configuration& q, int n_res,
                                            const HausdorffOptions& opt = {}) {
  if (opt.dense_count < 2 || opt.ring_samples < 3 || opt.cap_rings < 1 || opt.sphere_samples < 1)
    throw InvalidArgument("Hausdorff sampling counts too small");
  BodyKinematics body(model, q, false);
  const double len = model.total_length();
  const double r = model.body_radius;
  const SphereChain chain = sphere_chain(body, n_res);

  // Backbone stations with unit tangents.
  const int nd = opt.dense_count;
  std::vector<Vec3> pts(nd), tan(nd);
  std::vector<double> station(nd);
  for (int k = 0; k < nd; ++k) {
    station[k] = len * k / (nd - 1);
    Pose p = k == 0 ? model.mount : body.pose(station[k]);
    const int seg = [&] {
      double acc = 0.0;
      for (int i = 0; i < model.num_segments(); ++i) {
        acc += model.segment_lengths[i];
        if (station[k] <= acc || i == model.num_segments() - 1) return i;
      }
      return model.num_segments() - 1;
    }();
    pts[k] = p.translation;
    tan[k] = (p.rotation * body.strains()[seg].sigma).normalized();
  }

  // Tube and cap samples are compared with the spheres within +-3R of
  // arclength; chain spheres are compared with their neighbours in order of
  // index distance and with backbone segments in the same window.
  const double window = 3.0 * r;
  const int n = chain.size();
  auto sphere_range = [&](double s) {
    const double* first = chain.abscissae.data();
    const double* last = first + n;
    int lo = static_cast<int>(std::lower_bound(first, last, s - window) - first);
    int hi = static_cast<int>(std::upper_bound(first, last, s + window) - first);
    if (lo >= hi) return std::pair{0, n};
    return std::pair{lo, hi};
  };
  HausdorffResult res;
  auto to_chain = [&](const Vec3& b, std::pair<int, int> range) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = range.first; i < range.second; ++i) best = std::min(best, (b - chain.centers.col(i)).squaredNorm());
    return std::max(0.0, std::sqrt(best) - r);
  };

  // Tube rings.
  for (int k = 0; k < nd; ++k) {
    Vec3 e1, e2;
    detail::orthonormal_pair(tan[k], e1, e2);
    const auto range = sphere_range(station[k]);
    for (int j = 0; j < opt.ring_samples; ++j) {
      const double a = 2.0 * std::numbers::pi * j / opt.ring_samples;
      res.tube_to_chain =
          std::max(res.tube_to_chain, to_chain(pts[k] + r * (std::cos(a) * e1 + std::sin(a) * e2), range));
    }
  }
  // Caps, apex included.
  for (int end = 0; end < 2; ++end) {
    const Vec3 c = end ? pts[nd - 1] : pts[0];
    const Vec3 axis = end ? tan[nd - 1] : Vec3(-tan[0]);
    Vec3 e1, e2;
    detail::orthonormal_pair(axis, e1, e2);
    const auto range = sphere_range(end ? len : 0.0);
    res.tube_to_chain = std::max(res.tube_to_chain, to_chain(c + r * axis, range));
    for (int l = 0; l < opt.cap_rings; ++l) {
      const double polar = 0.5 * std::numbers::pi * (l + 1) / (opt.cap_rings + 1);
      for (int j = 0; j < opt.ring_samples; ++j) {
        const double a = 2.0 * std::numbers::pi * j / opt.ring_samples;
        const Vec3 dir = std::cos(polar) * axis + std::sin(polar) * (std::cos(a) * e1 + std::sin(a) * e2);
        res.tube_to_chain = std::max(res.tube_to_chain, to_chain(c + r * dir, range));
      }
    }
  }

  // Exposed part of each chain sphere.
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const int ns = opt.sphere_samples;
  for (int i = 0; i < n; ++i) {
    const Vec3 ci = chain.centers.col(i);
    const double si = chain.abscissae[i];
    std::vector<int> neighbours;
    for (int off = 1; off < n; ++off) {
      bool any = false;
      for (int j : {i - off, i + off}) {
        if (j < 0 || j >= n || std::abs(chain.abscissae[j] - si) > window) continue;
        any = true;
        if ((chain.centers.col(j) - ci).norm() < 2.0 * r) neighbours.push_back(j);
      }
      if (!any) break;
    }
    const int k_lo = std::max(0, static_cast<int>(std::floor((si - window) / len * (nd - 1))));
    const int k_hi = std::min(nd - 1, static_cast<int>(std::ceil((si + window) / len * (nd - 1))));
    for (int m = 0; m < ns; ++m) {
      const double z = 1.0 - 2.0 * (m + 0.5) / ns;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const Vec3 p = ci + r * Vec3(rho * std::cos(golden * m), rho * std::sin(golden * m), z);
      bool covered = false;
      for (int j : neighbours)
        if ((p - chain.centers.col(j)).squaredNorm() < r * r) {
          covered = true;
          break;
        }
      if (covered) continue;
      double d = std::numeric_limits<double>::infinity();
      for (int k = k_lo; k < k_hi; ++k) d = std::min(d, detail::point_segment_distance(p, pts[k], pts[k + 1]));
      res.chain_to_tube = std::max(res.chain_to_tube, std::max(0.0, r - d));
    }
  }
  res.distance = std::max(res.tube_to_chain, res.chain_to_tube);
  return res;
}

}  // namespace softcbf
