#pragma once

// Dense primal-dual interior-point solver (Mehrotra predictor-corrector) for
//
//   min 1/2 z^T H z + c^T z   s.t.   A z <= b
//
// with slacks s = b - A z > 0 and duals lambda > 0. Used as the numerical
// reference for the closed-form controller.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "softcbf/closed_form.hpp"
#include "softcbf/errors.hpp"
#include "softcbf/safety.hpp"

namespace softcbf {

struct DenseQP {
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  void validate() const {
    const auto n = H.rows();
    if (H.cols() != n || c.size() != n || A.cols() != n || b.size() != A.rows())
      throw InvalidArgument("QP dimensions are inconsistent");
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()))
      throw InvalidArgument("QP cost matrix must be symmetric");
  }
};

enum class QPStatus { optimal, max_iter, infeasible, failed };

struct QPSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd duals;
  Eigen::VectorXd slacks;
  int iterations = 0;
  QPStatus status = QPStatus::failed;
  double primal_residual = kInf;
  double dual_residual = kInf;
  std::vector<double> gap_history;  // mean complementarity s^T lambda / k per iterate
  bool polished = false;
};

struct QPOptions {
  double tol = 1e-10;
  int max_iter = 50;
  bool polish = true;  // re-solve the identified active set exactly after convergence
};

namespace detail {

// Largest a with v + a dv >= 0 (infinite when dv >= 0).
inline double step_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double a = kInf;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  return a;
}

// Equality-constrained KKT solve on the rows with lambda_i > s_i, repaired
// one row at a time (drop the most negative multiplier, add the most violated
// row) until primal and dual feasible. The interior iterate is kept otherwise.
inline bool polish(const DenseQP& qp, QPSolution& sol, double tol) {
  const Eigen::Index n = qp.H.rows(), k = qp.A.rows();
  std::vector<bool> active(k);
  for (Eigen::Index i = 0; i < k; ++i) active[i] = sol.duals[i] > sol.slacks[i];
  const double scale = 1.0 + (k ? qp.b.lpNorm<Eigen::Infinity>() : 0.0);
  for (Eigen::Index attempt = 0; attempt <= k; ++attempt) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < k; ++i)
      if (active[i]) act.push_back(i);
    const Eigen::Index na = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    Eigen::VectorXd rhs(n + na);
    kkt.topLeftCorner(n, n) = qp.H;
    rhs.head(n) = -qp.c;
    for (Eigen::Index r = 0; r < na; ++r) {
      kkt.block(n + r, 0, 1, n) = qp.A.row(act[r]);
      kkt.block(0, n + r, n, 1) = qp.A.row(act[r]).transpose();
      rhs[n + r] = qp.b[act[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return false;
    const Eigen::VectorXd x = lu.solve(rhs);
    if (!x.allFinite()) return false;
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(k);
    for (Eigen::Index r = 0; r < na; ++r) lam[act[r]] = x[n + r];
    const Eigen::VectorXd z = x.head(n);
    const Eigen::VectorXd slack = qp.b - qp.A * z;
    Eigen::Index worst_l = 0, worst_s = 0;
    const double min_l = k ? lam.minCoeff(&worst_l) : 0.0;
    const double min_s = k ? slack.minCoeff(&worst_s) : 0.0;
    if (min_l < -tol) {
      active[worst_l] = false;
      continue;
    }
    if (min_s < -tol * scale) {
      active[worst_s] = true;
      continue;
    }
    sol.z = z;
    sol.duals = lam.cwiseMax(0.0);
    sol.slacks = slack.cwiseMax(0.0);
    sol.primal_residual = k ? std::max(0.0, -min_s) : 0.0;
    sol.dual_residual = (qp.H * z + qp.c + qp.A.transpose() * lam).lpNorm<Eigen::Infinity>();
    sol.polished = true;
    return true;
  }
  return false;
}

}  // namespace detail

inline QPSolution solve_qp(const DenseQP& qp, const QPOptions& opt = {}) {
  qp.validate();
  const Eigen::Index n = qp.H.rows(), k = qp.A.rows();
  QPSolution out;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s = (qp.b - qp.A * z).cwiseMax(1.0);
  Eigen::VectorXd lam = Eigen::VectorXd::Ones(k);

  const double scale_d = 1.0 + qp.c.lpNorm<Eigen::Infinity>();
  const double scale_p = 1.0 + (k ? qp.b.lpNorm<Eigen::Infinity>() : 0.0);

  Eigen::MatrixXd m(n, n);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(n);
  Eigen::VectorXd rd(n), rp(k), d(k), rhs(n), dz(n), ds(k), dl(k), rc(k);

  auto newton = [&](const Eigen::VectorXd& rc_rhs) -> bool {
    // Reduced system (H + A^T D A) dz = -r_d - A^T (D r_p + S^-1 rc_rhs).
    rhs = -rd - qp.A.transpose() * (d.cwiseProduct(rp) + rc_rhs.cwiseQuotient(s));
    dz = ldlt.solve(rhs);
    if (!dz.allFinite()) return false;
    dl = d.cwiseProduct(qp.A * dz + rp) + rc_rhs.cwiseQuotient(s);
    ds = (rc_rhs - s.cwiseProduct(dl)).cwiseQuotient(lam);
    return dl.allFinite() && ds.allFinite();
  };

  auto factor = [&]() -> bool {
    m = qp.H;
    if (k) m.noalias() += qp.A.transpose() * d.asDiagonal() * qp.A;
    ldlt.compute(m);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) return true;
    m.diagonal().array() += 1e-10 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    ldlt.compute(m);
    return ldlt.info() == Eigen::Success;
  };

  out.status = QPStatus::max_iter;
  for (int it = 0; it <= opt.max_iter; ++it) {
    rd = qp.H * z + qp.c;
    if (k) rd.noalias() += qp.A.transpose() * lam;
    rp = qp.A * z + s - qp.b;
    const double mu = k ? s.dot(lam) / static_cast<double>(k) : 0.0;
    out.gap_history.push_back(mu);
    out.iterations = it;
    out.primal_residual = k ? rp.lpNorm<Eigen::Infinity>() : 0.0;
    out.dual_residual = rd.lpNorm<Eigen::Infinity>();
    if (out.dual_residual <= opt.tol * scale_d && out.primal_residual <= opt.tol * scale_p && mu <= opt.tol) {
      out.status = QPStatus::optimal;
      break;
    }
    if (it == opt.max_iter) break;

    d = lam.cwiseQuotient(s);
    if (!factor()) {
      out.status = QPStatus::failed;
      break;
    }
    // Predictor.
    rc = -s.cwiseProduct(lam);
    if (!newton(rc)) {
      out.status = QPStatus::failed;
      break;
    }
    double a_aff = std::min({1.0, detail::step_to_boundary(s, ds), detail::step_to_boundary(lam, dl)});
    double mu_aff = k ? (s + a_aff * ds).dot(lam + a_aff * dl) / static_cast<double>(k) : 0.0;
    double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;
    // Corrector.
    rc = -s.cwiseProduct(lam) - ds.cwiseProduct(dl) + Eigen::VectorXd::Constant(k, sigma * mu);
    if (!newton(rc)) {
      out.status = QPStatus::failed;
      break;
    }
    double a = std::min(1.0, 0.995 * std::min(detail::step_to_boundary(s, ds), detail::step_to_boundary(lam, dl)));
    z += a * dz;
    s += a * ds;
    lam += a * dl;
  }
  if (out.status == QPStatus::max_iter && out.primal_residual > 1e3 * opt.tol * scale_p &&
      (k && lam.maxCoeff() > 1e8))
    out.status = QPStatus::infeasible;
  out.z = std::move(z);
  out.duals = std::move(lam);
  out.slacks = std::move(s);
  if (opt.polish && out.status == QPStatus::optimal) detail::polish(qp, out, opt.tol);
  return out;
}

// Relaxed: z = (u, delta), H = diag(2I, 2w). Rows: CLF a_V^T u - delta <= -b_V,
// CBF -a_h^T u <= b_h, and -delta <= 0. Hard: z = u and no delta.
inline DenseQP encode_clf_cbf_qp(const ConstraintRows& rows, double w_clf, ClfMode mode) {
  const Eigen::Index m = rows.a_V.size();
  const bool relaxed = mode == ClfMode::relaxed;
  const bool has_cbf = std::isfinite(rows.b_h);
  const Eigen::Index n = relaxed ? m + 1 : m;
  const Eigen::Index k = 1 + (has_cbf ? 1 : 0) + (relaxed ? 1 : 0);
  DenseQP qp;
  qp.H = Eigen::MatrixXd::Identity(n, n) * 2.0;
  if (relaxed) qp.H(m, m) = 2.0 * w_clf;
  qp.c = Eigen::VectorXd::Zero(n);
  qp.A = Eigen::MatrixXd::Zero(k, n);
  qp.b.resize(k);
  qp.A.row(0).head(m) = rows.a_V.transpose();
  if (relaxed) qp.A(0, m) = -1.0;
  qp.b[0] = -rows.b_V;
  Eigen::Index r = 1;
  if (has_cbf) {
    qp.A.row(r).head(m) = -rows.a_h.transpose();
    qp.b[r++] = rows.b_h;
  }
  if (relaxed) {
    qp.A(r, m) = -1.0;
    qp.b[r] = 0.0;
  }
  return qp;
}

struct OracleSolution {
  ControlSolution control;
  QPSolution qp;
};

inline OracleSolution solve_clf_cbf_qp_full(const ConstraintRows& rows, double w_clf, ClfMode mode,
                                            const QPOptions& opt = {}) {
  if (rows.a_V.size() != rows.a_h.size()) throw InvalidArgument("constraint rows have different widths");
  if (mode == ClfMode::relaxed && !(w_clf > 0.0 && std::isfinite(w_clf)))
    throw InvalidArgument("relaxed mode needs a finite positive w_clf");
  OracleSolution out;
  out.qp = solve_qp(encode_clf_cbf_qp(rows, w_clf, mode), opt);
  const Eigen::Index m = rows.a_V.size();
  ControlSolution& c = out.control;
  c.mode = mode;
  c.u_star = out.qp.z.head(m);
  c.delta_star = mode == ClfMode::relaxed ? out.qp.z[m] : 0.0;
  c.lambda_V = out.qp.duals[0];
  c.lambda_h = std::isfinite(rows.b_h) ? out.qp.duals[1] : 0.0;
  c.active_set = classify(c.lambda_V, c.lambda_h, 1e-6);
  c.feasible = out.qp.status == QPStatus::optimal;
  return out;
}

inline ControlSolution solve_clf_cbf_qp(const ConstraintRows& rows, double w_clf, ClfMode mode,
                                        const QPOptions& opt = {}) {
  return solve_clf_cbf_qp_full(rows, w_clf, mode, opt).control;
}

// QP over every (sphere, obstacle) pair, without aggregation.
inline QPSolution solve_pairwise_qp(const PairwiseRows& rows, double w_clf, ClfMode mode,
                                    const QPOptions& opt = {}) {
  const Eigen::Index m = rows.a_V.size();
  const bool relaxed = mode == ClfMode::relaxed;
  const Eigen::Index n = relaxed ? m + 1 : m;
  const Eigen::Index np = rows.b_h.size();
  const Eigen::Index k = 1 + np + (relaxed ? 1 : 0);
  DenseQP qp;
  qp.H = Eigen::MatrixXd::Identity(n, n) * 2.0;
  if (relaxed) qp.H(m, m) = 2.0 * w_clf;
  qp.c = Eigen::VectorXd::Zero(n);
  qp.A = Eigen::MatrixXd::Zero(k, n);
  qp.b.resize(k);
  qp.A.row(0).head(m) = rows.a_V.transpose();
  if (relaxed) qp.A(0, m) = -1.0;
  qp.b[0] = -rows.b_V;
  qp.A.block(1, 0, np, m) = -rows.a_h;
  qp.b.segment(1, np) = rows.b_h;
  if (relaxed) {
    qp.A(k - 1, m) = -1.0;
    qp.b[k - 1] = 0.0;
  }
  return solve_qp(qp, opt);
}

}  // namespace softcbf
