#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "softcbf/closed_form.hpp"
#include "softcbf/qp_oracle.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

namespace softcbf {
namespace {

ConstraintRows rows2(Eigen::Vector2d av, double bv, Eigen::Vector2d ah, double bh) {
  return {av, bv, ah, bh};
}

ConstraintRows random_rows(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> n(0.0, 1.0);
  ConstraintRows r;
  r.a_V = testing::normal_vector(rng, m);
  r.b_V = std::abs(n(rng));
  r.a_h = testing::normal_vector(rng, m);
  r.b_h = n(rng);
  return r;
}

// KKT residuals evaluated directly from the rows.
void expect_kkt(const ConstraintRows& r, const ControlSolution& s, double w) {
  Eigen::VectorXd stat = 2.0 * s.u_star + s.lambda_V * r.a_V - s.lambda_h * r.a_h;
  EXPECT_LE(stat.norm(), 1e-10);
  EXPECT_GE(s.lambda_V, 0.0);
  EXPECT_GE(s.lambda_h, 0.0);
  EXPECT_GE(s.delta_star, 0.0);
  const double clf = r.a_V.dot(s.u_star) + r.b_V - s.delta_star;
  EXPECT_LE(clf, 1e-10 * (1.0 + std::abs(r.b_V)));
  EXPECT_LE(std::abs(s.lambda_V * clf), 1e-8 * (1.0 + s.lambda_V));
  if (std::isfinite(r.b_h)) {
    const double cbf = r.a_h.dot(s.u_star) + r.b_h;
    EXPECT_GE(cbf, -1e-10 * (1.0 + std::abs(r.b_h)));
    EXPECT_LE(std::abs(s.lambda_h * cbf), 1e-8 * (1.0 + s.lambda_h));
  }
  if (s.mode == ClfMode::relaxed) EXPECT_NEAR(s.delta_star, s.lambda_V / (2.0 * w), 1e-15);
}

TEST(GramEntries, Definitions) {
  ConstraintRows r = rows2({1, 0}, 0, {0, 1}, 0);
  Gram g = gram_entries(r);
  EXPECT_EQ(g.g12, 0.0);

  std::mt19937_64 rng(51);
  for (int k = 0; k < 20; ++k) {
    ConstraintRows x = random_rows(rng, 6);
    Gram h = gram_entries(x);
    double d11 = 0, d12 = 0, d22 = 0;
    for (int i = 0; i < 6; ++i) {
      d11 += x.a_V[i] * x.a_V[i];
      d12 += x.a_V[i] * x.a_h[i];
      d22 += x.a_h[i] * x.a_h[i];
    }
    EXPECT_NEAR(h.g11, d11, 1e-13);
    EXPECT_NEAR(h.g12, d12, 1e-13);
    EXPECT_NEAR(h.g22, d22, 1e-13);
    EXPECT_GE(h.g11, 0.0);
    EXPECT_GE(h.g22, 0.0);
  }
  // Parallel rows: G12^2 = G11 G22, so the determinant reduces to G22 / w.
  ConstraintRows p = rows2({0.3, -0.4}, 0, {0.3, -0.4}, 0);
  Gram gp = gram_entries(p);
  const double w = 100.0;
  EXPECT_NEAR(gp.g12 * gp.g12, gp.g11 * gp.g22, 1e-16);
  EXPECT_NEAR((gp.g11 + 1.0 / w) * gp.g22 - gp.g12 * gp.g12, gp.g22 / w, 1e-16);
}

TEST(SolveClosedForm, NullCase) {
  ConstraintRows r = rows2({0, 0}, 0.7, {0.5, 1.0}, 0.2);
  ControlSolution s = solve_closed_form(r, 100.0, ClfMode::relaxed);
  EXPECT_TRUE(s.u_star.isZero(0.0));
  EXPECT_EQ(s.lambda_h, 0.0);
}

TEST(SolveClosedForm, ClfOnlyExample) {
  ConstraintRows r = rows2({1, 0}, 0.5, {0, 1}, 0.3);
  ControlSolution s = solve_closed_form(r, 100.0, ClfMode::relaxed);
  EXPECT_EQ(s.active_set, ActiveSet::clf_only);
  EXPECT_NEAR(s.lambda_V, 1.0 / 1.01, 1e-15);
  EXPECT_NEAR(s.lambda_V, 0.990099, 1e-6);
  EXPECT_NEAR(s.u_star[0], -0.495050, 1e-6);
  EXPECT_EQ(s.u_star[1], 0.0);
  EXPECT_NEAR(s.delta_star, 0.004950, 1e-6);
  EXPECT_NEAR(r.a_h.dot(s.u_star) + r.b_h, 0.3, 1e-15);
  expect_kkt(r, s, 100.0);

  ControlSolution o = solve_clf_cbf_qp(r, 100.0, ClfMode::relaxed);
  EXPECT_LE((o.u_star - s.u_star).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_EQ(o.active_set, s.active_set);
}

TEST(SolveClosedForm, BarrierForcedExample) {
  ConstraintRows r = rows2({1, 0}, 0.0, {1, 0}, -0.2);
  for (double w : {1.0, 100.0, 1e4}) {
    ControlSolution s = solve_closed_form(r, w, ClfMode::relaxed);
    ControlSolution o = solve_clf_cbf_qp(r, w, ClfMode::relaxed);
    EXPECT_LE((s.u_star - o.u_star).lpNorm<Eigen::Infinity>(), 1e-9) << w;
    EXPECT_NEAR(s.u_star[0], 0.2, 1e-12);
    EXPECT_NEAR(s.delta_star, 0.2, 1e-12);
    expect_kkt(r, s, w);
  }
}

TEST(SolveClosedForm, HardModeConflictKeepsBarrier) {
  ConstraintRows r = rows2({1, 0}, 0.3, {1, 0}, -0.2);
  ControlSolution s = solve_closed_form(r, kInf, ClfMode::hard);
  EXPECT_FALSE(s.feasible);
  EXPECT_EQ(s.active_set, ActiveSet::cbf_only);
  EXPECT_NEAR(r.a_h.dot(s.u_star) + r.b_h, 0.0, 1e-15);
  EXPECT_EQ(s.delta_star, 0.0);
  // The relaxed encoding is always feasible; both solvers agree there.
  ControlSolution a = solve_closed_form(r, 100.0, ClfMode::relaxed);
  ControlSolution b = solve_clf_cbf_qp(r, 100.0, ClfMode::relaxed);
  EXPECT_LE((a.u_star - b.u_star).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_NEAR(a.delta_star, b.delta_star, 1e-9);
}

TEST(SolveClosedForm, ZeroAuthorityViolatedBarrierThrows) {
  ConstraintRows r = rows2({1, 0}, 0.3, {0, 0}, -0.1);
  EXPECT_THROW(solve_closed_form(r, 100.0, ClfMode::relaxed), InfeasibleBarrierError);
  r.b_h = 0.1;
  EXPECT_NO_THROW(solve_closed_form(r, 100.0, ClfMode::relaxed));
}

TEST(SolveClosedForm, NoObstacleRowIsIgnored) {
  ConstraintRows r = rows2({0.5, -1}, 0.4, {0, 0}, kInf);
  ControlSolution s = solve_closed_form(r, kInf, ClfMode::hard);
  EXPECT_EQ(s.active_set, ActiveSet::clf_only);
  EXPECT_NEAR(r.a_V.dot(s.u_star) + r.b_V, 0.0, 1e-15);
  // Pure task pursuit: u is anti-parallel to a_V.
  EXPECT_NEAR(s.u_star.normalized().dot(r.a_V.normalized()), -1.0, 1e-15);
}

TEST(SolveClosedForm, OracleEquivalenceAndKktCertificate) {
  std::mt19937_64 rng(52);
  for (ClfMode mode : {ClfMode::hard, ClfMode::relaxed}) {
    const double w = mode == ClfMode::hard ? kInf : 100.0;
    double worst_u = 0.0, worst_f = 0.0;
    int matches = 0;
    for (int k = 0; k < 200; ++k) {
      ConstraintRows r = random_rows(rng, 6);
      ControlSolution c = solve_closed_form(r, w, mode);
      OracleSolution o = solve_clf_cbf_qp_full(r, w, mode);
      ASSERT_EQ(o.qp.status, QPStatus::optimal);
      expect_kkt(r, c, w);
      worst_u = std::max(worst_u, (c.u_star - o.control.u_star).lpNorm<Eigen::Infinity>());
      worst_f = std::max(worst_f, std::abs(qp_objective(c.u_star, c.delta_star, w, mode) -
                                           qp_objective(o.control.u_star, o.control.delta_star, w, mode)));
      EXPECT_LE(std::max(0.0, -(r.a_h.dot(c.u_star) + r.b_h)), 1e-12);
      matches += classify(c.lambda_V, c.lambda_h, 1e-6) == o.control.active_set ? 1 : 0;
    }
    EXPECT_LE(worst_u, 1e-8);
    EXPECT_LE(worst_f, 1e-10);
    EXPECT_EQ(matches, 200);
  }
}

// Sweep b_h along a line so the CBF row switches from inactive to active.
TEST(SolveClosedForm, ContinuousAcrossActiveSetSwitch) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    ConstraintRows r = random_rows(rng, 6);
    const int steps = 4000;
    const double h = 8.0 / steps;
    Eigen::VectorXd prev;
    int switches = 0;
    ActiveSet prev_set{};
    double worst = 0.0;
    for (int k = 0; k <= steps; ++k) {
      r.b_h = -4.0 + h * k;
      r.b_V = 0.5 + 0.25 * std::sin(h * k);
      ControlSolution s = solve_closed_form(r, 100.0, ClfMode::relaxed);
      if (k) {
        worst = std::max(worst, (s.u_star - prev).norm() / h);
        switches += s.active_set != prev_set ? 1 : 0;
      }
      prev = s.u_star;
      prev_set = s.active_set;
    }
    // Lipschitz bound of the parametric QP solution for unit-scale rows.
    Gram g = gram_entries(r);
    const double bound = 2.0 * (1.0 + std::sqrt(g.g11 + g.g22)) / std::min(1.0, std::sqrt(std::min(g.g11, g.g22)));
    EXPECT_LE(worst, bound);
    EXPECT_GE(switches, 1);
  }
}

TEST(ClampInput, ClipsElementwise) {
  Eigen::VectorXd u(3);
  u << 0.5, -0.01, -0.3;
  Eigen::VectorXd c = clamp_input(u, 0.02);
  EXPECT_EQ(c[0], 0.02);
  EXPECT_EQ(c[1], -0.01);
  EXPECT_EQ(c[2], -0.02);
  EXPECT_EQ(clamp_input(u, kInf), u);
}

TEST(ControlStep, EquilibriumAndClipping) {
  RobotModel m = default_robot_model();
  TendonLayout t = default_tendon_layout(m);
  SafetyConfig cfg;
  Vec3 tip = forward_kinematics(m, Configuration::Zero(12), 0.3).translation;
  std::vector<Obstacle> far{{Vec3(1, 1, 1), 0.02}};
  EXPECT_TRUE(control_step(m, t, Configuration::Zero(12), tip, far, cfg, 40).isZero(0.0));

  std::mt19937_64 rng(54);
  cfg.w_clf = kInf;
  for (int k = 0; k < 20; ++k) {
    Configuration q = testing::random_configuration(rng, m, 3.0);
    Eigen::VectorXd u = control_step(m, t, q, Vec3(0.1, 0.0, 0.2), far, cfg, 40, 0.02);
    EXPECT_LE(u.lpNorm<Eigen::Infinity>(), 0.02);
  }
}

TEST(ControlStep, FarTargetWithoutObstaclesPursuesTask) {
  RobotModel m = default_robot_model();
  TendonLayout t = default_tendon_layout(m);
  SafetyConfig cfg;
  Configuration q = Configuration::Zero(12);
  Vec3 target(0.15, 0.1, 0.15);
  ConstraintRows r = assemble_rows(m, t, q, target, {}, cfg, 40);
  Eigen::VectorXd u = control_step(m, t, q, target, {}, cfg, 40);
  EXPECT_NEAR(u.normalized().dot(-r.a_V.normalized()), 1.0, 1e-12);
  const double lv = 2.0 * r.b_V / (r.a_V.squaredNorm() + 1.0 / cfg.w_clf);
  EXPECT_LE((u + 0.5 * lv * r.a_V).norm(), 1e-14);
}

}  // namespace
}  // namespace softcbf
