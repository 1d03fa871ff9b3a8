#pragma once

// Fixed-step Tsitouras 5(4) Runge-Kutta step (7 stages, FSAL). The embedded
// fourth-order estimate is returned for logging only.

#include <array>
#include <string>

#include <Eigen/Dense>

#include "softcbf/errors.hpp"

namespace softcbf {

namespace tsit5 {

inline constexpr std::array<double, 7> c{0.0, 0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0};

inline constexpr double a21 = 0.161;
inline constexpr double a31 = -0.008480655492356989, a32 = 0.335480655492357;
inline constexpr double a41 = 2.897153057105493, a42 = -6.359448489975075, a43 = 4.3622954328695815;
inline constexpr double a51 = 5.325864828439257, a52 = -11.748883564062828, a53 = 7.4955393428898365,
                        a54 = -0.09249506636175525;
inline constexpr double a61 = 5.86145544294642, a62 = -12.92096931784711, a63 = 8.159367898576159,
                        a64 = -0.071584973281401, a65 = -0.028269050394068383;

// Fifth-order weights (also the last stage row).
inline constexpr std::array<double, 7> b{0.09646076681806523, 0.01, 0.4798896504144996, 1.379008574103742,
                                         -3.290069515436081, 2.324710524099774, 0.0};

// b - b_hat: difference to the embedded fourth-order weights.
inline constexpr std::array<double, 7> btilde{-0.00178001105222577714, -0.0008164344596567469,
                                              0.007880878010261995,    -0.1447110071732629,
                                              0.5823571654525552,      -0.45808210592918697,
                                              1.0 / 66.0};

}  // namespace tsit5

struct StepResult {
  Eigen::VectorXd x;
  Eigen::VectorXd error_estimate;
};

// One step of x' = rhs(x). `rhs` is called seven times with the same held input.
template <typename Rhs>
StepResult integrate_step_tsit5(Rhs&& rhs, const Eigen::VectorXd& x, double dt) {
  using namespace tsit5;
  auto check = [&](const Eigen::VectorXd& k, int stage) {
    if (!k.allFinite())
      throw IntegrationBlowupError("non-finite value in Runge-Kutta stage " + std::to_string(stage), x);
  };
  const Eigen::VectorXd k1 = rhs(x);
  check(k1, 1);
  const Eigen::VectorXd k2 = rhs(Eigen::VectorXd(x + dt * a21 * k1));
  check(k2, 2);
  const Eigen::VectorXd k3 = rhs(Eigen::VectorXd(x + dt * (a31 * k1 + a32 * k2)));
  check(k3, 3);
  const Eigen::VectorXd k4 = rhs(Eigen::VectorXd(x + dt * (a41 * k1 + a42 * k2 + a43 * k3)));
  check(k4, 4);
  const Eigen::VectorXd k5 = rhs(Eigen::VectorXd(x + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
  check(k5, 5);
  const Eigen::VectorXd k6 =
      rhs(Eigen::VectorXd(x + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
  check(k6, 6);
  StepResult out;
  out.x = x + dt * (b[0] * k1 + b[1] * k2 + b[2] * k3 + b[3] * k4 + b[4] * k5 + b[5] * k6);
  check(out.x, 7);
  const Eigen::VectorXd k7 = rhs(out.x);
  check(k7, 7);
  out.error_estimate = dt * (btilde[0] * k1 + btilde[1] * k2 + btilde[2] * k3 + btilde[3] * k4 +
                             btilde[4] * k5 + btilde[5] * k6 + btilde[6] * k7);
  return out;
}

}  // namespace softcbf
