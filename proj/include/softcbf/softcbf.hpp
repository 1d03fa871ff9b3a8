#pragma once

#include "softcbf/benchmark.hpp"
#include "softcbf/closed_form.hpp"
#include "softcbf/errors.hpp"
#include "softcbf/hausdorff.hpp"
#include "softcbf/integrator.hpp"
#include "softcbf/pcs_kinematics.hpp"
#include "softcbf/qp_oracle.hpp"
#include "softcbf/rrt_star.hpp"
#include "softcbf/safety.hpp"
#include "softcbf/scenario.hpp"
#include "softcbf/se3.hpp"
#include "softcbf/simulation.hpp"
#include "softcbf/tendon.hpp"
#include "softcbf/trajectory_log.hpp"
#include "softcbf/validation.hpp"
