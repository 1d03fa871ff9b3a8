#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace softcbf {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration vector does not match the model's active strain layout.
class ConfigurationShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a kinematic map (e.g. abscissa not in (0, L]).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed model, layout, scenario or solver input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Tendon tangent argument collapsed to (near) zero length.
class DegenerateTangentError : public Error {
 public:
  using Error::Error;
};

// Barrier is violated and the control input has no authority over it.
class InfeasibleBarrierError : public Error {
 public:
  using Error::Error;
};

// A Runge-Kutta stage produced a non-finite value. Carries the last finite state.
class IntegrationBlowupError : public Error {
 public:
  IntegrationBlowupError(const std::string& what, Eigen::VectorXd last_good_state)
      : Error(what), last_good_state_(std::move(last_good_state)) {}

  const Eigen::VectorXd& last_good_state() const { return last_good_state_; }

 private:
  Eigen::VectorXd last_good_state_;
};

// Planner start configuration is already in collision.
class StartInCollisionError : public Error {
 public:
  using Error::Error;
};

}  // namespace softcbf
