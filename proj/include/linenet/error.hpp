#pragma once

#include <stdexcept>
#include <string>

namespace linenet {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A NetworkConfig (or other input) violates one of its invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An iterative method ran out of iterations before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, long iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

// The joint state space is larger than the configured cap.
class StateCapExceeded : public Error {
 public:
  StateCapExceeded(const std::string& what, unsigned long long count)
      : Error(what), count_(count) {}

  unsigned long long state_count() const noexcept { return count_; }

 private:
  unsigned long long count_;
};

// The requested quantity is undefined for this network (zero throughput,
// permanently full node, infinite expected delay).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// A library invariant broke; always a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace linenet
