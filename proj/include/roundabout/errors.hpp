#pragma once

#include <stdexcept>
#include <string>

namespace roundabout {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ROUNDABOUT_DEFINE_ERROR(Name)            \
  class Name : public Error {                    \
   public:                                       \
    explicit Name(const std::string& what)       \
        : Error(std::string(#Name ": ") + what) {} \
  }

ROUNDABOUT_DEFINE_ERROR(OutOfRoute);
ROUNDABOUT_DEFINE_ERROR(NegativeDistance);
ROUNDABOUT_DEFINE_ERROR(DegenerateHorizon);
ROUNDABOUT_DEFINE_ERROR(OutOfValidity);
ROUNDABOUT_DEFINE_ERROR(AlreadyRegistered);
ROUNDABOUT_DEFINE_ERROR(AlreadyReleased);
ROUNDABOUT_DEFINE_ERROR(SchedulingOrderViolated);
ROUNDABOUT_DEFINE_ERROR(Incomplete);
ROUNDABOUT_DEFINE_ERROR(SummaryError);

#undef ROUNDABOUT_DEFINE_ERROR

/// Configuration failure. `line` is 0 when the problem is not tied to a
/// particular line of the scenario file.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace roundabout
