#pragma once

#include <stdexcept>
#include <string>

namespace plap {

/// Base of every error raised by the library. `name()` is the stable
/// identifier printed by the CLI on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define PLAP_DEFINE_ERROR(Type)                                      \
  class Type : public Error {                                        \
   public:                                                           \
    explicit Type(const std::string& message) : Error(#Type, message) {} \
  }

PLAP_DEFINE_ERROR(InvalidParameter);
PLAP_DEFINE_ERROR(SingularDerivative);
PLAP_DEFINE_ERROR(DegenerateStencil);
PLAP_DEFINE_ERROR(EmptyInterior);
PLAP_DEFINE_ERROR(NonFiniteSample);
PLAP_DEFINE_ERROR(InadmissibleCoupling);
PLAP_DEFINE_ERROR(MaxIterationsExceeded);
PLAP_DEFINE_ERROR(LinearSolveFailure);
PLAP_DEFINE_ERROR(MaxStepsExceeded);
PLAP_DEFINE_ERROR(Divergence);
PLAP_DEFINE_ERROR(BracketFailure);
PLAP_DEFINE_ERROR(EmptyRegion);

#undef PLAP_DEFINE_ERROR

}  // namespace plap
