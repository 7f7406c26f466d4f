#pragma once

#include <stdexcept>
#include <string>

namespace brachi {

enum class ErrorKind {
  OutOfChart,
  StencilOutOfChart,
  OutsideUk,
  DegenerateKilling,
  UnknownModel,
  InvalidParams,
  GridTooCoarse,
  GridMismatch,
  StepFailure,
  NotHorizontal,
  ConstraintViolated,
  FlowEscape,
  NotCritical,
  NotGeodesic,
  NotTangentToGamma,
  NotNormal,
  InitialConditionViolated,
  NotOrthogonalStart,
  FrameDegenerate,
  FocalEndpoint,
  NoConvergence,
  ZeroSeed,
  Stalled,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace brachi
