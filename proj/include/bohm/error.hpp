#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bohm {

enum class ErrorCode {
  NearNode,
  NotUnit,
  ZeroSpinor,
  ZeroWaveVector,
  MixedMass,
  NodeAtOrigin,
  SingularSystem,
  StepFailure,
  DegenerateDensity,
  TooManyLost,
  InvalidArgument,
  Config,
  Internal,
};

std::string_view toString(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace bohm
