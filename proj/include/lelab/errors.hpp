#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lelab {

/// Failure categories raised by the library. Each maps to a named error in
/// the module contracts so callers (and the CLI) can react per kind.
enum class ErrorKind {
  InvalidDomain,
  MeshTooFine,
  CenterOutsideDomain,
  DegenerateTriangle,
  NegativeWeight,
  Overflow,
  SolveFailure,
  NewtonDiverged,
  PositivityLost,
  MaxIterations,
  BallEscapesDomain,
  EigenFailure,
  WeightDegenerate,
  PointTooCloseToBoundary,
  MultipleCriticalPoints,
  RankDeficient,
  AnnulusEscapesDomain,
  InsufficientData,
  ShootingFailed,
  OutsideDisk,
  ConfigError,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

class LabError : public std::runtime_error {
public:
  LabError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw LabError(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace lelab
