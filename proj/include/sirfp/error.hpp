#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sirfp {

enum class Errc {
  // container formats
  BadMagic,
  VersionUnsupported,
  Truncated,
  LengthMismatch,
  NonFiniteValue,
  AsymmetryDetected,
  NonZeroDiagonal,
  OverlapDetected,
  IncompleteCover,
  TraceMismatch,
  Parse,
  Io,
  // numerics
  ShapeMismatch,
  UnsupportedSupport,
  NonFiniteInput,
  InvalidAlpha,
  // solvers
  IndexOutOfRange,
  TooLarge,
  TooSmall,
  BadCardinality,
  // allocation / planning
  CountOutOfRange,
  Infeasible,
  StageOutOfRange,
  InvalidTopology,
  InvalidPlan,
  InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

/// The single exception type thrown by the engine. The code is what callers
/// dispatch on (the CLI maps it to an exit status); the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace sirfp
