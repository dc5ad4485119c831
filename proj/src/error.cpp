#include "sirfp/error.hpp"

namespace sirfp {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::Truncated: return "Truncated";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::AsymmetryDetected: return "AsymmetryDetected";
    case Errc::NonZeroDiagonal: return "NonZeroDiagonal";
    case Errc::OverlapDetected: return "OverlapDetected";
    case Errc::IncompleteCover: return "IncompleteCover";
    case Errc::TraceMismatch: return "TraceMismatch";
    case Errc::Parse: return "Parse";
    case Errc::Io: return "Io";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::UnsupportedSupport: return "UnsupportedSupport";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::InvalidAlpha: return "InvalidAlpha";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::TooLarge: return "TooLarge";
    case Errc::TooSmall: return "TooSmall";
    case Errc::BadCardinality: return "BadCardinality";
    case Errc::CountOutOfRange: return "CountOutOfRange";
    case Errc::Infeasible: return "Infeasible";
    case Errc::StageOutOfRange: return "StageOutOfRange";
    case Errc::InvalidTopology: return "InvalidTopology";
    case Errc::InvalidPlan: return "InvalidPlan";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace sirfp
