#include "sma/errors.hpp"

namespace sma {

const char* to_string(ErrorCode code) noexcept
{
  switch (code) {
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::SingularGram: return "SingularGram";
  case ErrorCode::NotOrderedPair: return "NotOrderedPair";
  case ErrorCode::NotFunctional: return "NotFunctional";
  case ErrorCode::BadExponent: return "BadExponent";
  case ErrorCode::MissingPair: return "MissingPair";
  case ErrorCode::RequiresKnownTruth: return "RequiresKnownTruth";
  case ErrorCode::NotProjectionFamily: return "NotProjectionFamily";
  case ErrorCode::AllZeroResiduals: return "AllZeroResiduals";
  case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

const char* to_string(WarningCode code) noexcept
{
  switch (code) {
  case WarningCode::RankDeficientGram: return "RankDeficientGram";
  case WarningCode::SparseTail: return "SparseTail";
  case WarningCode::TailTooDeep: return "TailTooDeep";
  case WarningCode::FullMassTail: return "FullMassTail";
  case WarningCode::AsymptoticRegimeNotReached: return "AsymptoticRegimeNotReached";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
  : std::runtime_error(std::string(to_string(code)) + ": " + message)
  , code_(code)
{
}

} // namespace sma
