#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sma {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  SingularGram,
  NotOrderedPair,
  NotFunctional,
  BadExponent,
  MissingPair,
  RequiresKnownTruth,
  NotProjectionFamily,
  AllZeroResiduals,
  ConfigInvalid,
};

[[nodiscard]] const char* to_string(ErrorCode code) noexcept;

//! All library failures are reported through this type; code() identifies
//! the contract that was violated.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

enum class WarningCode {
  RankDeficientGram,
  SparseTail,
  TailTooDeep,
  FullMassTail,
  AsymptoticRegimeNotReached,
};

[[nodiscard]] const char* to_string(WarningCode code) noexcept;

struct Warning {
  WarningCode code;
  std::string message;
};

using Warnings = std::vector<Warning>;

} // namespace sma
