#pragma once

#include <stdexcept>
#include <string>

namespace cabfeyn {

/// Classification of every failure the library can raise. The CLI maps
/// these onto exit codes (see exit_code()).
enum class ErrorKind {
  NonPositiveVariance,
  NonzeroOrigin,
  OutOfDomain,
  MismatchedScalePair,
  ZeroDirection,
  InvalidGrid,
  GridMismatch,
  NotOrthonormal,
  MeasureUnderflow,
  DivergentTail,
  UnsupportedVariant,
  UnknownExample,
  InvalidParameter,
  ZeroLambda,
  ArgOutOfRange,
  Overflow,
  NonPositiveLambda,
  NotAdmissible,
  NotInFq0,
  PsiNotIntegrable,
  SequenceLeavesRegion,
  BadConfig,
  ConfigError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorKind::NonzeroOrigin: return "NonzeroOrigin";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::MismatchedScalePair: return "MismatchedScalePair";
    case ErrorKind::ZeroDirection: return "ZeroDirection";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::NotOrthonormal: return "NotOrthonormal";
    case ErrorKind::MeasureUnderflow: return "MeasureUnderflow";
    case ErrorKind::DivergentTail: return "DivergentTail";
    case ErrorKind::UnsupportedVariant: return "UnsupportedVariant";
    case ErrorKind::UnknownExample: return "UnknownExample";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::ZeroLambda: return "ZeroLambda";
    case ErrorKind::ArgOutOfRange: return "ArgOutOfRange";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorKind::NotAdmissible: return "NotAdmissible";
    case ErrorKind::NotInFq0: return "NotInFq0";
    case ErrorKind::PsiNotIntegrable: return "PsiNotIntegrable";
    case ErrorKind::SequenceLeavesRegion: return "SequenceLeavesRegion";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for the errors that mean "lambda / q / psi is outside the region
/// where the operator is known to exist".
inline bool is_admissibility(ErrorKind k) {
  return k == ErrorKind::NotAdmissible || k == ErrorKind::NotInFq0 ||
         k == ErrorKind::PsiNotIntegrable || k == ErrorKind::SequenceLeavesRegion ||
         k == ErrorKind::NonPositiveLambda || k == ErrorKind::ZeroLambda;
}

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int engine_error = 1;
inline constexpr int config_error = 2;
inline constexpr int admissibility_error = 3;
inline constexpr int check_failure = 4;
}  // namespace exit_codes

inline int exit_code(ErrorKind k) {
  if (is_admissibility(k)) return exit_codes::admissibility_error;
  if (k == ErrorKind::ConfigError || k == ErrorKind::BadConfig || k == ErrorKind::UnknownExample)
    return exit_codes::config_error;
  return exit_codes::engine_error;
}

}  // namespace cabfeyn
