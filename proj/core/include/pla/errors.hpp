#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pla {

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorCategory { kData, kNumerical, kInternal };

class Error : public std::runtime_error {
 public:
  Error(std::string code, ErrorCategory category, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)), category_(category) {}

  const std::string& code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  std::string code_;
  ErrorCategory category_;
};

#define PLA_DEFINE_ERROR(Name, Category)                      \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& message)                 \
        : Error(#Name, ErrorCategory::Category, message) {}   \
  };

PLA_DEFINE_ERROR(ParseError, kData)
PLA_DEFINE_ERROR(DimensionError, kData)
PLA_DEFINE_ERROR(DegenerateColumnError, kData)
PLA_DEFINE_ERROR(ConsistencyError, kData)
PLA_DEFINE_ERROR(InsufficientInputError, kData)
PLA_DEFINE_ERROR(SymmetryError, kData)
PLA_DEFINE_ERROR(NumericalError, kNumerical)
PLA_DEFINE_ERROR(ZeroTraceError, kNumerical)
PLA_DEFINE_ERROR(TrackingError, kNumerical)
PLA_DEFINE_ERROR(FactorizationError, kNumerical)
PLA_DEFINE_ERROR(InvariantViolation, kInternal)

#undef PLA_DEFINE_ERROR

}  // namespace pla
