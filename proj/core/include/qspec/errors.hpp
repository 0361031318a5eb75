#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qspec {

/// Root of every error raised by the library. `code()` is a stable,
/// machine-readable name used in run summaries.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

  [[nodiscard]] const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define QSPEC_DEFINE_ERROR(Name)                                 \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

QSPEC_DEFINE_ERROR(InvalidMap);
QSPEC_DEFINE_ERROR(InvalidDriving);
QSPEC_DEFINE_ERROR(SymbolOutOfRange);
QSPEC_DEFINE_ERROR(NotExpanding);
QSPEC_DEFINE_ERROR(InvalidGrid);
QSPEC_DEFINE_ERROR(GridMismatch);
QSPEC_DEFINE_ERROR(OutOfWindow);
QSPEC_DEFINE_ERROR(NormalizerCollapse);
QSPEC_DEFINE_ERROR(NoConvergence);
QSPEC_DEFINE_ERROR(DegenerateVariance);
QSPEC_DEFINE_ERROR(InvalidDensity);
QSPEC_DEFINE_ERROR(NonConvexCurve);
QSPEC_DEFINE_ERROR(NoLattice);
QSPEC_DEFINE_ERROR(InvalidArgument);
QSPEC_DEFINE_ERROR(UnknownKey);
QSPEC_DEFINE_ERROR(MissingRequired);
QSPEC_DEFINE_ERROR(SchemaMismatch);

#undef QSPEC_DEFINE_ERROR

/// Config errors carry the 1-based line they were detected on.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("ParseError", "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace qspec
