#ifndef DAIN_ERRORS_H_
#define DAIN_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dain {

// Every error raised by the library carries a short machine-parsable
// category ("parse", "shape", ...). The CLI prints it as the first token of
// its single-line error message.
class Error : public std::runtime_error {
 public:
  Error(std::string_view category, const std::string& message);

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

#define DAIN_DEFINE_ERROR(Name, tag)                               \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message) : Error(tag, message) {} \
  }

DAIN_DEFINE_ERROR(ParseError, "parse");
DAIN_DEFINE_ERROR(ShapeError, "shape");
DAIN_DEFINE_ERROR(DuplicateError, "duplicate");
DAIN_DEFINE_ERROR(SplitError, "split");
DAIN_DEFINE_ERROR(SaturationError, "saturation");
DAIN_DEFINE_ERROR(CapacityError, "capacity");
DAIN_DEFINE_ERROR(BoundsError, "bounds");
DAIN_DEFINE_ERROR(ArgumentError, "argument");
DAIN_DEFINE_ERROR(DivergenceError, "divergence");
DAIN_DEFINE_ERROR(OptimizationError, "optimization");
DAIN_DEFINE_ERROR(DegenerateError, "degenerate");
DAIN_DEFINE_ERROR(ReplacementError, "replacement");
DAIN_DEFINE_ERROR(ConfigError, "config");
DAIN_DEFINE_ERROR(IoError, "io");
DAIN_DEFINE_ERROR(VersionError, "version");

#undef DAIN_DEFINE_ERROR

}  // namespace dain

#endif  // DAIN_ERRORS_H_
