#ifndef COMPPROBE_ERRORS_H_
#define COMPPROBE_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace compprobe {

// Base class for every error raised by the library. The CLI maps these to
// exit code 2 (data error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define COMPPROBE_DEFINE_ERROR(Name)         \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

COMPPROBE_DEFINE_ERROR(FormatError);
COMPPROBE_DEFINE_ERROR(DimError);
COMPPROBE_DEFINE_ERROR(DuplicateError);
COMPPROBE_DEFINE_ERROR(NotFound);
COMPPROBE_DEFINE_ERROR(EmptyDataset);
COMPPROBE_DEFINE_ERROR(NotTrainable);
COMPPROBE_DEFINE_ERROR(TooSmall);
COMPPROBE_DEFINE_ERROR(ZeroVector);
COMPPROBE_DEFINE_ERROR(DegenerateControl);
COMPPROBE_DEFINE_ERROR(CurveTooShort);
COMPPROBE_DEFINE_ERROR(UndefinedCorrelation);
COMPPROBE_DEFINE_ERROR(DomainError);
COMPPROBE_DEFINE_ERROR(Undefined);
COMPPROBE_DEFINE_ERROR(EmptyTest);
COMPPROBE_DEFINE_ERROR(EmptyIndex);
COMPPROBE_DEFINE_ERROR(EmptyMatch);

#undef COMPPROBE_DEFINE_ERROR

// Raised by the bracketed-tree reader; carries the byte offset into the
// input at which parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)),
        reason_(what),
        offset_(offset) {}

  const std::string& reason() const { return reason_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string reason_;
  std::size_t offset_;
};

}  // namespace compprobe

#endif  // COMPPROBE_ERRORS_H_
