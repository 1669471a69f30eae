#ifndef BMDL_CORE_ERRORS_HPP
#define BMDL_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bmdl {

// Error taxonomy shared by the whole library. The C layer maps these
// one-to-one onto status codes.
enum class ErrorCode {
    InvalidArgument,
    OutOfRange,
    Duplicate,
    DimensionMismatch,
    DegenerateDesign,
    SingularMatrix,
    EmptyModel,
    NonStationary,
    ChainAborted,
    ParseError,
    GapError,
    Internal,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

#define BMDL_DEFINE_ERROR(NAME, CODE)                                                  \
    class NAME : public Error {                                                        \
      public:                                                                          \
        explicit NAME(const std::string& what) : Error(ErrorCode::CODE, what) {}       \
    }

BMDL_DEFINE_ERROR(InvalidArgumentError, InvalidArgument);
BMDL_DEFINE_ERROR(OutOfRangeError, OutOfRange);
BMDL_DEFINE_ERROR(DuplicateError, Duplicate);
BMDL_DEFINE_ERROR(DimensionMismatchError, DimensionMismatch);
BMDL_DEFINE_ERROR(DegenerateDesignError, DegenerateDesign);
BMDL_DEFINE_ERROR(SingularMatrixError, SingularMatrix);
BMDL_DEFINE_ERROR(EmptyModelError, EmptyModel);
BMDL_DEFINE_ERROR(NonStationaryError, NonStationary);
BMDL_DEFINE_ERROR(ChainAbortedError, ChainAborted);
BMDL_DEFINE_ERROR(ParseError, ParseError);
BMDL_DEFINE_ERROR(GapError, GapError);

#undef BMDL_DEFINE_ERROR

}  // namespace bmdl

#endif
