#pragma once

#include <stdexcept>
#include <string>

namespace dialdiv {

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DIALDIV_ERROR(Name, Base)            \
  class Name : public Base {                 \
   public:                                   \
    using Base::Base;                        \
  }

// corpus
DIALDIV_ERROR(ParseError, Error);
DIALDIV_ERROR(AlreadyAugmented, Error);
DIALDIV_ERROR(IncompleteMapping, Error);
DIALDIV_ERROR(EmptyBlock, Error);

/// Invariant violation while validating a case; field() names the offender.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// prompt assembly / pruning
DIALDIV_ERROR(InvalidLayout, Error);
DIALDIV_ERROR(InvalidLambda, Error);
DIALDIV_ERROR(UnknownUnit, Error);
DIALDIV_ERROR(EmptyBlockChoice, Error);

// attention
DIALDIV_ERROR(EmptyTensor, Error);
DIALDIV_ERROR(SpanBindingError, Error);

// backend
DIALDIV_ERROR(BackendError, Error);
DIALDIV_ERROR(BackendUnavailable, BackendError);
DIALDIV_ERROR(GenerationTimeout, BackendError);
DIALDIV_ERROR(AttentionUnsupported, BackendError);
DIALDIV_ERROR(JudgeParseError, Error);

// dialogue
DIALDIV_ERROR(ParseExhausted, Error);
DIALDIV_ERROR(NoCandidates, Error);

// metrics
DIALDIV_ERROR(TooShort, Error);

#undef DIALDIV_ERROR

}  // namespace dialdiv
