#pragma once

#include <stdexcept>
#include <string>

namespace cpe {

// Base of every error raised by the library. Callers that only care about
// "something in cpe failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CPE_DEFINE_ERROR(Name)                 \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  };

// graph-core
CPE_DEFINE_ERROR(CycleError)
CPE_DEFINE_ERROR(DanglingEdgeError)
CPE_DEFINE_ERROR(UnknownNodeError)
CPE_DEFINE_ERROR(OverlapError)
CPE_DEFINE_ERROR(HiddenNodesError)
CPE_DEFINE_ERROR(NoGlobalNodeError)
CPE_DEFINE_ERROR(GraphError)

// scm-engine
CPE_DEFINE_ERROR(ActionDomainError)
CPE_DEFINE_ERROR(TooLargeError)
CPE_DEFINE_ERROR(ModelError)

// estimation
CPE_DEFINE_ERROR(NonConvergenceError)
CPE_DEFINE_ERROR(NoSequenceError)
CPE_DEFINE_ERROR(DomainError)

// pure-exploration
CPE_DEFINE_ERROR(ConfigError)
CPE_DEFINE_ERROR(SequenceError)
CPE_DEFINE_ERROR(BudgetError)

// complexity
CPE_DEFINE_ERROR(RangeError)
CPE_DEFINE_ERROR(EmptyError)
CPE_DEFINE_ERROR(InstanceClassError)

// harness
CPE_DEFINE_ERROR(ParamError)

#undef CPE_DEFINE_ERROR

// Parse failure with the offending location.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error("parse error at " + where + ": " + what), where_(where) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace cpe
