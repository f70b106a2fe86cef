#pragma once

#include <stdexcept>
#include <string>

namespace hardylab {

enum class ErrorCode {
  config,              // malformed or out-of-range input
  precondition,        // a documented precondition does not hold
  hypothesis,          // a hypothesis of an inequality fails at grid scale
  insufficient_levels, // not enough dyadic levels for a slope fit
  degenerate,          // the raster admits no valid object
  solver,              // iterative solver failed to converge
  unbounded,           // a supremum is infinite on the admissible class
  io
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::string clause = {})
      : std::runtime_error(what), code_(code), clause_(std::move(clause)) {}

  ErrorCode code() const { return code_; }
  // Name of the violated condition, when one applies.
  const std::string& clause() const { return clause_; }

 private:
  ErrorCode code_;
  std::string clause_;
};

}  // namespace hardylab
