#pragma once

#include <stdexcept>
#include <string>

namespace opt {

// Error taxonomy shared by the library and the CLI. The CLI maps
// invalid_argument/io_error onto exit code 2 (usage/config) and everything
// else onto exit code 1 (a check or run that failed).
enum class ErrorCode {
  invalid_argument,    // bad parameter: nonpositive step, horizon < 1, q outside (0,1), ...
  setup_mismatch,      // method family incompatible with the problem's setup
  unsupported_form,    // family does not define the requested iterate form
  unsupported_oracle,  // operation needs a capability the oracle lacks (exact line search, ...)
  unsupported_trace,   // diagnostic cannot be evaluated on this trace
  oracle_failure,      // oracle produced non-finite output
  divergence,          // iterate escaped the divergence guard
  schedule_violation,  // a schedule constraint failed validation
  io_error,            // file or parse problem
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::setup_mismatch: return "setup_mismatch";
    case ErrorCode::unsupported_form: return "unsupported_form";
    case ErrorCode::unsupported_oracle: return "unsupported_oracle";
    case ErrorCode::unsupported_trace: return "unsupported_trace";
    case ErrorCode::oracle_failure: return "oracle_failure";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::schedule_violation: return "schedule_violation";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace opt
