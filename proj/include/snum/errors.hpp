#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace snum {

enum class ErrorCode {
  invalid_argument,
  vertex_cap_exceeded,
  not_polyhedral,
  not_hilbert,
  index_out_of_range,
  degenerate_frame,
  budget_exceeded,
  convergence_failure,
  net_too_coarse,
  weight_unbounded,
  norm_violation,
  parse_error,
  validation_error,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace snum
