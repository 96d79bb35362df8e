#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace effectmap {

enum class Errc {
  invalid_argument,
  invalid_space,
  invalid_config,
  parse_error,
  empty_log,
  cap_exceeded,
  infeasible,
  rank_deficient,
  not_one_swap_optimal,
  undefined,
  io_error,
};

std::string_view errc_name(Errc code);

// Base error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace effectmap
