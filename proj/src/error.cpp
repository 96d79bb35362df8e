#include "effectmap/error.hpp"

namespace effectmap {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::invalid_space: return "invalid_space";
    case Errc::invalid_config: return "invalid_config";
    case Errc::parse_error: return "parse_error";
    case Errc::empty_log: return "empty_log";
    case Errc::cap_exceeded: return "cap_exceeded";
    case Errc::infeasible: return "infeasible";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::not_one_swap_optimal: return "not_one_swap_optimal";
    case Errc::undefined: return "undefined";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace effectmap
