#pragma once

#include "effectmap/objective.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace effectmap {

struct SearchSpec {
  std::size_t restarts = 8;
  std::size_t beam = std::numeric_limits<std::size_t>::max();  // top levels per factor for random starts
  double stop_tolerance = 0.0;
  std::size_t max_sweeps = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Termination { converged, max_sweeps };

struct TraceStep {
  std::size_t sweep = 0;
  Config config;
  double value = 0.0;
};

struct SearchTrace {
  std::vector<TraceStep> steps;  // start, then every accepted update
  Config final;
  double value = 0.0;
  Termination termination = Termination::converged;
  std::size_t sweeps = 0;
};

struct SearchResult {
  Config best;
  double value = 0.0;
  std::size_t best_start = 0;
  std::vector<SearchTrace> traces;
};

SearchTrace coordinate_ascent(const Objective& objective, const Config& start, const SearchSpec& search);

// Per-factor argmax of the main effects over allowed levels, lowest index on ties.
Config greedy_start(const Objective& objective);
// Allowed levels of factor j ranked by main effect, truncated to the beam width.
std::vector<int> beam_levels(const Objective& objective, std::size_t j, std::size_t beam);

SearchResult multistart(const Objective& objective, const SearchSpec& search);

struct Swap {
  std::size_t factor = 0;
  int level = 0;
  double improvement = 0.0;
};

struct SwapCheck {
  bool optimal = true;
  std::optional<Swap> best_violation;
};

// Swaps improving J by more than the tolerance count as violations.
SwapCheck verify_1swap(const Objective& objective, const Config& x, double tolerance = 0.0);

struct DominanceReport {
  std::vector<double> margins;  // m_j
  Eigen::MatrixXd influence;    // L_jk, row j
  bool holds = false;
  bool exact = true;
  std::size_t contexts = 0;     // contexts enumerated or sampled; 0 when computed in closed form
};

inline constexpr std::uint64_t dominance_context_cap = 100'000;

DominanceReport diag_dominance_check(const Objective& objective, std::uint64_t context_cap = dominance_context_cap,
                                     std::size_t sampled_contexts = 10'000, std::uint64_t seed = 0);

double near_opt_bound(double epsilon);

// Throws when x is not 1-swap optimal.
double two_swap_bound(const Objective& objective, const Config& x);

struct RankedConfig {
  Config config;
  double value = 0.0;
};

// Exhaustive ranking of feasible configs by J, then lexicographically.
std::vector<RankedConfig> rank_configs(const Objective& objective, std::size_t k,
                                       std::uint64_t cap = default_grid_cap);
std::optional<RankedConfig> exhaustive_argmax(const Objective& objective, std::uint64_t cap = default_grid_cap);

}  // namespace effectmap
