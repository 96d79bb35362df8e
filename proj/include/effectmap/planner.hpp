#pragma once

#include "effectmap/design_space.hpp"

#include <cstdint>
#include <utility>

namespace effectmap {

struct ErrorBudget {
  double bound = 1.0;        // B
  double cell_target = 0.1;  // eps1
  double baseline_target = 0.0;  // eps0
  double failure = 0.05;     // delta
};

// Pre-ceiling forms.
double hoeffding_cell_bound(double B, double eps, double delta);
double uniform_cells_bound(double B, double eps, double delta, std::size_t Lj, std::size_t Lk);

std::uint64_t hoeffding_cell_n(double B, double eps, double delta);
std::uint64_t uniform_cells_n(double B, double eps, double delta, std::size_t Lj, std::size_t Lk);

// Half-width B*sqrt(2 log(2/delta) / n) for a bounded cell mean.
double hoeffding_halfwidth(double B, double n, double delta);
double bernstein_halfwidth(double sigma, double B, double n, double delta);

// (mains bound, pairs bound).
std::pair<double, double> effect_error_budget(double eps0, double eps1);

// Largest |response| inflated by 10%.
double infer_bound(const RunLog& log);

}  // namespace effectmap
