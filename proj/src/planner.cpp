#include "effectmap/planner.hpp"

#include "effectmap/error.hpp"

#include <algorithm>
#include <cmath>

namespace effectmap {

namespace {

void check_budget(double B, double eps, double delta) {
  if (!(B > 0.0) || !std::isfinite(B)) throw Error(Errc::invalid_argument, "B must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(Errc::invalid_argument, "eps must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::invalid_argument, "delta must lie in (0,1)");
}

}  // namespace

double hoeffding_cell_bound(double B, double eps, double delta) {
  check_budget(B, eps, delta);
  return 2.0 * B * B / (eps * eps) * std::log(2.0 / delta);
}

double uniform_cells_bound(double B, double eps, double delta, std::size_t Lj, std::size_t Lk) {
  check_budget(B, eps, delta);
  if (Lj < 1 || Lk < 1) throw Error(Errc::invalid_argument, "level counts must be positive");
  return 2.0 * B * B / (eps * eps) * std::log(2.0 * static_cast<double>(Lj * Lk) / delta);
}

std::uint64_t hoeffding_cell_n(double B, double eps, double delta) {
  return static_cast<std::uint64_t>(std::ceil(hoeffding_cell_bound(B, eps, delta)));
}

std::uint64_t uniform_cells_n(double B, double eps, double delta, std::size_t Lj, std::size_t Lk) {
  return static_cast<std::uint64_t>(std::ceil(uniform_cells_bound(B, eps, delta, Lj, Lk)));
}

double hoeffding_halfwidth(double B, double n, double delta) {
  if (!(n >= 1.0)) throw Error(Errc::invalid_argument, "n must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::invalid_argument, "delta must lie in (0,1)");
  return B * std::sqrt(2.0 * std::log(2.0 / delta) / n);
}

double bernstein_halfwidth(double sigma, double B, double n, double delta) {
  if (!(n >= 1.0)) throw Error(Errc::invalid_argument, "n must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::invalid_argument, "delta must lie in (0,1)");
  if (!(sigma >= 0.0) || !(B >= 0.0)) throw Error(Errc::invalid_argument, "sigma and B must be nonnegative");
  const double lg = std::log(3.0 / delta);
  return std::sqrt(2.0 * sigma * sigma * lg / n) + 3.0 * B * lg / n;
}

std::pair<double, double> effect_error_budget(double eps0, double eps1) {
  if (!(eps0 >= 0.0) || !(eps1 >= 0.0)) throw Error(Errc::invalid_argument, "error targets must be nonnegative");
  return {eps1 + eps0, 3.0 * eps1 + eps0};
}

double infer_bound(const RunLog& log) {
  double m = 0.0;
  for (const auto& r : log.records()) m = std::max(m, std::abs(r.response));
  if (!(m > 0.0)) throw Error(Errc::invalid_argument, "cannot infer a bound from all-zero responses");
  return 1.1 * m;
}

}  // namespace effectmap
