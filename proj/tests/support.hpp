#pragma once

#include "effectmap/design_space.hpp"
#include "effectmap/effect_table.hpp"
#include "effectmap/rng.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using namespace effectmap;

// Stands in for the tau -> 0 limit; shrinkage strengths must be positive.
inline constexpr double tau_limit = 1e-14;

inline FactorSpace make_space(const std::vector<std::size_t>& levels) {
  std::vector<Factor> factors;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    Factor f{"x" + std::to_string(j), {}};
    for (std::size_t l = 0; l < levels[j]; ++l) f.levels.push_back("v" + std::to_string(l));
    factors.push_back(std::move(f));
  }
  return FactorSpace(std::move(factors));
}

inline FactorSpace random_space(Rng& rng, std::size_t dmin, std::size_t dmax, std::size_t lmax) {
  std::vector<std::size_t> levels(dmin + uniform_index(rng, dmax - dmin + 1));
  for (auto& l : levels) l = 2 + uniform_index(rng, lmax - 1);
  return make_space(levels);
}

// Row and column means removed under uniform weights, computed directly.
inline Eigen::MatrixXd uniform_double_center(Eigen::MatrixXd g) {
  const double grand = g.mean();
  const Eigen::VectorXd rows = g.rowwise().mean();
  const Eigen::RowVectorXd cols = g.colwise().mean();
  for (Eigen::Index a = 0; a < g.rows(); ++a)
    for (Eigen::Index b = 0; b < g.cols(); ++b) g(a, b) = g(a, b) - rows(a) - cols(b) + grand;
  return g;
}

// Second-order table centered under the uniform product.
inline EffectTable random_table(const FactorSpace& space, Rng& rng, double main_sd = 1.0, double pair_sd = 0.5) {
  std::normal_distribution<double> n(0.0, 1.0);
  EffectTable t(space, Provenance::truth);
  t.mu = n(rng);
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(space.levels(j)));
    for (auto& v : g) v = main_sd * n(rng);
    t.mains[j] = g.array() - g.mean();
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    Eigen::MatrixXd g(static_cast<Eigen::Index>(space.levels(j)), static_cast<Eigen::Index>(space.levels(k)));
    for (auto& v : g.reshaped()) v = pair_sd * n(rng);
    t.pairs[p] = uniform_double_center(g);
  }
  return t;
}

// Evaluates mu + mains + pairs without using EffectTable::predict.
inline double evaluate_second_order(const EffectTable& t, const Config& x) {
  double v = t.mu;
  for (std::size_t j = 0; j < t.space.dimension(); ++j) v += t.mains[j](x[j]);
  for (std::size_t p = 0; p < t.space.pair_count(); ++p) {
    auto [j, k] = t.space.pair_factors(p);
    v += t.pairs[p](x[j], x[k]);
  }
  return v;
}

inline std::vector<Config> all_configs(const FactorSpace& space) {
  std::vector<Config> out;
  for_each_config(space, [&](const Config& x) { out.push_back(x); });
  return out;
}

inline RunLog full_grid_log(const FactorSpace& space, const std::function<double(const Config&)>& f,
                            std::size_t reps = 1) {
  std::vector<Record> records;
  for (const Config& x : all_configs(space))
    for (std::size_t r = 0; r < reps; ++r) records.push_back({x, f(x), 1.0, static_cast<std::int64_t>(r)});
  return RunLog(space, std::move(records));
}

// Functional ANOVA projection by brute-force averaging over a full uniform grid.
inline EffectTable fanova_projection(const FactorSpace& space, const std::function<double(const Config&)>& f) {
  const auto grid = all_configs(space);
  const std::size_t d = space.dimension();
  EffectTable t(space, Provenance::truth);
  double total = 0.0;
  std::vector<double> values;
  for (const auto& x : grid) {
    values.push_back(f(x));
    total += values.back();
  }
  t.mu = total / static_cast<double>(grid.size());
  std::vector<Eigen::VectorXd> cond(d);
  for (std::size_t j = 0; j < d; ++j) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.levels(j)));
    Eigen::VectorXd cnt = sum;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      sum(grid[i][j]) += values[i];
      cnt(grid[i][j]) += 1.0;
    }
    cond[j] = sum.cwiseQuotient(cnt);
    t.mains[j] = cond[j].array() - t.mu;
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.levels(j)),
                                                static_cast<Eigen::Index>(space.levels(k)));
    Eigen::MatrixXd cnt = sum;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      sum(grid[i][j], grid[i][k]) += values[i];
      cnt(grid[i][j], grid[i][k]) += 1.0;
    }
    Eigen::MatrixXd g = sum.cwiseQuotient(cnt);
    for (Eigen::Index a = 0; a < g.rows(); ++a)
      for (Eigen::Index b = 0; b < g.cols(); ++b) g(a, b) += -t.mains[j](a) - t.mains[k](b) - t.mu;
    t.pairs[p] = g;
  }
  return t;
}

}  // namespace testsupport
