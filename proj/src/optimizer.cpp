#include "effectmap/optimizer.hpp"

#include "effectmap/error.hpp"
#include "effectmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace effectmap {

void SearchSpec::validate() const {
  if (restarts < 1) throw Error(Errc::invalid_argument, "restart count must be at least 1");
  if (beam < 1) throw Error(Errc::invalid_argument, "beam width must be at least 1");
  if (!(stop_tolerance >= 0.0)) throw Error(Errc::invalid_argument, "stop tolerance must be nonnegative");
  if (max_sweeps < 1) throw Error(Errc::invalid_argument, "max sweeps must be at least 1");
}

SearchTrace coordinate_ascent(const Objective& objective, const Config& start, const SearchSpec& search) {
  search.validate();
  const FactorSpace& space = objective.space();
  space.require_valid(start);
  if (!objective.feasible(start)) throw Error(Errc::infeasible, "start configuration is infeasible");

  SearchTrace trace;
  Config x = start;
  double J = objective.value_unchecked(x);
  trace.steps.push_back({0, x, J});
  trace.termination = Termination::max_sweeps;
  for (std::size_t sweep = 1; sweep <= search.max_sweeps; ++sweep) {
    trace.sweeps = sweep;
    bool improved = false;
    for (std::size_t j = 0; j < space.dimension(); ++j) {
      int best_level = x[j];
      double best = J;
      Config y = x;
      for (int l = 0; l < static_cast<int>(space.levels(j)); ++l) {
        if (l == x[j]) continue;
        y[j] = l;
        if (!objective.feasible(y)) continue;
        const double v = objective.value_unchecked(y);
        if (v > best) {
          best = v;
          best_level = l;
        }
      }
      if (best_level != x[j] && best - J > search.stop_tolerance) {
        x[j] = best_level;
        J = best;
        trace.steps.push_back({sweep, x, J});
        improved = true;
      }
    }
    if (!improved) {
      trace.termination = Termination::converged;
      break;
    }
  }
  trace.final = x;
  trace.value = J;
  return trace;
}

std::vector<int> beam_levels(const Objective& objective, std::size_t j, std::size_t beam) {
  const auto& g = objective.table().mains[j];
  const auto& feas = objective.spec().feasibility;
  std::vector<int> levels;
  for (int l = 0; l < static_cast<int>(g.size()); ++l)
    if (feas.level_allowed(j, l)) levels.push_back(l);
  std::stable_sort(levels.begin(), levels.end(), [&](int a, int b) { return g(a) > g(b); });
  if (levels.size() > beam) levels.resize(beam);
  return levels;
}

Config greedy_start(const Objective& objective) {
  const std::size_t d = objective.space().dimension();
  std::vector<int> v(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto levels = beam_levels(objective, j, 1);
    if (levels.empty())
      throw Error(Errc::infeasible, "every level of '" + objective.space().factor(j).name + "' is banned");
    v[j] = levels.front();
  }
  return Config(std::move(v));
}

SearchResult multistart(const Objective& objective, const SearchSpec& search) {
  search.validate();
  const std::size_t d = objective.space().dimension();
  std::vector<std::vector<int>> beams(d);
  std::vector<std::vector<int>> allowed(d);
  for (std::size_t j = 0; j < d; ++j) {
    beams[j] = beam_levels(objective, j, search.beam);
    allowed[j] = beam_levels(objective, j, std::numeric_limits<std::size_t>::max());
  }

  std::vector<Config> starts;
  const Config greedy = greedy_start(objective);
  if (objective.feasible(greedy)) starts.push_back(greedy);
  constexpr int draw_attempts = 1000;
  for (std::size_t r = starts.empty() ? 0 : 1; r < search.restarts; ++r) {
    Rng rng = make_rng(search.seed, {streams::restart, r});
    for (int a = 0; a < draw_attempts; ++a) {
      // Beam draws first; the second half widens to every allowed level.
      const auto& pool = a < draw_attempts / 2 ? beams : allowed;
      std::vector<int> v(d);
      for (std::size_t j = 0; j < d; ++j) v[j] = pool[j][uniform_index(rng, pool[j].size())];
      Config x(std::move(v));
      if (objective.feasible(x)) {
        starts.push_back(std::move(x));
        break;
      }
    }
  }
  if (starts.empty()) throw Error(Errc::infeasible, "no feasible start configuration found");

  SearchResult result;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    result.traces.push_back(coordinate_ascent(objective, starts[s], search));
    const auto& t = result.traces.back();
    if (s == 0 || t.value > result.value || (t.value == result.value && t.final < result.best)) {
      result.best = t.final;
      result.value = t.value;
      result.best_start = s;
    }
  }
  return result;
}

SwapCheck verify_1swap(const Objective& objective, const Config& x, double tolerance) {
  const FactorSpace& space = objective.space();
  space.require_valid(x);
  if (!objective.feasible(x)) throw Error(Errc::infeasible, "configuration is infeasible");
  const double J = objective.value_unchecked(x);
  SwapCheck check;
  Config y = x;
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    for (int l = 0; l < static_cast<int>(space.levels(j)); ++l) {
      if (l == x[j]) continue;
      y[j] = l;
      if (!objective.feasible(y)) continue;
      const double gain = objective.value_unchecked(y) - J;
      if (gain > tolerance && (!check.best_violation || gain > check.best_violation->improvement)) {
        check.optimal = false;
        check.best_violation = Swap{j, l, gain};
      }
    }
    y[j] = x[j];
  }
  return check;
}

namespace {

// Pair term seen by factor j: interaction minus weighted risk, rows indexed by j's level.
Eigen::MatrixXd pair_view(const Objective& objective, std::size_t j, std::size_t k) {
  const std::size_t p = objective.space().pair_index(j, k);
  Eigen::MatrixXd h = objective.table().pairs[p] - objective.spec().lambda_risk * objective.risk_matrix(p);
  if (j > k) h.transposeInPlace();
  return h;
}

std::vector<int> allowed_levels(const Objective& objective, std::size_t j) {
  std::vector<int> out;
  for (int l = 0; l < static_cast<int>(objective.space().levels(j)); ++l)
    if (objective.spec().feasibility.level_allowed(j, l)) out.push_back(l);
  return out;
}

// Context-independent part of F_j.
double own_term(const Objective& objective, std::size_t j, int l) {
  return objective.table().mains[j](l) - objective.spec().lambda_cost * objective.cost().level_cost(j, l);
}

}  // namespace

DominanceReport diag_dominance_check(const Objective& objective, std::uint64_t context_cap,
                                     std::size_t sampled_contexts, std::uint64_t seed) {
  const FactorSpace& space = objective.space();
  const std::size_t d = space.dimension();
  DominanceReport report;
  report.influence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  report.margins.assign(d, 0.0);

  std::vector<std::vector<int>> allowed(d);
  for (std::size_t j = 0; j < d; ++j) allowed[j] = allowed_levels(objective, j);

  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) {
      if (j == k) continue;
      const Eigen::MatrixXd h = pair_view(objective, j, k);
      double worst = 0.0;
      for (int l : allowed[j]) {
        double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
        for (int m : allowed[k]) {
          hi = std::max(hi, h(l, m));
          lo = std::min(lo, h(l, m));
        }
        if (hi >= lo) worst = std::max(worst, hi - lo);
      }
      report.influence(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = worst;
    }

  if (!objective.spec().feasibility.has_config_bans()) {
    // Separable across the other factors, so the worst context is found factor by factor.
    for (std::size_t j = 0; j < d; ++j) {
      if (allowed[j].size() < 2) {
        report.margins[j] = std::numeric_limits<double>::infinity();
        continue;
      }
      std::vector<Eigen::MatrixXd> views(d);
      for (std::size_t k = 0; k < d; ++k)
        if (k != j) views[k] = pair_view(objective, j, k);
      double best = -std::numeric_limits<double>::infinity();
      for (int b : allowed[j]) {
        double margin = std::numeric_limits<double>::infinity();
        for (int l : allowed[j]) {
          if (l == b) continue;
          double gap = own_term(objective, j, b) - own_term(objective, j, l);
          for (std::size_t k = 0; k < d; ++k) {
            if (k == j) continue;
            double worst = std::numeric_limits<double>::infinity();
            for (int m : allowed[k]) worst = std::min(worst, views[k](b, m) - views[k](l, m));
            gap += worst;
          }
          margin = std::min(margin, gap);
        }
        best = std::max(best, margin);
      }
      report.margins[j] = best;
    }
  } else {
    const std::uint64_t grid = space.grid_size();
    report.exact = grid <= context_cap;
    std::vector<Config> contexts;
    if (report.exact) {
      contexts = enumerate_grid(space, context_cap);
    } else {
      Rng rng = make_rng(seed, {streams::context});
      for (std::size_t s = 0; s < sampled_contexts; ++s) {
        std::vector<int> v(d);
        for (std::size_t j = 0; j < d; ++j) v[j] = static_cast<int>(uniform_index(rng, space.levels(j)));
        contexts.emplace_back(std::move(v));
      }
    }
    report.contexts = contexts.size();
    for (std::size_t j = 0; j < d; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      for (int b : allowed[j]) {
        double margin = std::numeric_limits<double>::infinity();
        bool qualifies = true;
        for (const Config& x : contexts) {
          if (report.exact && x[j] != 0) continue;  // each context of the other factors once
          Config y = x;
          bool any = false, b_ok = false;
          for (int l : allowed[j]) {
            y[j] = l;
            if (!objective.feasible(y)) continue;
            any = true;
            if (l == b) b_ok = true;
          }
          if (!any) continue;
          if (!b_ok) {
            qualifies = false;
            break;
          }
          const double fb = objective.gain_unchecked(j, b, x);
          for (int l : allowed[j]) {
            if (l == b) continue;
            y[j] = l;
            if (!objective.feasible(y)) continue;
            margin = std::min(margin, fb - objective.gain_unchecked(j, l, x));
          }
        }
        if (qualifies) best = std::max(best, margin);
      }
      report.margins[j] = best;
    }
  }

  report.holds = report.exact;
  for (std::size_t j = 0; j < d && report.holds; ++j) {
    const double total = report.influence.row(static_cast<Eigen::Index>(j)).sum();
    if (!(total < report.margins[j])) report.holds = false;
  }
  return report;
}

double near_opt_bound(double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(Errc::invalid_argument, "epsilon must be nonnegative");
  return 2.0 * epsilon;
}

double two_swap_bound(const Objective& objective, const Config& x) {
  if (!verify_1swap(objective, x).optimal)
    throw Error(Errc::not_one_swap_optimal, "configuration " + to_string(x) + " is not 1-swap optimal");
  const FactorSpace& space = objective.space();
  const EffectTable& t = objective.table();
  double bound = 0.0;
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    bound += std::max(0.0, t.mains[j].maxCoeff() - t.mains[j](x[j]));
    double saving = 0.0;
    for (int l = 0; l < static_cast<int>(space.levels(j)); ++l)
      saving = std::max(saving, objective.cost().level_cost(j, x[j]) - objective.cost().level_cost(j, l));
    bound += objective.spec().lambda_cost * saving;
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    bound += std::max(0.0, t.pairs[p].maxCoeff() - t.pairs[p](x[j], x[k]));
    const auto& r = objective.risk_matrix(p);
    bound += objective.spec().lambda_risk * std::max(0.0, r(x[j], x[k]) - r.minCoeff());
  }
  return bound;
}

std::vector<RankedConfig> rank_configs(const Objective& objective, std::size_t k, std::uint64_t cap) {
  const FactorSpace& space = objective.space();
  if (space.grid_size() > cap) throw Error(Errc::cap_exceeded, "grid too large for exhaustive ranking");
  std::vector<RankedConfig> all;
  for_each_config(space, [&](const Config& x) {
    if (objective.feasible(x)) all.push_back({x, objective.value_unchecked(x)});
  });
  auto better = [](const RankedConfig& a, const RankedConfig& b) {
    return a.value > b.value || (a.value == b.value && a.config < b.config);
  };
  if (k < all.size()) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
    all.resize(k);
  } else {
    std::sort(all.begin(), all.end(), better);
  }
  return all;
}

std::optional<RankedConfig> exhaustive_argmax(const Objective& objective, std::uint64_t cap) {
  auto top = rank_configs(objective, 1, cap);
  if (top.empty()) return std::nullopt;
  return top.front();
}

}  // namespace effectmap
