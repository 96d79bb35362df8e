#include "effectmap/objective.hpp"

#include "effectmap/error.hpp"

#include <algorithm>
#include <cmath>

namespace effectmap {

CostModel CostModel::zero(const FactorSpace& space) {
  CostModel c;
  for (std::size_t j = 0; j < space.dimension(); ++j)
    c.level_costs.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.levels(j))));
  return c;
}

double CostModel::level_cost(std::size_t j, int l) const { return level_costs.empty() ? 0.0 : level_costs[j](l); }

double CostModel::cost(const Config& x) const {
  double c = offset;
  if (!level_costs.empty())
    for (std::size_t j = 0; j < x.size(); ++j) c += level_costs[j](x[j]);
  return c;
}

void CostModel::validate(const FactorSpace& space) const {
  if (!std::isfinite(offset)) throw Error(Errc::invalid_argument, "cost offset must be finite");
  if (level_costs.empty()) return;
  if (level_costs.size() != space.dimension()) throw Error(Errc::invalid_argument, "cost model does not match the space");
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    if (static_cast<std::size_t>(level_costs[j].size()) != space.levels(j))
      throw Error(Errc::invalid_argument, "cost table for '" + space.factor(j).name + "' has the wrong length");
    if (!level_costs[j].allFinite()) throw Error(Errc::invalid_argument, "costs must be finite");
  }
}

bool Feasibility::level_allowed(std::size_t j, int l) const {
  return banned_levels.empty() || banned_levels[j].empty() || !banned_levels[j][static_cast<std::size_t>(l)];
}

bool Feasibility::allows(const Config& x) const {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (!level_allowed(j, x[j])) return false;
  return !std::binary_search(banned_configs.begin(), banned_configs.end(), x);
}

void Feasibility::ban_config(const Config& x) {
  auto it = std::lower_bound(banned_configs.begin(), banned_configs.end(), x);
  if (it == banned_configs.end() || *it != x) banned_configs.insert(it, x);
}

void ObjectiveSpec::validate(const FactorSpace& space) const {
  if (!(lambda_risk >= 0.0) || !(lambda_cost >= 0.0) || !std::isfinite(lambda_risk) || !std::isfinite(lambda_cost))
    throw Error(Errc::invalid_argument, "objective weights must be nonnegative");
  if (!(default_gamma > 0.0)) throw Error(Errc::invalid_argument, "gamma must be positive");
  if (!gamma.empty() && gamma.size() != space.pair_count())
    throw Error(Errc::invalid_argument, "one gamma per factor pair is required");
  for (double g : gamma)
    if (!(g > 0.0)) throw Error(Errc::invalid_argument, "gamma must be positive");
  if (!feasibility.banned_levels.empty() && feasibility.banned_levels.size() != space.dimension())
    throw Error(Errc::invalid_argument, "banned levels do not match the space");
  for (const auto& x : feasibility.banned_configs) space.require_valid(x);
}

double two_factor_predict(const EffectTable& table, const Config& x) {
  table.space.require_valid(x);
  return table.predict(x);
}

double risk_term(double count, double gamma) {
  if (!(gamma > 0.0)) throw Error(Errc::invalid_argument, "gamma must be positive");
  return gamma / (count + gamma);
}

double risk_penalty(const SupportCounts& support, const FactorSpace& space, const Config& x, const ObjectiveSpec& spec) {
  double r = 0.0;
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    r += risk_term(support.pair[p](x[j], x[k]), spec.gamma_for(p));
  }
  return r;
}

double risk_penalty(const SupportCounts& support, const FactorSpace& space, const Config& x, double gamma) {
  ObjectiveSpec spec;
  spec.default_gamma = gamma;
  return risk_penalty(support, space, x, spec);
}

double delta_cost(const CostModel& cost, std::size_t j, int l, const Config& x) {
  return cost.level_cost(j, l) - cost.level_cost(j, x[j]);
}

Objective::Objective(const EffectTable& table, const SupportCounts& support, const ObjectiveSpec& spec,
                     const CostModel& cost)
    : table_(&table), spec_(&spec), cost_(&cost) {
  const FactorSpace& space = table.space;
  spec.validate(space);
  cost.validate(space);
  if (support.pair.size() != space.pair_count()) throw Error(Errc::invalid_argument, "support does not match the space");
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    const double g = spec.gamma_for(p);
    risk_.push_back((g / (support.pair[p].array() + g)).matrix());
  }
}

double Objective::risk(const Config& x) const {
  const FactorSpace& sp = space();
  double r = 0.0;
  for (std::size_t p = 0; p < sp.pair_count(); ++p) {
    auto [j, k] = sp.pair_factors(p);
    r += risk_[p](x[j], x[k]);
  }
  return r;
}

double Objective::value_unchecked(const Config& x) const {
  return table_->predict(x) - spec_->lambda_risk * risk(x) - spec_->lambda_cost * cost_->cost(x);
}

double Objective::value(const Config& x) const {
  space().require_valid(x);
  if (!feasible(x)) throw Error(Errc::infeasible, "configuration " + to_string(x) + " is infeasible");
  return value_unchecked(x);
}

double Objective::gain_unchecked(std::size_t j, int l, const Config& x) const {
  const FactorSpace& sp = space();
  double f = table_->mains[j](l);
  double r = 0.0;
  for (std::size_t k = 0; k < sp.dimension(); ++k) {
    if (k == j) continue;
    const std::size_t p = sp.pair_index(j, k);
    if (j < k) {
      f += table_->pairs[p](l, x[k]);
      r += risk_[p](l, x[k]);
    } else {
      f += table_->pairs[p](x[k], l);
      r += risk_[p](x[k], l);
    }
  }
  return f - spec_->lambda_risk * r - spec_->lambda_cost * delta_cost(*cost_, j, l, x);
}

double Objective::gain(std::size_t j, int l, const Config& x) const {
  space().require_valid(x);
  Config y = x;
  y[j] = l;
  space().require_valid(y);
  if (!feasible(y)) throw Error(Errc::infeasible, "substitution yields an infeasible configuration");
  return gain_unchecked(j, l, x);
}

double objective(const EffectTable& table, const Config& x, const SupportCounts& support, const ObjectiveSpec& spec,
                 const CostModel& cost) {
  return Objective(table, support, spec, cost).value(x);
}

double local_gain(const EffectTable& table, const SupportCounts& support, const ObjectiveSpec& spec,
                  const CostModel& cost, std::size_t j, int l, const Config& x) {
  return Objective(table, support, spec, cost).gain(j, l, x);
}

}  // namespace effectmap
