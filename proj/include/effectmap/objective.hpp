#pragma once

#include "effectmap/design_space.hpp"
#include "effectmap/effect_table.hpp"

#include <Eigen/Dense>

#include <vector>

namespace effectmap {

// Additive per-level costs plus an optional offset.
struct CostModel {
  std::vector<Eigen::VectorXd> level_costs;  // empty means zero cost
  double offset = 0.0;

  static CostModel zero(const FactorSpace& space);
  double level_cost(std::size_t j, int l) const;
  double cost(const Config& x) const;
  void validate(const FactorSpace& space) const;
};

// Banned levels and an explicit list of banned configurations.
struct Feasibility {
  std::vector<std::vector<bool>> banned_levels;  // empty means none
  std::vector<Config> banned_configs;            // kept sorted

  bool level_allowed(std::size_t j, int l) const;
  bool allows(const Config& x) const;
  bool has_config_bans() const { return !banned_configs.empty(); }
  void ban_config(const Config& x);
};

struct ObjectiveSpec {
  double lambda_risk = 1.0;
  double lambda_cost = 0.0;
  double default_gamma = 1.0;
  std::vector<double> gamma;  // per pair; empty uses default_gamma
  Feasibility feasibility;

  double gamma_for(std::size_t pair) const { return gamma.empty() ? default_gamma : gamma[pair]; }
  void validate(const FactorSpace& space) const;
};

double two_factor_predict(const EffectTable& table, const Config& x);

double risk_term(double count, double gamma);
double risk_penalty(const SupportCounts& support, const FactorSpace& space, const Config& x, const ObjectiveSpec& spec);
double risk_penalty(const SupportCounts& support, const FactorSpace& space, const Config& x, double gamma);

double delta_cost(const CostModel& cost, std::size_t j, int l, const Config& x);

// Non-owning view of everything the objective depends on; the referenced inputs must outlive it.
class Objective {
 public:
  Objective(const EffectTable& table, const SupportCounts& support, const ObjectiveSpec& spec, const CostModel& cost);

  const EffectTable& table() const { return *table_; }
  const ObjectiveSpec& spec() const { return *spec_; }
  const CostModel& cost() const { return *cost_; }
  const FactorSpace& space() const { return table_->space; }

  bool feasible(const Config& x) const { return spec_->feasibility.allows(x); }
  // Throws on infeasible x.
  double value(const Config& x) const;
  double value_unchecked(const Config& x) const;
  double risk(const Config& x) const;
  // r_jk cell for pair p, rows indexed by the lower factor.
  double risk_cell(std::size_t p, int l, int m) const { return risk_[p](l, m); }
  const Eigen::MatrixXd& risk_matrix(std::size_t p) const { return risk_[p]; }

  // Local objective for switching factor j to level l in context x; throws when the switch is infeasible.
  double gain(std::size_t j, int l, const Config& x) const;
  double gain_unchecked(std::size_t j, int l, const Config& x) const;

 private:
  const EffectTable* table_;
  const ObjectiveSpec* spec_;
  const CostModel* cost_;
  std::vector<Eigen::MatrixXd> risk_;
};

double objective(const EffectTable& table, const Config& x, const SupportCounts& support, const ObjectiveSpec& spec,
                 const CostModel& cost);

double local_gain(const EffectTable& table, const SupportCounts& support, const ObjectiveSpec& spec,
                  const CostModel& cost, std::size_t j, int l, const Config& x);

}  // namespace effectmap
