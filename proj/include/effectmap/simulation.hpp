#pragma once

#include "effectmap/design_space.hpp"
#include "effectmap/effect_table.hpp"
#include "effectmap/objective.hpp"
#include "effectmap/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace effectmap {

// d factors with levels alternating 2, 3, 2, 3, ...
FactorSpace alternating_space(std::size_t d);

struct TeacherSpec {
  FactorSpace space = alternating_space(6);
  double main_scale = 1.0;      // RMS of main-effect entries
  double pair_scale = 0.5;      // RMS of interaction entries
  double residual_scale = 0.1;  // RMS of the three-factor residual
  double noise_sd = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

class Teacher {
 public:
  Teacher(TeacherSpec spec, EffectTable truth, std::array<std::size_t, 3> triple, std::vector<double> residual);

  const TeacherSpec& spec() const { return spec_; }
  const EffectTable& truth() const { return truth_; }
  const FactorSpace& space() const { return truth_.space; }
  // Noise-free response.
  double operator()(const Config& x) const { return truth_.predict(x) + residual(x); }
  double residual(const Config& x) const;
  double bound() const { return bound_; }

 private:
  TeacherSpec spec_;
  EffectTable truth_;
  std::array<std::size_t, 3> triple_{};
  std::vector<double> residual_;
  double bound_ = 0.0;
};

Teacher gen_teacher(const TeacherSpec& spec);

enum class Estimator { cm, sf };
enum class Background { uniform, empirical };

std::string_view estimator_name(Estimator e);

struct TrialConfig {
  DesignPlan design = DesignPlan::balanced(48);
  std::size_t seeds_per_point = 4;
  Estimator estimator = Estimator::cm;
  bool mains_only = false;
  Background background = Background::uniform;
  double tau = 1.0;
  std::size_t shapley_samples = 256;  // 0 for exact coalition enumeration
  double ridge = 1e-3;
  ObjectiveSpec objective = [] {
    ObjectiveSpec s;
    s.lambda_risk = 0.0;
    return s;
  }();
  SearchSpec search;
  std::uint64_t seed = 0;
};

struct TrialResult {
  Estimator estimator = Estimator::cm;
  double reconstruction_error = 0.0;
  double optimality_gap = 0.0;
  double spearman = 0.0;
  double sigma_min = 0.0;      // SF only
  double residual_norm = 0.0;  // SF only
  Config chosen;
  Config optimum;
  EffectTable table;
};

TrialResult run_trial(const Teacher& teacher, const TrialConfig& config);

std::vector<double> average_ranks(std::span<const double> values);
double spearman(std::span<const double> a, std::span<const double> b);

enum class AblationAxis { effects_order, design_robustness, shap_background, seed_budget };

std::string_view axis_name(AblationAxis axis);
AblationAxis parse_axis(std::string_view name);

struct SuiteConfig {
  TeacherSpec teacher;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t balanced_n = 48;
  std::size_t small_n = 24;
  double skew_bias = 3.0;
  std::size_t seeds_per_point = 4;
  std::vector<std::size_t> seed_budgets{2, 4, 8, 16};
  std::size_t effects_order_seeds = 16;
  double tau = 1.0;
  std::size_t shapley_samples = 256;
  double ridge = 1e-3;
  std::size_t restarts = 8;
  std::size_t ci_resamples = 1000;
  double ci_level = 0.95;

  nlohmann::json to_json() const;
  static SuiteConfig from_json(const nlohmann::json& doc);
  // Short digest of the canonical JSON form.
  std::string hash() const;
};

struct SuiteRow {
  std::string axis;
  std::string cell;
  std::string estimator;
  std::string metric;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t trials = 0;
  std::string config_hash;
};

// Mean with a percentile bootstrap interval of the mean.
struct MeanInterval {
  double mean = 0.0, lo = 0.0, hi = 0.0;
};
MeanInterval mean_interval(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed);

std::vector<SuiteRow> table2_suite(const SuiteConfig& config);
std::vector<SuiteRow> ablation_suite(AblationAxis axis, const SuiteConfig& config);

const SuiteRow& find_row(const std::vector<SuiteRow>& rows, std::string_view cell, std::string_view estimator,
                         std::string_view metric);

}  // namespace effectmap
