#pragma once

#include "effectmap/design_space.hpp"
#include "effectmap/effect_table.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace effectmap {

// Pseudo-counts for shrinkage eta = n / (n + tau).
struct ShrinkageSpec {
  std::vector<double> tau_main;  // per factor
  std::vector<double> tau_pair;  // per pair

  static ShrinkageSpec shared(const FactorSpace& space, double tau_main = 1.0, double tau_pair = 1.0);
  void validate(const FactorSpace& space) const;
};

double shrinkage_factor(double count, double tau);

// Shift-stable weighted mean accumulator.
class WeightedMean {
 public:
  void add(double value, double weight);
  bool empty() const { return !(weight_ > 0.0); }
  double weight() const { return weight_; }
  double value() const { return shift_ + sum_ / weight_; }

 private:
  bool anchored_ = false;
  double shift_ = 0.0;
  double sum_ = 0.0;
  double weight_ = 0.0;
};

double weighted_baseline(const RunLog& log);
// nullopt signals an empty cell.
std::optional<double> conditional_mean(const RunLog& log, std::size_t j, int l);
std::optional<double> conditional_mean(const RunLog& log, std::size_t j, int l, std::size_t k, int m);

// Centered, unshrunk table: raw estimators followed by exact re-centering.
EffectTable raw_effects_cm(const RunLog& log, const ReferenceDistribution& reference);

// Shrinks in place with the given support, then re-centers.
void apply_shrinkage(EffectTable& table, const SupportCounts& support, const ShrinkageSpec& shrinkage,
                     const ReferenceDistribution& reference);

EffectTable estimate_effects_cm(const RunLog& log, const ReferenceDistribution& reference,
                                const ShrinkageSpec& shrinkage);

std::vector<EffectTable> bootstrap_replicates(const RunLog& log, const ReferenceDistribution& reference,
                                              const ShrinkageSpec& shrinkage, std::size_t replicates,
                                              std::uint64_t seed);

EffectTable bootstrap_cis(const RunLog& log, const ReferenceDistribution& reference, const ShrinkageSpec& shrinkage,
                          std::size_t replicates, double level, std::uint64_t seed);

// Linear-interpolated sample quantile of unsorted values, q in [0,1].
double quantile(std::vector<double> values, double q);

double shrinkage_risk(double eta, double variance, double effect);

}  // namespace effectmap
