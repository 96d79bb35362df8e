#pragma once

#include "effectmap/design_space.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <vector>

namespace effectmap {

enum class Provenance { cm, sf, truth };

std::string_view provenance_name(Provenance p);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;
};

struct EffectIntervals {
  double level = 0.95;
  std::size_t replicates = 0;
  Interval mu;
  std::vector<std::vector<Interval>> mains;        // [factor][level]
  std::vector<std::vector<Interval>> pairs;        // [pair][row-major cell]
  std::vector<std::vector<Interval>> level_means;  // [factor][level]
};

// Baseline plus centered main and pairwise tables over a factor space.
struct EffectTable {
  FactorSpace space;
  Provenance provenance = Provenance::cm;
  double mu = 0.0;
  std::vector<Eigen::VectorXd> mains;              // [factor](level)
  std::vector<Eigen::MatrixXd> pairs;              // [pair](level_j, level_k), j<k
  std::vector<std::vector<bool>> main_unsupported; // empty-cell flags
  std::vector<Eigen::MatrixXi> pair_unsupported;
  std::vector<Eigen::VectorXd> level_means;        // raw conditional means; NaN when empty
  std::optional<SupportCounts> support;
  std::optional<EffectIntervals> intervals;

  EffectTable() = default;
  EffectTable(FactorSpace space, Provenance provenance);

  std::size_t dimension() const { return space.dimension(); }
  double main(std::size_t j, int l) const { return mains[j](l); }
  // Order-free access: pair(j,l,k,m) == pair(k,m,j,l).
  double pair(std::size_t j, int l, std::size_t k, int m) const;
  Eigen::MatrixXd pair_matrix(std::size_t j, std::size_t k) const;

  // mu + sum of mains + sum of pairs.
  double predict(const Config& x) const;
  void zero_pairs();
  std::size_t entry_count() const;
};

// Vector centered to zero mean under the weights.
Eigen::VectorXd center_vector(const Eigen::VectorXd& v, const std::vector<double>& weights);

// Weighted projection onto tables whose row and column conditional means vanish.
Eigen::MatrixXd double_center(const Eigen::MatrixXd& g, const Eigen::MatrixXd& joint, bool product_form);

void center_table(EffectTable& table, const ReferenceDistribution& reference);

// Largest weighted main mean or pair row/column conditional mean.
double centering_violation(const EffectTable& table, const ReferenceDistribution& reference);

// Entrywise max |a - b| over mu, mains, and pairs.
double max_entry_difference(const EffectTable& a, const EffectTable& b);
// Root mean square over all main and pair entries.
double rms_entry_difference(const EffectTable& a, const EffectTable& b);

}  // namespace effectmap
