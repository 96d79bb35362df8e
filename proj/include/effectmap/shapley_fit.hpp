#pragma once

#include "effectmap/cm_effects.hpp"
#include "effectmap/design_space.hpp"
#include "effectmap/effect_table.hpp"
#include "effectmap/error.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace effectmap {

using FactorMask = std::uint64_t;

inline constexpr std::uint64_t exact_coalition_cap = 1'000'000;

struct CoalitionValue {
  double value = 0.0;
  std::size_t samples = 0;  // 0 when summed exactly
};

// Response function plus the background used to integrate out absent factors.
class ValueOracle {
 public:
  using Function = std::function<double(const Config&)>;

  static ValueOracle from_function(FactorSpace space, Function f, ReferenceDistribution background, double bound);
  // Weighted cell means of the log; unseen configs fall back to the baseline.
  static ValueOracle from_log(const RunLog& log, ReferenceDistribution background);

  const FactorSpace& space() const { return space_; }
  const ReferenceDistribution& background() const { return background_; }
  double bound() const { return bound_; }
  double evaluate(const Config& x) const;
  std::size_t unobserved_cells() const { return unobserved_; }

  // E[f(x_T, X_-T)] under the background. Above the cap the expectation is sampled.
  CoalitionValue coalition_value(const Config& x, FactorMask present, std::uint64_t seed = 0,
                                 std::uint64_t exact_cap = exact_coalition_cap,
                                 std::size_t mc_draws = 20'000) const;

 private:
  FactorSpace space_;
  Function f_;
  ReferenceDistribution background_;
  double bound_ = 0.0;
  std::size_t unobserved_ = 0;
};

// Memoized coalition values at one evaluation point.
class CoalitionCache {
 public:
  CoalitionCache(const ValueOracle& oracle, Config x, std::uint64_t seed = 0);
  double operator()(FactorMask present);
  const Config& point() const { return x_; }

 private:
  const ValueOracle* oracle_;
  Config x_;
  std::uint64_t seed_;
  std::unordered_map<FactorMask, double> values_;
};

// Marginal contributions of each factor along one ordering; they telescope to v(all) - v(none).
std::vector<double> permutation_contributions(CoalitionCache& cache, std::span<const std::size_t> order);

enum class ShapleySampling { permutation, subset };

struct ShapleyEstimate {
  Config point;
  std::vector<double> phi;
  std::vector<double> variance;  // sample variance of marginal contributions
  std::size_t samples = 0;       // 0 for exact values
};

ShapleyEstimate mc_shapley(const ValueOracle& oracle, const Config& x, std::size_t M, std::uint64_t seed,
                           ShapleySampling sampling = ShapleySampling::permutation);
// Exact values by subset enumeration.
ShapleyEstimate exact_shapley(const ValueOracle& oracle, const Config& x);

std::vector<double> exact_shapley_second_order(const EffectTable& table, const Config& x);

// Pre-ceiling sample bound; union mode multiplies the log argument by the item count.
double mc_sample_bound(double B, double eps, double delta, std::uint64_t union_items = 1);
std::uint64_t mc_sample_size(double B, double eps, double delta, std::uint64_t union_items = 1);

// Orthonormal basis of the weighted sum-to-zero subspace, one column per free parameter.
Eigen::MatrixXd contrast_basis(const std::vector<double>& weights);

struct EffectDesignMatrix {
  FactorSpace space;
  std::vector<Config> points;
  std::vector<Eigen::MatrixXd> bases;   // per factor, L_j x (L_j - 1)
  std::vector<Eigen::Index> offsets;    // parameter offsets: mains then pairs
  Eigen::MatrixXd raw;                  // rows (point, factor), full-table columns
  Eigen::MatrixXd reduced;              // rows (point, factor), free parameters
  Eigen::VectorXd singular_values;
  double sigma_min = 0.0;

  std::size_t rows() const { return static_cast<std::size_t>(reduced.rows()); }
  std::size_t parameters() const { return static_cast<std::size_t>(reduced.cols()); }
  std::vector<std::string> parameter_blocks() const;
  // Free parameters of a centered table.
  Eigen::VectorXd encode(const EffectTable& table) const;
  // Centered table (mu = 0) from free parameters.
  EffectTable decode(const Eigen::VectorXd& theta) const;
  // Column offset of the full-table entry in raw.
  Eigen::Index raw_main_column(std::size_t j, int l) const;
  Eigen::Index raw_pair_column(std::size_t p, int l, int m) const;
};

inline constexpr double rank_tolerance = 1e-8;

class RankDeficientError : public Error {
 public:
  RankDeficientError(const std::string& message, std::vector<std::string> blocks, double sigma_min)
      : Error(Errc::rank_deficient, message), blocks_(std::move(blocks)), sigma_min_(sigma_min) {}
  const std::vector<std::string>& blocks() const { return blocks_; }
  double sigma_min() const { return sigma_min_; }

 private:
  std::vector<std::string> blocks_;
  double sigma_min_;
};

// Throws RankDeficientError when sigma_min < rank_tolerance.
EffectDesignMatrix build_design_matrix(const std::vector<Config>& eval_set, const FactorSpace& space,
                                       const ReferenceDistribution& reference);

struct FitDiagnostics {
  double sigma_min = 0.0;
  double residual_norm = 0.0;
  std::size_t rows = 0;
  std::size_t parameters = 0;
  std::size_t points = 0;
};

struct SfFitOptions {
  // Tikhonov weight on the free parameters; 0 is plain least squares.
  double ridge = 0.0;
  std::optional<SupportCounts> support;  // shrinkage applied when present
};

struct SfFit {
  EffectTable table;
  FitDiagnostics diagnostics;
};

// Baseline for the recovered table: the background mean of the oracle.
SfFit fit_effects_sf(const std::vector<ShapleyEstimate>& estimates, const FactorSpace& space,
                     const ReferenceDistribution& reference, const ShrinkageSpec& shrinkage, double baseline,
                     const SfFitOptions& options = {});

double stability_bound(const EffectDesignMatrix& matrix, double observation_error_norm);

}  // namespace effectmap
