#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace effectmap {

struct Factor {
  std::string name;
  std::vector<std::string> levels;
};

// One level index per factor.
class Config {
 public:
  Config() = default;
  explicit Config(std::vector<int> levels) : levels_(std::move(levels)) {}
  Config(std::initializer_list<int> levels) : levels_(levels) {}

  std::size_t size() const { return levels_.size(); }
  int operator[](std::size_t j) const { return levels_[j]; }
  int& operator[](std::size_t j) { return levels_[j]; }
  const std::vector<int>& levels() const { return levels_; }

  auto operator<=>(const Config&) const = default;
  bool operator==(const Config&) const = default;

 private:
  std::vector<int> levels_;
};

struct ConfigHash {
  std::size_t operator()(const Config& x) const noexcept;
};

std::string to_string(const Config& x);

class FactorSpace {
 public:
  FactorSpace() = default;
  explicit FactorSpace(std::vector<Factor> factors);

  std::size_t dimension() const { return factors_.size(); }
  std::size_t levels(std::size_t j) const { return factors_[j].levels.size(); }
  const Factor& factor(std::size_t j) const { return factors_[j]; }
  const std::vector<Factor>& factors() const { return factors_; }

  std::optional<std::size_t> find_factor(std::string_view name) const;
  std::optional<int> find_level(std::size_t j, std::string_view label) const;

  // Saturates at UINT64_MAX.
  std::uint64_t grid_size() const;
  bool valid(const Config& x) const;
  void require_valid(const Config& x) const;

  // Unordered pairs j<k in order (0,1),(0,2),...,(1,2),...
  std::size_t pair_count() const { return dimension() * (dimension() - 1) / 2; }
  std::size_t pair_index(std::size_t j, std::size_t k) const;
  std::pair<std::size_t, std::size_t> pair_factors(std::size_t p) const;
  std::string pair_name(std::size_t p) const;

  // Lexicographic rank with the last factor varying fastest.
  std::uint64_t rank(const Config& x) const;
  Config unrank(std::uint64_t r) const;

  bool operator==(const FactorSpace& other) const;

 private:
  std::vector<Factor> factors_;
};

FactorSpace build_space(std::vector<Factor> factors);

inline constexpr std::uint64_t default_grid_cap = 10'000'000;

std::vector<Config> enumerate_grid(const FactorSpace& space, std::uint64_t cap = default_grid_cap);

// Calls fn(x) for every grid config in enumeration order.
template <class Fn>
void for_each_config(const FactorSpace& space, Fn&& fn) {
  const std::size_t d = space.dimension();
  Config x(std::vector<int>(d, 0));
  if (d == 0) return;
  while (true) {
    fn(static_cast<const Config&>(x));
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (++x[j] < static_cast<int>(space.levels(j))) break;
      x[j] = 0;
      if (j == 0) return;
    }
  }
}

struct DesignPlan {
  enum class Kind { full, balanced, skewed };
  Kind kind = Kind::full;
  std::size_t n = 0;
  double bias = 1.0;

  static DesignPlan full() { return {Kind::full, 0, 1.0}; }
  static DesignPlan balanced(std::size_t n) { return {Kind::balanced, n, 1.0}; }
  static DesignPlan skewed(std::size_t n, double bias) { return {Kind::skewed, n, bias}; }
};

std::vector<Config> sample_design(const FactorSpace& space, const DesignPlan& plan, std::uint64_t seed);

struct Record {
  Config config;
  double response = 0.0;
  double weight = 1.0;
  std::int64_t seed = 0;
};

class RunLog {
 public:
  RunLog(FactorSpace space, std::vector<Record> records);

  const FactorSpace& space() const { return space_; }
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  double total_weight() const;

 private:
  FactorSpace space_;
  std::vector<Record> records_;
};

RunLog parse_log(std::istream& in, const FactorSpace& space);
RunLog ingest_log(const std::filesystem::path& path, const FactorSpace& space);
void export_log(std::ostream& out, const RunLog& log);

class ReferenceDistribution {
 public:
  enum class Kind { uniform, product, empirical };

  static ReferenceDistribution uniform(const FactorSpace& space);
  static ReferenceDistribution product(const FactorSpace& space, std::vector<std::vector<double>> marginals);
  // Normalized weight histogram of the log.
  static ReferenceDistribution empirical(const RunLog& log);
  // Product of the log's weighted marginals.
  static ReferenceDistribution empirical_marginals(const RunLog& log);

  Kind kind() const { return kind_; }
  bool is_product() const { return kind_ != Kind::empirical; }
  std::size_t dimension() const { return marginals_.size(); }

  const std::vector<double>& marginal(std::size_t j) const { return marginals_[j]; }
  double marginal(std::size_t j, int level) const { return marginals_[j][level]; }
  // Joint pair probabilities; rows index factor j, columns factor k.
  Eigen::MatrixXd joint(std::size_t j, std::size_t k) const;
  double probability(const Config& x) const;
  const std::vector<std::pair<Config, double>>& atoms() const { return atoms_; }

 private:
  Kind kind_ = Kind::uniform;
  std::vector<std::vector<double>> marginals_;
  std::vector<std::pair<Config, double>> atoms_;
};

struct SupportCounts {
  std::vector<Eigen::VectorXd> level;          // n_j(l)
  std::vector<Eigen::MatrixXd> pair;           // n_jk(l,m), pair index order
  std::vector<Eigen::MatrixXd> pair_effective; // n_eff(l,m)
  double records = 0.0;

  double pair_count(const FactorSpace& space, std::size_t j, int l, std::size_t k, int m) const;

  // Every cell seen n times, as on a full grid with n runs per config.
  static SupportCounts uniform(const FactorSpace& space, double runs_per_config);
};

SupportCounts support_counts(const RunLog& log);

double effective_sample_size(std::span<const double> weights);

}  // namespace effectmap
