#include "effectmap/design_space.hpp"

#include "effectmap/error.hpp"
#include "effectmap/rng.hpp"
#include "effectmap/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace effectmap {

std::size_t ConfigHash::operator()(const Config& x) const noexcept {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (int v : x.levels()) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
  return static_cast<std::size_t>(h);
}

std::string to_string(const Config& x) {
  std::string out = "(";
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j) out += ",";
    out += std::to_string(x[j]);
  }
  return out + ")";
}

FactorSpace::FactorSpace(std::vector<Factor> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw Error(Errc::invalid_space, "factor space must declare at least one factor");
  if (factors_.size() > 63) throw Error(Errc::invalid_space, "at most 63 factors are supported");
  std::set<std::string> names;
  for (const auto& f : factors_) {
    if (f.name.empty()) throw Error(Errc::invalid_space, "factor names must be nonempty");
    if (!names.insert(f.name).second) throw Error(Errc::invalid_space, "duplicate factor name '" + f.name + "'");
    if (f.levels.size() < 2)
      throw Error(Errc::invalid_space, "factor '" + f.name + "' needs at least 2 levels");
    std::set<std::string> labels;
    for (const auto& l : f.levels)
      if (!labels.insert(l).second)
        throw Error(Errc::invalid_space, "duplicate level '" + l + "' in factor '" + f.name + "'");
  }
}

FactorSpace build_space(std::vector<Factor> factors) { return FactorSpace(std::move(factors)); }

std::optional<std::size_t> FactorSpace::find_factor(std::string_view name) const {
  for (std::size_t j = 0; j < factors_.size(); ++j)
    if (factors_[j].name == name) return j;
  return std::nullopt;
}

std::optional<int> FactorSpace::find_level(std::size_t j, std::string_view label) const {
  const auto& ls = factors_[j].levels;
  for (std::size_t l = 0; l < ls.size(); ++l)
    if (ls[l] == label) return static_cast<int>(l);
  return std::nullopt;
}

std::uint64_t FactorSpace::grid_size() const {
  std::uint64_t g = 1;
  for (const auto& f : factors_) {
    const std::uint64_t l = f.levels.size();
    if (g > std::numeric_limits<std::uint64_t>::max() / l) return std::numeric_limits<std::uint64_t>::max();
    g *= l;
  }
  return g;
}

bool FactorSpace::valid(const Config& x) const {
  if (x.size() != factors_.size()) return false;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] < 0 || x[j] >= static_cast<int>(levels(j))) return false;
  return true;
}

void FactorSpace::require_valid(const Config& x) const {
  if (!valid(x)) throw Error(Errc::invalid_config, "configuration " + to_string(x) + " is not valid for the space");
}

std::size_t FactorSpace::pair_index(std::size_t j, std::size_t k) const {
  if (j > k) std::swap(j, k);
  const std::size_t d = dimension();
  if (j == k || k >= d) throw Error(Errc::invalid_argument, "invalid factor pair");
  return j * (2 * d - j - 1) / 2 + (k - j - 1);
}

std::pair<std::size_t, std::size_t> FactorSpace::pair_factors(std::size_t p) const {
  const std::size_t d = dimension();
  std::size_t j = 0;
  while (p >= d - j - 1) {
    p -= d - j - 1;
    ++j;
  }
  return {j, j + 1 + p};
}

std::string FactorSpace::pair_name(std::size_t p) const {
  auto [j, k] = pair_factors(p);
  return factors_[j].name + "|" + factors_[k].name;
}

std::uint64_t FactorSpace::rank(const Config& x) const {
  std::uint64_t r = 0;
  for (std::size_t j = 0; j < x.size(); ++j) r = r * levels(j) + static_cast<std::uint64_t>(x[j]);
  return r;
}

Config FactorSpace::unrank(std::uint64_t r) const {
  std::vector<int> v(dimension());
  for (std::size_t j = dimension(); j-- > 0;) {
    v[j] = static_cast<int>(r % levels(j));
    r /= levels(j);
  }
  return Config(std::move(v));
}

bool FactorSpace::operator==(const FactorSpace& other) const {
  if (factors_.size() != other.factors_.size()) return false;
  for (std::size_t j = 0; j < factors_.size(); ++j)
    if (factors_[j].name != other.factors_[j].name || factors_[j].levels != other.factors_[j].levels) return false;
  return true;
}

std::vector<Config> enumerate_grid(const FactorSpace& space, std::uint64_t cap) {
  const std::uint64_t g = space.grid_size();
  if (g > cap)
    throw Error(Errc::cap_exceeded, "grid size " + std::to_string(g) + " exceeds cap " + std::to_string(cap));
  std::vector<Config> out;
  out.reserve(g);
  for_each_config(space, [&](const Config& x) { out.push_back(x); });
  return out;
}

namespace {

// Per-factor caps that force every level count into {floor, floor+1}.
struct BalanceCaps {
  std::vector<int> floor_count, extra_slots;
  std::vector<std::vector<int>> counts;
  std::vector<int> extras_used;

  BalanceCaps(const FactorSpace& space, std::size_t n) {
    const std::size_t d = space.dimension();
    floor_count.resize(d);
    extra_slots.resize(d);
    counts.resize(d);
    extras_used.assign(d, 0);
    for (std::size_t j = 0; j < d; ++j) {
      floor_count[j] = static_cast<int>(n / space.levels(j));
      extra_slots[j] = static_cast<int>(n % space.levels(j));
      counts[j].assign(space.levels(j), 0);
    }
  }

  bool admits(const Config& x) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const int c = counts[j][x[j]];
      if (c < floor_count[j]) continue;
      if (c == floor_count[j] && extras_used[j] < extra_slots[j]) continue;
      return false;
    }
    return true;
  }

  double score(const Config& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += floor_count[j] - counts[j][x[j]];
    return s;
  }

  void add(const Config& x) {
    for (std::size_t j = 0; j < x.size(); ++j)
      if (counts[j][x[j]]++ == floor_count[j]) ++extras_used[j];
  }
};

std::vector<Config> balanced_greedy(const FactorSpace& space, std::size_t n, std::uint64_t seed) {
  const std::vector<Config> grid = enumerate_grid(space);
  constexpr int attempts = 500;
  for (int a = 0; a < attempts; ++a) {
    Rng rng = make_rng(seed, {streams::design, static_cast<std::uint64_t>(a)});
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> used(grid.size(), false);
    BalanceCaps caps(space, n);
    std::vector<Config> out;
    out.reserve(n);
    bool stuck = false;
    while (out.size() < n) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t pick = grid.size();
      for (std::size_t idx : order) {
        if (used[idx] || !caps.admits(grid[idx])) continue;
        const double s = caps.score(grid[idx]);
        if (s > best) {
          best = s;
          pick = idx;
        }
      }
      if (pick == grid.size()) {
        stuck = true;
        break;
      }
      used[pick] = true;
      caps.add(grid[pick]);
      out.push_back(grid[pick]);
    }
    if (!stuck) return out;
  }
  throw Error(Errc::infeasible, "could not construct a balanced design of size " + std::to_string(n));
}

std::vector<Config> balanced_columns(const FactorSpace& space, std::size_t n, std::uint64_t seed) {
  const std::size_t d = space.dimension();
  constexpr int attempts = 200;
  for (int a = 0; a < attempts; ++a) {
    Rng rng = make_rng(seed, {streams::design, static_cast<std::uint64_t>(a)});
    std::vector<std::vector<int>> columns(d);
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t L = space.levels(j);
      std::vector<int> extra(L);
      std::iota(extra.begin(), extra.end(), 0);
      std::shuffle(extra.begin(), extra.end(), rng);
      auto& col = columns[j];
      for (std::size_t l = 0; l < L; ++l) col.insert(col.end(), n / L, static_cast<int>(l));
      for (std::size_t e = 0; e < n % L; ++e) col.push_back(extra[e]);
      std::shuffle(col.begin(), col.end(), rng);
    }
    std::vector<Config> out;
    std::unordered_set<Config, ConfigHash> seen;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> v(d);
      for (std::size_t j = 0; j < d; ++j) v[j] = columns[j][i];
      Config x(std::move(v));
      if (!seen.insert(x).second) break;
      out.push_back(std::move(x));
    }
    if (out.size() == n) return out;
  }
  throw Error(Errc::infeasible, "could not construct a duplicate-free balanced design of size " + std::to_string(n));
}

}  // namespace

std::vector<Config> sample_design(const FactorSpace& space, const DesignPlan& plan, std::uint64_t seed) {
  switch (plan.kind) {
    case DesignPlan::Kind::full:
      return enumerate_grid(space);
    case DesignPlan::Kind::balanced: {
      if (plan.n == 0) throw Error(Errc::infeasible, "design size must be positive");
      if (plan.n > space.grid_size())
        throw Error(Errc::infeasible, "balanced design of size " + std::to_string(plan.n) + " exceeds the grid");
      if (space.grid_size() <= 200'000) return balanced_greedy(space, plan.n, seed);
      return balanced_columns(space, plan.n, seed);
    }
    case DesignPlan::Kind::skewed: {
      if (plan.n == 0) throw Error(Errc::infeasible, "design size must be positive");
      if (!(plan.bias > 0.0) || !std::isfinite(plan.bias)) throw Error(Errc::invalid_argument, "bias must be positive");
      Rng rng = make_rng(seed, {streams::design});
      std::vector<std::discrete_distribution<int>> dists;
      for (std::size_t j = 0; j < space.dimension(); ++j) {
        std::vector<double> w(space.levels(j), 1.0);
        w[0] = plan.bias;
        dists.emplace_back(w.begin(), w.end());
      }
      std::vector<Config> out;
      out.reserve(plan.n);
      for (std::size_t i = 0; i < plan.n; ++i) {
        std::vector<int> v(space.dimension());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = dists[j](rng);
        out.emplace_back(std::move(v));
      }
      return out;
    }
  }
  throw Error(Errc::invalid_argument, "unknown design plan");
}

RunLog::RunLog(FactorSpace space, std::vector<Record> records)
    : space_(std::move(space)), records_(std::move(records)) {
  bool positive = false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!space_.valid(r.config))
      throw Error(Errc::invalid_config, "record " + std::to_string(i) + " has an invalid configuration");
    if (!std::isfinite(r.response))
      throw Error(Errc::parse_error, "record " + std::to_string(i) + " has a non-finite response");
    if (!(r.weight >= 0.0) || !std::isfinite(r.weight))
      throw Error(Errc::parse_error, "record " + std::to_string(i) + " has a negative or non-finite weight");
    positive = positive || r.weight > 0.0;
  }
  if (!positive) throw Error(Errc::empty_log, "run log needs at least one record with positive weight");
}

double RunLog::total_weight() const {
  double s = 0.0;
  for (const auto& r : records_) s += r.weight;
  return s;
}

RunLog parse_log(std::istream& in, const FactorSpace& space) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::parse_error, "run log is empty");
  const auto header = split_csv_line(line);
  const std::size_t d = space.dimension();
  std::vector<std::optional<std::size_t>> factor_col(d);
  std::optional<std::size_t> response_col, weight_col, seed_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == "response") {
      response_col = c;
    } else if (h == "weight") {
      weight_col = c;
    } else if (h == "seed") {
      seed_col = c;
    } else if (auto j = space.find_factor(h)) {
      if (factor_col[*j]) throw Error(Errc::parse_error, "duplicate column '" + h + "'");
      factor_col[*j] = c;
    } else {
      throw Error(Errc::parse_error, "unknown factor column '" + h + "'");
    }
  }
  for (std::size_t j = 0; j < d; ++j)
    if (!factor_col[j]) throw Error(Errc::parse_error, "missing factor column '" + space.factor(j).name + "'");
  if (!response_col) throw Error(Errc::parse_error, "missing 'response' column");

  std::vector<Record> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(Errc::parse_error, "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                         " fields, found " + std::to_string(cells.size()));
    Record rec;
    std::vector<int> v(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto& label = cells[*factor_col[j]];
      auto l = space.find_level(j, label);
      if (!l)
        throw Error(Errc::parse_error, "row " + std::to_string(row) + ", column '" + space.factor(j).name +
                                           "': unknown level '" + label + "'");
      v[j] = *l;
    }
    rec.config = Config(std::move(v));
    auto num = [&](std::size_t c, const char* what) {
      auto x = parse_double(cells[c]);
      if (!x)
        throw Error(Errc::parse_error, "row " + std::to_string(row) + ", column '" + what + "': not a number '" +
                                           cells[c] + "'");
      return *x;
    };
    rec.response = num(*response_col, "response");
    if (weight_col) rec.weight = num(*weight_col, "weight");
    if (seed_col) {
      auto s = parse_int(cells[*seed_col]);
      if (!s) throw Error(Errc::parse_error, "row " + std::to_string(row) + ", column 'seed': not an integer");
      rec.seed = *s;
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw Error(Errc::empty_log, "run log has no records");
  return RunLog(space, std::move(records));
}

RunLog ingest_log(const std::filesystem::path& path, const FactorSpace& space) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open run log '" + path.string() + "'");
  return parse_log(in, space);
}

void export_log(std::ostream& out, const RunLog& log) {
  const auto& space = log.space();
  std::vector<std::string> header;
  for (const auto& f : space.factors()) header.push_back(f.name);
  header.insert(header.end(), {"response", "weight", "seed"});
  out << join_csv_line(header) << '\n';
  for (const auto& r : log.records()) {
    std::vector<std::string> cells;
    for (std::size_t j = 0; j < space.dimension(); ++j) cells.push_back(space.factor(j).levels[r.config[j]]);
    cells.push_back(format_number(r.response));
    cells.push_back(format_number(r.weight));
    cells.push_back(std::to_string(r.seed));
    out << join_csv_line(cells) << '\n';
  }
}

ReferenceDistribution ReferenceDistribution::uniform(const FactorSpace& space) {
  ReferenceDistribution p;
  p.kind_ = Kind::uniform;
  for (std::size_t j = 0; j < space.dimension(); ++j)
    p.marginals_.emplace_back(space.levels(j), 1.0 / static_cast<double>(space.levels(j)));
  return p;
}

ReferenceDistribution ReferenceDistribution::product(const FactorSpace& space,
                                                     std::vector<std::vector<double>> marginals) {
  if (marginals.size() != space.dimension())
    throw Error(Errc::invalid_argument, "one marginal per factor is required");
  for (std::size_t j = 0; j < marginals.size(); ++j) {
    if (marginals[j].size() != space.levels(j))
      throw Error(Errc::invalid_argument, "marginal for '" + space.factor(j).name + "' has the wrong length");
    double s = 0.0;
    for (double v : marginals[j]) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::invalid_argument, "marginal probabilities must be >= 0");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw Error(Errc::invalid_argument, "marginal for '" + space.factor(j).name + "' does not sum to 1");
  }
  ReferenceDistribution p;
  p.kind_ = Kind::product;
  p.marginals_ = std::move(marginals);
  return p;
}

namespace {

std::vector<std::vector<double>> weighted_marginals(const RunLog& log) {
  const auto& space = log.space();
  std::vector<std::vector<double>> m(space.dimension());
  for (std::size_t j = 0; j < space.dimension(); ++j) m[j].assign(space.levels(j), 0.0);
  const double total = log.total_weight();
  for (const auto& r : log.records())
    for (std::size_t j = 0; j < space.dimension(); ++j) m[j][r.config[j]] += r.weight / total;
  return m;
}

}  // namespace

ReferenceDistribution ReferenceDistribution::empirical(const RunLog& log) {
  ReferenceDistribution p;
  p.kind_ = Kind::empirical;
  p.marginals_ = weighted_marginals(log);
  std::map<Config, double> mass;
  const double total = log.total_weight();
  for (const auto& r : log.records())
    if (r.weight > 0.0) mass[r.config] += r.weight / total;
  p.atoms_.assign(mass.begin(), mass.end());
  return p;
}

ReferenceDistribution ReferenceDistribution::empirical_marginals(const RunLog& log) {
  ReferenceDistribution p;
  p.kind_ = Kind::product;
  p.marginals_ = weighted_marginals(log);
  return p;
}

Eigen::MatrixXd ReferenceDistribution::joint(std::size_t j, std::size_t k) const {
  const auto& mj = marginals_[j];
  const auto& mk = marginals_[k];
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mj.size()), static_cast<Eigen::Index>(mk.size()));
  if (kind_ == Kind::empirical) {
    for (const auto& [x, w] : atoms_) out(x[j], x[k]) += w;
    return out;
  }
  for (std::size_t l = 0; l < mj.size(); ++l)
    for (std::size_t m = 0; m < mk.size(); ++m) out(l, m) = mj[l] * mk[m];
  return out;
}

double ReferenceDistribution::probability(const Config& x) const {
  if (kind_ == Kind::empirical) {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                               [](const auto& a, const Config& c) { return a.first < c; });
    return (it != atoms_.end() && it->first == x) ? it->second : 0.0;
  }
  double p = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) p *= marginals_[j][x[j]];
  return p;
}

double SupportCounts::pair_count(const FactorSpace& space, std::size_t j, int l, std::size_t k, int m) const {
  const std::size_t p = space.pair_index(j, k);
  return j < k ? pair[p](l, m) : pair[p](m, l);
}

SupportCounts SupportCounts::uniform(const FactorSpace& space, double runs_per_config) {
  SupportCounts s;
  const double g = static_cast<double>(space.grid_size());
  s.records = runs_per_config * g;
  for (std::size_t j = 0; j < space.dimension(); ++j)
    s.level.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(space.levels(j)),
                                                s.records / static_cast<double>(space.levels(j))));
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const double c = s.records / static_cast<double>(space.levels(j) * space.levels(k));
    s.pair.push_back(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(space.levels(j)),
                                               static_cast<Eigen::Index>(space.levels(k)), c));
    s.pair_effective.push_back(s.pair.back());
  }
  return s;
}

SupportCounts support_counts(const RunLog& log) {
  const auto& space = log.space();
  const std::size_t d = space.dimension();
  SupportCounts s;
  s.records = static_cast<double>(log.size());
  for (std::size_t j = 0; j < d; ++j) s.level.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.levels(j))));
  std::vector<Eigen::MatrixXd> wsum, wsq;
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.levels(j)),
                                              static_cast<Eigen::Index>(space.levels(k)));
    s.pair.push_back(z);
    wsum.push_back(z);
    wsq.push_back(z);
  }
  for (const auto& r : log.records()) {
    const Config& x = r.config;
    for (std::size_t j = 0; j < d; ++j) s.level[j](x[j]) += 1.0;
    std::size_t p = 0;
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = j + 1; k < d; ++k, ++p) {
        s.pair[p](x[j], x[k]) += 1.0;
        wsum[p](x[j], x[k]) += r.weight;
        wsq[p](x[j], x[k]) += r.weight * r.weight;
      }
  }
  for (std::size_t p = 0; p < s.pair.size(); ++p) {
    Eigen::MatrixXd eff = Eigen::MatrixXd::Zero(s.pair[p].rows(), s.pair[p].cols());
    for (Eigen::Index a = 0; a < eff.rows(); ++a)
      for (Eigen::Index b = 0; b < eff.cols(); ++b)
        if (wsq[p](a, b) > 0.0) eff(a, b) = wsum[p](a, b) * wsum[p](a, b) / wsq[p](a, b);
    s.pair_effective.push_back(std::move(eff));
  }
  return s;
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::invalid_argument, "weights must be nonnegative");
    s += w;
  }
  if (!(s > 0.0)) throw Error(Errc::invalid_argument, "effective sample size needs a positive weight");
  double sq = 0.0;
  for (double w : weights) {
    const double a = w / s;
    sq += a * a;
  }
  return 1.0 / sq;
}

}  // namespace effectmap
