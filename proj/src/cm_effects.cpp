#include "effectmap/cm_effects.hpp"

#include "effectmap/error.hpp"
#include "effectmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace effectmap {

ShrinkageSpec ShrinkageSpec::shared(const FactorSpace& space, double tau_main, double tau_pair) {
  ShrinkageSpec s;
  s.tau_main.assign(space.dimension(), tau_main);
  s.tau_pair.assign(space.pair_count(), tau_pair);
  s.validate(space);
  return s;
}

void ShrinkageSpec::validate(const FactorSpace& space) const {
  if (tau_main.size() != space.dimension() || tau_pair.size() != space.pair_count())
    throw Error(Errc::invalid_argument, "shrinkage strengths do not match the factor space");
  for (double t : tau_main)
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(Errc::invalid_argument, "shrinkage strengths must be positive");
  for (double t : tau_pair)
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(Errc::invalid_argument, "shrinkage strengths must be positive");
}

double shrinkage_factor(double count, double tau) { return count > 0.0 ? count / (count + tau) : 0.0; }

void WeightedMean::add(double value, double weight) {
  if (!(weight > 0.0)) return;
  if (!anchored_) {
    shift_ = value;
    anchored_ = true;
  }
  sum_ += weight * (value - shift_);
  weight_ += weight;
}

double weighted_baseline(const RunLog& log) {
  WeightedMean acc;
  for (const auto& r : log.records()) acc.add(r.response, r.weight);
  if (acc.empty()) throw Error(Errc::empty_log, "total weight is zero");
  return acc.value();
}

std::optional<double> conditional_mean(const RunLog& log, std::size_t j, int l) {
  WeightedMean acc;
  for (const auto& r : log.records())
    if (r.config[j] == l) acc.add(r.response, r.weight);
  if (acc.empty()) return std::nullopt;
  return acc.value();
}

std::optional<double> conditional_mean(const RunLog& log, std::size_t j, int l, std::size_t k, int m) {
  WeightedMean acc;
  for (const auto& r : log.records())
    if (r.config[j] == l && r.config[k] == m) acc.add(r.response, r.weight);
  if (acc.empty()) return std::nullopt;
  return acc.value();
}

EffectTable raw_effects_cm(const RunLog& log, const ReferenceDistribution& reference) {
  const FactorSpace& space = log.space();
  const std::size_t d = space.dimension();
  if (reference.dimension() != d) throw Error(Errc::invalid_argument, "reference does not match the factor space");

  WeightedMean overall;
  std::vector<std::vector<WeightedMean>> level_acc(d);
  for (std::size_t j = 0; j < d; ++j) level_acc[j].resize(space.levels(j));
  std::vector<std::vector<WeightedMean>> cell_acc(space.pair_count());
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    cell_acc[p].resize(space.levels(j) * space.levels(k));
  }
  for (const auto& r : log.records()) {
    const Config& x = r.config;
    overall.add(r.response, r.weight);
    for (std::size_t j = 0; j < d; ++j) level_acc[j][x[j]].add(r.response, r.weight);
    std::size_t p = 0;
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = j + 1; k < d; ++k, ++p)
        cell_acc[p][static_cast<std::size_t>(x[j]) * space.levels(k) + x[k]].add(r.response, r.weight);
  }
  if (overall.empty()) throw Error(Errc::empty_log, "total weight is zero");

  EffectTable t(space, Provenance::cm);
  t.mu = overall.value();
  for (std::size_t j = 0; j < d; ++j) {
    t.level_means.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(space.levels(j)),
                                                      std::numeric_limits<double>::quiet_NaN()));
    for (std::size_t l = 0; l < space.levels(j); ++l) {
      if (level_acc[j][l].empty()) {
        t.main_unsupported[j][l] = true;
        continue;
      }
      t.level_means[j](l) = level_acc[j][l].value();
      t.mains[j](l) = t.level_means[j](l) - t.mu;
    }
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    for (std::size_t l = 0; l < space.levels(j); ++l)
      for (std::size_t m = 0; m < space.levels(k); ++m) {
        const auto& acc = cell_acc[p][l * space.levels(k) + m];
        if (acc.empty()) {
          t.pair_unsupported[p](l, m) = 1;
          continue;
        }
        t.pairs[p](l, m) = acc.value() - t.level_means[j](l) - t.level_means[k](m) + t.mu;
      }
  }
  center_table(t, reference);
  return t;
}

void apply_shrinkage(EffectTable& table, const SupportCounts& support, const ShrinkageSpec& shrinkage,
                     const ReferenceDistribution& reference) {
  const FactorSpace& space = table.space;
  shrinkage.validate(space);
  for (std::size_t j = 0; j < space.dimension(); ++j)
    for (std::size_t l = 0; l < space.levels(j); ++l) {
      const double eta = table.main_unsupported[j][l] ? 0.0 : shrinkage_factor(support.level[j](l), shrinkage.tau_main[j]);
      table.mains[j](l) *= eta;
    }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto& g = table.pairs[p];
    for (Eigen::Index a = 0; a < g.rows(); ++a)
      for (Eigen::Index b = 0; b < g.cols(); ++b) {
        const double eta =
            table.pair_unsupported[p](a, b) ? 0.0 : shrinkage_factor(support.pair[p](a, b), shrinkage.tau_pair[p]);
        g(a, b) *= eta;
      }
  }
  center_table(table, reference);
  table.support = support;
}

EffectTable estimate_effects_cm(const RunLog& log, const ReferenceDistribution& reference,
                                const ShrinkageSpec& shrinkage) {
  EffectTable t = raw_effects_cm(log, reference);
  apply_shrinkage(t, support_counts(log), shrinkage, reference);
  return t;
}

std::vector<EffectTable> bootstrap_replicates(const RunLog& log, const ReferenceDistribution& reference,
                                              const ShrinkageSpec& shrinkage, std::size_t replicates,
                                              std::uint64_t seed) {
  const auto& records = log.records();
  const std::size_t n = records.size();
  std::vector<EffectTable> out;
  out.reserve(replicates);
  for (std::size_t b = 0; b < replicates; ++b) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng = make_rng(seed, {streams::bootstrap, b, attempt});
      std::vector<Record> sample;
      sample.reserve(n);
      bool positive = false;
      for (std::size_t i = 0; i < n; ++i) {
        sample.push_back(records[uniform_index(rng, n)]);
        positive = positive || sample.back().weight > 0.0;
      }
      if (!positive) continue;
      out.push_back(estimate_effects_cm(RunLog(log.space(), std::move(sample)), reference, shrinkage));
      break;
    }
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

Interval summarize(std::vector<double> values, double level) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  Interval iv;
  if (values.empty()) {
    iv.lo = iv.hi = iv.se = std::numeric_limits<double>::quiet_NaN();
    return iv;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  iv.se = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  iv.lo = quantile(values, (1.0 - level) / 2.0);
  iv.hi = quantile(std::move(values), (1.0 + level) / 2.0);
  return iv;
}

}  // namespace

EffectTable bootstrap_cis(const RunLog& log, const ReferenceDistribution& reference, const ShrinkageSpec& shrinkage,
                          std::size_t replicates, double level, std::uint64_t seed) {
  if (replicates < 100) throw Error(Errc::invalid_argument, "bootstrap needs at least 100 replicates");
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::invalid_argument, "coverage level must lie in (0,1)");
  EffectTable t = estimate_effects_cm(log, reference, shrinkage);
  const auto reps = bootstrap_replicates(log, reference, shrinkage, replicates, seed);
  const FactorSpace& space = t.space;

  EffectIntervals ci;
  ci.level = level;
  ci.replicates = replicates;
  auto collect = [&](auto&& get) {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& r : reps) v.push_back(get(r));
    return summarize(std::move(v), level);
  };
  ci.mu = collect([](const EffectTable& r) { return r.mu; });
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    ci.mains.emplace_back();
    ci.level_means.emplace_back();
    for (std::size_t l = 0; l < space.levels(j); ++l) {
      ci.mains[j].push_back(collect([&](const EffectTable& r) { return r.mains[j](l); }));
      ci.level_means[j].push_back(collect([&](const EffectTable& r) { return r.level_means[j](l); }));
    }
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    ci.pairs.emplace_back();
    const auto& g = t.pairs[p];
    for (Eigen::Index a = 0; a < g.rows(); ++a)
      for (Eigen::Index b = 0; b < g.cols(); ++b)
        ci.pairs[p].push_back(collect([&](const EffectTable& r) { return r.pairs[p](a, b); }));
  }
  t.intervals = std::move(ci);
  return t;
}

double shrinkage_risk(double eta, double variance, double effect) {
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(Errc::invalid_argument, "eta must lie in (0,1]");
  if (!(variance >= 0.0)) throw Error(Errc::invalid_argument, "variance must be nonnegative");
  return eta * eta * variance + (1.0 - eta) * (1.0 - eta) * effect * effect;
}

}  // namespace effectmap
