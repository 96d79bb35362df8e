#include "effectmap/simulation.hpp"

#include "effectmap/cm_effects.hpp"
#include "effectmap/error.hpp"
#include "effectmap/rng.hpp"
#include "effectmap/serialize.hpp"
#include "effectmap/shapley_fit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace effectmap {

FactorSpace alternating_space(std::size_t d) {
  std::vector<Factor> factors;
  for (std::size_t j = 0; j < d; ++j) {
    Factor f;
    f.name = "f" + std::to_string(j + 1);
    const std::size_t L = j % 2 == 0 ? 2 : 3;
    for (std::size_t l = 0; l < L; ++l) f.levels.push_back("l" + std::to_string(l));
    factors.push_back(std::move(f));
  }
  return FactorSpace(std::move(factors));
}

void TeacherSpec::validate() const {
  if (!(main_scale >= 0.0) || !(pair_scale >= 0.0) || !(residual_scale >= 0.0) || !(noise_sd >= 0.0))
    throw Error(Errc::invalid_argument, "teacher scales must be nonnegative");
  if (space.dimension() == 0) throw Error(Errc::invalid_argument, "teacher needs a factor space");
}

Teacher::Teacher(TeacherSpec spec, EffectTable truth, std::array<std::size_t, 3> triple, std::vector<double> residual)
    : spec_(std::move(spec)), truth_(std::move(truth)), triple_(triple), residual_(std::move(residual)) {
  bound_ = std::abs(truth_.mu);
  for (const auto& g : truth_.mains) bound_ += g.cwiseAbs().maxCoeff();
  for (const auto& g : truth_.pairs) bound_ += g.cwiseAbs().maxCoeff();
  double r = 0.0;
  for (double v : residual_) r = std::max(r, std::abs(v));
  bound_ += r;
}

double Teacher::residual(const Config& x) const {
  if (residual_.empty()) return 0.0;
  const auto& sp = truth_.space;
  const std::size_t a = triple_[0], b = triple_[1], c = triple_[2];
  return residual_[(static_cast<std::size_t>(x[a]) * sp.levels(b) + x[b]) * sp.levels(c) + x[c]];
}

namespace {

double rms(const Eigen::MatrixXd& m) { return std::sqrt(m.squaredNorm() / static_cast<double>(m.size())); }

void rescale(Eigen::MatrixXd& m, double target) {
  const double s = rms(m);
  if (s > 0.0) m *= target / s;
}

}  // namespace

Teacher gen_teacher(const TeacherSpec& spec) {
  spec.validate();
  const FactorSpace& space = spec.space;
  const std::size_t d = space.dimension();
  Rng rng = make_rng(spec.seed, {streams::teacher});
  std::normal_distribution<double> normal(0.0, 1.0);
  const ReferenceDistribution uniform = ReferenceDistribution::uniform(space);

  EffectTable truth(space, Provenance::truth);
  truth.mu = normal(rng);
  for (std::size_t j = 0; j < d; ++j) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(space.levels(j)), 1);
    for (Eigen::Index l = 0; l < g.rows(); ++l) g(l, 0) = normal(rng);
    g.col(0) = center_vector(g.col(0), uniform.marginal(j));
    rescale(g, spec.main_scale);
    truth.mains[j] = g.col(0);
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    Eigen::MatrixXd g(static_cast<Eigen::Index>(space.levels(j)), static_cast<Eigen::Index>(space.levels(k)));
    for (Eigen::Index a = 0; a < g.rows(); ++a)
      for (Eigen::Index b = 0; b < g.cols(); ++b) g(a, b) = normal(rng);
    g = double_center(g, uniform.joint(j, k), true);
    rescale(g, spec.pair_scale);
    truth.pairs[p] = g;
  }

  std::array<std::size_t, 3> triple{0, 0, 0};
  std::vector<double> residual;
  if (d >= 3 && spec.residual_scale > 0.0) {
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::sort(idx.begin(), idx.begin() + 3);
    triple = {idx[0], idx[1], idx[2]};
    const std::size_t La = space.levels(triple[0]), Lb = space.levels(triple[1]), Lc = space.levels(triple[2]);
    std::vector<double> h(La * Lb * Lc);
    for (double& v : h) v = normal(rng);
    auto at = [&](std::size_t a, std::size_t b, std::size_t c) -> double& { return h[(a * Lb + b) * Lc + c]; };
    // Remove every lower-order component so the residual is orthogonal to the two-factor tables.
    for (int axis = 0; axis < 3; ++axis) {
      for (std::size_t a = 0; a < La; ++a)
        for (std::size_t b = 0; b < Lb; ++b)
          for (std::size_t c = 0; c < Lc; ++c) {
            if (axis == 0 && a != 0) continue;
            if (axis == 1 && b != 0) continue;
            if (axis == 2 && c != 0) continue;
            const std::size_t n = axis == 0 ? La : axis == 1 ? Lb : Lc;
            double mean = 0.0;
            for (std::size_t t = 0; t < n; ++t)
              mean += axis == 0 ? at(t, b, c) : axis == 1 ? at(a, t, c) : at(a, b, t);
            mean /= static_cast<double>(n);
            for (std::size_t t = 0; t < n; ++t) (axis == 0 ? at(t, b, c) : axis == 1 ? at(a, t, c) : at(a, b, t)) -= mean;
          }
    }
    double ss = 0.0;
    for (double v : h) ss += v * v;
    const double s = std::sqrt(ss / static_cast<double>(h.size()));
    if (s > 0.0)
      for (double& v : h) v *= spec.residual_scale / s;
    residual = std::move(h);
  }
  return Teacher(spec, std::move(truth), triple, std::move(residual));
}

std::string_view estimator_name(Estimator e) { return e == Estimator::cm ? "CM" : "SF"; }

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::invalid_argument, "spearman inputs differ in length");
  if (a.size() < 2) throw Error(Errc::invalid_argument, "spearman needs at least two values");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(Errc::undefined, "spearman correlation is undefined for constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

// Replicate noise for the occ-th appearance of a config; draws are nested across seed budgets.
std::vector<double> replicate_noise(const FactorSpace& space, const Config& x, std::uint64_t occurrence,
                                    std::size_t replicates, double sd, std::uint64_t seed) {
  Rng rng = make_rng(seed, {streams::noise, space.rank(x), occurrence});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(replicates);
  for (double& e : out) e = sd * normal(rng);
  return out;
}

}  // namespace

TrialResult run_trial(const Teacher& teacher, const TrialConfig& config) {
  const FactorSpace& space = teacher.space();
  const double sd = teacher.spec().noise_sd;
  const std::size_t S = config.seeds_per_point;
  if (S < 1) throw Error(Errc::invalid_argument, "at least one seed per point is required");

  const auto design = sample_design(space, config.design, stream_seed(config.seed, {streams::design}));
  std::vector<Record> records;
  std::map<Config, std::uint64_t> occurrences;
  for (const Config& x : design) {
    const auto noise = replicate_noise(space, x, occurrences[x]++, S, sd, config.seed);
    const double fx = teacher(x);
    for (std::size_t r = 0; r < S; ++r) records.push_back({x, fx + noise[r], 1.0, static_cast<std::int64_t>(r)});
  }
  const RunLog log(space, std::move(records));
  const ReferenceDistribution uniform = ReferenceDistribution::uniform(space);
  const ShrinkageSpec shrinkage = ShrinkageSpec::shared(space, config.tau, config.tau);

  TrialResult result;
  result.estimator = config.estimator;
  SupportCounts support;
  if (config.estimator == Estimator::cm) {
    result.table = estimate_effects_cm(log, uniform, shrinkage);
    support = support_counts(log);
  } else {
    const auto grid = enumerate_grid(space);
    std::vector<double> observed(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto noise = replicate_noise(space, grid[i], 0, S, sd, config.seed);
      WeightedMean acc;
      for (double e : noise) acc.add(teacher(grid[i]) + e, 1.0);
      observed[i] = acc.value();
    }
    ReferenceDistribution background =
        config.background == Background::uniform ? uniform : ReferenceDistribution::empirical_marginals(log);
    const ValueOracle oracle = ValueOracle::from_function(
        space, [&observed, &space](const Config& x) { return observed[space.rank(x)]; }, background,
        teacher.bound() + 4.0 * sd);
    std::vector<Config> points(design.begin(), design.end());
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    std::vector<ShapleyEstimate> estimates;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (config.shapley_samples == 0)
        estimates.push_back(exact_shapley(oracle, points[i]));
      else
        estimates.push_back(mc_shapley(oracle, points[i], config.shapley_samples,
                                       stream_seed(config.seed, {streams::shapley, space.rank(points[i])})));
    }
    const double baseline = oracle.coalition_value(points.front(), 0).value;
    support = SupportCounts::uniform(space, static_cast<double>(S));
    SfFitOptions options;
    options.ridge = config.ridge;
    options.support = support;
    SfFit fit = fit_effects_sf(estimates, space, background, shrinkage, baseline, options);
    result.table = std::move(fit.table);
    result.sigma_min = fit.diagnostics.sigma_min;
    result.residual_norm = fit.diagnostics.residual_norm;
  }
  if (config.mains_only) result.table.zero_pairs();
  result.reconstruction_error = rms_entry_difference(result.table, teacher.truth());

  const CostModel cost = CostModel::zero(space);
  const Objective objective(result.table, support, config.objective, cost);
  SearchSpec search = config.search;
  search.seed = stream_seed(config.seed, {streams::restart});
  result.chosen = multistart(objective, search).best;

  std::vector<double> estimated, truth;
  double best = -std::numeric_limits<double>::infinity();
  for_each_config(space, [&](const Config& x) {
    if (!objective.feasible(x)) return;
    const double fx = teacher(x);
    estimated.push_back(objective.value_unchecked(x));
    truth.push_back(fx);
    if (fx > best) {
      best = fx;
      result.optimum = x;
    }
  });
  result.optimality_gap = best - teacher(result.chosen);
  try {
    result.spearman = spearman(estimated, truth);
  } catch (const Error& e) {
    if (e.code() != Errc::undefined) throw;
    result.spearman = 0.0;
  }
  return result;
}

std::string_view axis_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::effects_order: return "effects-order";
    case AblationAxis::design_robustness: return "design-robustness";
    case AblationAxis::shap_background: return "shap-background";
    case AblationAxis::seed_budget: return "seed-budget";
  }
  return "unknown";
}

AblationAxis parse_axis(std::string_view name) {
  for (auto a : {AblationAxis::effects_order, AblationAxis::design_robustness, AblationAxis::shap_background,
                 AblationAxis::seed_budget})
    if (axis_name(a) == name) return a;
  throw Error(Errc::invalid_argument, "unknown ablation axis '" + std::string(name) + "'");
}

nlohmann::json SuiteConfig::to_json() const {
  nlohmann::json j;
  j["teacher"] = {{"space", space_to_json(teacher.space)},
                  {"main_scale", teacher.main_scale},
                  {"pair_scale", teacher.pair_scale},
                  {"residual_scale", teacher.residual_scale},
                  {"noise_sd", teacher.noise_sd}};
  j["trials"] = trials;
  j["seed"] = seed;
  j["balanced_n"] = balanced_n;
  j["small_n"] = small_n;
  j["skew_bias"] = skew_bias;
  j["seeds_per_point"] = seeds_per_point;
  j["seed_budgets"] = seed_budgets;
  j["effects_order_seeds"] = effects_order_seeds;
  j["tau"] = tau;
  j["shapley_samples"] = shapley_samples;
  j["ridge"] = ridge;
  j["restarts"] = restarts;
  j["ci_resamples"] = ci_resamples;
  j["ci_level"] = ci_level;
  return j;
}

SuiteConfig SuiteConfig::from_json(const nlohmann::json& doc) {
  SuiteConfig c;
  try {
    if (doc.contains("teacher")) {
      const auto& t = doc.at("teacher");
      if (t.contains("space")) c.teacher.space = space_from_json(t.at("space"));
      c.teacher.main_scale = t.value("main_scale", c.teacher.main_scale);
      c.teacher.pair_scale = t.value("pair_scale", c.teacher.pair_scale);
      c.teacher.residual_scale = t.value("residual_scale", c.teacher.residual_scale);
      c.teacher.noise_sd = t.value("noise_sd", c.teacher.noise_sd);
    }
    c.trials = doc.value("trials", c.trials);
    c.seed = doc.value("seed", c.seed);
    c.balanced_n = doc.value("balanced_n", c.balanced_n);
    c.small_n = doc.value("small_n", c.small_n);
    c.skew_bias = doc.value("skew_bias", c.skew_bias);
    c.seeds_per_point = doc.value("seeds_per_point", c.seeds_per_point);
    c.seed_budgets = doc.value("seed_budgets", c.seed_budgets);
    c.effects_order_seeds = doc.value("effects_order_seeds", c.effects_order_seeds);
    c.tau = doc.value("tau", c.tau);
    c.shapley_samples = doc.value("shapley_samples", c.shapley_samples);
    c.ridge = doc.value("ridge", c.ridge);
    c.restarts = doc.value("restarts", c.restarts);
    c.ci_resamples = doc.value("ci_resamples", c.ci_resamples);
    c.ci_level = doc.value("ci_level", c.ci_level);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("invalid suite config: ") + e.what());
  }
  c.teacher.validate();
  if (c.trials < 1) throw Error(Errc::invalid_argument, "suite needs at least one trial");
  return c;
}

std::string SuiteConfig::hash() const { return sha256_hex(dump_json(to_json(), -1)).substr(0, 16); }

MeanInterval mean_interval(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed) {
  if (values.empty()) throw Error(Errc::invalid_argument, "no values to summarize");
  MeanInterval out;
  const std::size_t n = values.size();
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  if (resamples == 0) {
    out.lo = out.hi = out.mean;
    return out;
  }
  Rng rng = make_rng(seed, {streams::bootstrap});
  std::vector<double> means(resamples);
  for (double& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[uniform_index(rng, n)];
    m = s / static_cast<double>(n);
  }
  out.lo = quantile(means, (1.0 - level) / 2.0);
  out.hi = quantile(std::move(means), (1.0 + level) / 2.0);
  return out;
}

namespace {

struct Cell {
  std::string label;
  TrialConfig trial;
};

std::vector<SuiteRow> run_cells(std::string_view axis, const std::vector<Cell>& cells, const SuiteConfig& config) {
  const std::string hash = config.hash();
  std::vector<std::vector<TrialResult>> results(cells.size());
  for (std::size_t t = 0; t < config.trials; ++t) {
    TeacherSpec spec = config.teacher;
    spec.seed = stream_seed(config.seed, {streams::teacher, t});
    const Teacher teacher = gen_teacher(spec);
    const std::uint64_t trial_seed = stream_seed(config.seed, {streams::trial, t});
    for (std::size_t c = 0; c < cells.size(); ++c) {
      TrialConfig tc = cells[c].trial;
      tc.seed = trial_seed;
      results[c].push_back(run_trial(teacher, tc));
    }
  }
  std::vector<SuiteRow> rows;
  std::uint64_t row_index = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& rs = results[c];
    const std::pair<const char*, double TrialResult::*> metrics[] = {
        {"reconstruction_error", &TrialResult::reconstruction_error},
        {"optimality_gap", &TrialResult::optimality_gap},
        {"spearman", &TrialResult::spearman}};
    for (const auto& [name, member] : metrics) {
      std::vector<double> v;
      for (const auto& r : rs) v.push_back(r.*member);
      const auto mi = mean_interval(v, config.ci_resamples, config.ci_level, stream_seed(config.seed, {row_index++}));
      rows.push_back({std::string(axis), cells[c].label, std::string(estimator_name(cells[c].trial.estimator)), name,
                      mi.mean, mi.lo, mi.hi, rs.size(), hash});
    }
  }
  return rows;
}

TrialConfig base_trial(const SuiteConfig& config, Estimator estimator) {
  TrialConfig t;
  t.estimator = estimator;
  t.seeds_per_point = config.seeds_per_point;
  t.tau = config.tau;
  t.shapley_samples = config.shapley_samples;
  t.ridge = config.ridge;
  t.search.restarts = config.restarts;
  return t;
}

}  // namespace

std::vector<SuiteRow> table2_suite(const SuiteConfig& config) {
  std::vector<Cell> cells;
  for (Estimator e : {Estimator::cm, Estimator::sf}) {
    TrialConfig t = base_trial(config, e);
    t.design = DesignPlan::balanced(config.balanced_n);
    cells.push_back({"balanced", t});
  }
  return run_cells("table2", cells, config);
}

std::vector<SuiteRow> ablation_suite(AblationAxis axis, const SuiteConfig& config) {
  std::vector<Cell> cells;
  switch (axis) {
    case AblationAxis::effects_order:
      for (bool mains_only : {false, true})
        for (Estimator e : {Estimator::cm, Estimator::sf}) {
          TrialConfig t = base_trial(config, e);
          t.design = DesignPlan::full();
          t.seeds_per_point = config.effects_order_seeds;
          t.mains_only = mains_only;
          cells.push_back({mains_only ? "mains-only" : "pairwise", t});
        }
      break;
    case AblationAxis::design_robustness:
      for (bool skewed : {false, true})
        for (Estimator e : {Estimator::cm, Estimator::sf}) {
          TrialConfig t = base_trial(config, e);
          t.design = skewed ? DesignPlan::skewed(config.small_n, config.skew_bias) : DesignPlan::balanced(config.small_n);
          cells.push_back({skewed ? "skewed" : "balanced", t});
        }
      break;
    case AblationAxis::shap_background: {
      for (Background b : {Background::uniform, Background::empirical}) {
        TrialConfig t = base_trial(config, Estimator::sf);
        t.design = DesignPlan::balanced(config.small_n);
        t.background = b;
        cells.push_back({b == Background::uniform ? "uniform" : "empirical", t});
      }
      TrialConfig t = base_trial(config, Estimator::cm);
      t.design = DesignPlan::balanced(config.small_n);
      cells.push_back({"cm-reference", t});
      break;
    }
    case AblationAxis::seed_budget:
      for (std::size_t s : config.seed_budgets)
        for (Estimator e : {Estimator::cm, Estimator::sf}) {
          TrialConfig t = base_trial(config, e);
          t.design = DesignPlan::full();
          t.seeds_per_point = s;
          cells.push_back({std::to_string(s), t});
        }
      break;
  }
  return run_cells(axis_name(axis), cells, config);
}

const SuiteRow& find_row(const std::vector<SuiteRow>& rows, std::string_view cell, std::string_view estimator,
                         std::string_view metric) {
  for (const auto& r : rows)
    if (r.cell == cell && r.estimator == estimator && r.metric == metric) return r;
  throw Error(Errc::invalid_argument, "no result row for " + std::string(cell) + "/" + std::string(estimator) + "/" +
                                          std::string(metric));
}

}  // namespace effectmap
