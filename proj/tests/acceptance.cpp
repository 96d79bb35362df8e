// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers to run a subset.
#include "support.hpp"

#include "effectmap/cli.hpp"
#include "effectmap/cm_effects.hpp"
#include "effectmap/optimizer.hpp"
#include "effectmap/pci.hpp"
#include "effectmap/planner.hpp"
#include "effectmap/serialize.hpp"
#include "effectmap/shapley_fit.hpp"
#include "effectmap/simulation.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

using namespace effectmap;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double n01(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

Outcome exact_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double cm_err = 0.0, sf_err = 0.0, proj_err = 0.0;
  std::size_t spaces = 0;
  for (std::size_t d = 2; d <= 5; ++d)
    for (int rep = 0; rep < 6; ++rep) {
      std::vector<std::size_t> levels(d);
      for (auto& l : levels) l = 2 + uniform_index(rng, 2);
      const FactorSpace s = make_space(levels);
      const EffectTable truth = random_table(s, rng);
      auto f = [&](const Config& x) { return evaluate_second_order(truth, x); };
      const RunLog log = full_grid_log(s, f);
      const auto u = ReferenceDistribution::uniform(s);
      const auto no_shrink = ShrinkageSpec::shared(s, tau_limit, tau_limit);
      const EffectTable cm = estimate_effects_cm(log, u, no_shrink);
      cm_err = std::max(cm_err, max_entry_difference(cm, truth));
      proj_err = std::max(proj_err, max_entry_difference(cm, fanova_projection(s, f)));

      const ValueOracle oracle = ValueOracle::from_function(s, f, u, 10.0);
      std::vector<ShapleyEstimate> est;
      for (const Config& x : all_configs(s)) est.push_back(exact_shapley(oracle, x));
      const SfFit sf = fit_effects_sf(est, s, u, no_shrink, oracle.coalition_value(est.front().point, 0).value);
      sf_err = std::max(sf_err, max_entry_difference(sf.table, truth));
      ++spaces;
    }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {cm_err <= 1e-8 && sf_err <= 1e-8 && proj_err <= 1e-10 && secs < 10.0,
          std::to_string(spaces) + " grids; max err CM " + fmt(cm_err) + ", SF " + fmt(sf_err) + ", projection vs CM " +
              fmt(proj_err) + "; " + fmt(secs) + " s"};
}

Outcome shapley_identities() {
  Rng rng(202);
  double sum_err = 0.0, tele_err = 0.0;
  std::size_t perms = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const FactorSpace s = random_space(rng, 2, 5, 3);
    const EffectTable t = random_table(s, rng);
    for (const Config& x : all_configs(s)) {
      const auto phi = exact_shapley_second_order(t, x);
      const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
      sum_err = std::max(sum_err, std::abs(total - (t.predict(x) - t.mu)));
    }
    const ValueOracle oracle = ValueOracle::from_function(
        s, [&](const Config& x) { return evaluate_second_order(t, x); }, ReferenceDistribution::uniform(s), 10.0);
    const auto grid = all_configs(s);
    for (int k = 0; k < 4; ++k) {
      CoalitionCache cache(oracle, grid[uniform_index(rng, grid.size())]);
      const FactorMask all = (FactorMask{1} << s.dimension()) - 1;
      const double span = cache(all) - cache(0);
      std::vector<std::size_t> order(s.dimension());
      std::iota(order.begin(), order.end(), 0);
      for (int m = 0; m < 25; ++m) {
        std::shuffle(order.begin(), order.end(), rng);
        const auto c = permutation_contributions(cache, order);
        tele_err = std::max(tele_err, std::abs(std::accumulate(c.begin(), c.end(), 0.0) - span));
        ++perms;
      }
    }
  }
  return {sum_err <= 1e-10 && tele_err <= 1e-10, "efficiency err " + fmt(sum_err) + "; telescoping err " +
                                                     fmt(tele_err) + " over " + std::to_string(perms) +
                                                     " permutations"};
}

Outcome mc_concentration() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(303);
  const FactorSpace s = make_space({2, 3, 2, 3});
  EffectTable t = random_table(s, rng);
  double peak = 0.0;
  for (const Config& x : all_configs(s)) peak = std::max(peak, std::abs(evaluate_second_order(t, x)));
  // Scale so that |f| <= 1.
  t.mu /= peak;
  for (auto& m : t.mains) m /= peak;
  for (auto& p : t.pairs) p /= peak;
  const ValueOracle oracle = ValueOracle::from_function(
      s, [&](const Config& x) { return evaluate_second_order(t, x); }, ReferenceDistribution::uniform(s), 1.0);
  const std::uint64_t M = mc_sample_size(1.0, 0.1, 0.05);
  const Config x{1, 2, 0, 1};
  const auto exact = exact_shapley(oracle, x);
  std::size_t misses = 0;
  const std::size_t runs = 500;
  double worst = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    const auto est = mc_shapley(oracle, x, M, stream_seed(303, {streams::shapley, r}));
    double dev = 0.0;
    for (std::size_t j = 0; j < s.dimension(); ++j) dev = std::max(dev, std::abs(est.phi[j] - exact.phi[j]));
    worst = std::max(worst, dev);
    if (dev > 0.1) ++misses;
  }
  const double frac = static_cast<double>(misses) / static_cast<double>(runs);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {M == 2952 && frac <= 0.07 && secs < 120.0, "M=" + std::to_string(M) + "; miss fraction " + fmt(frac) +
                                                          " (worst max-factor deviation " + fmt(worst) + "); " +
                                                          fmt(secs) + " s"};
}

SuiteConfig suite() {
  SuiteConfig c;
  c.trials = 100;
  c.seed = 20240601;
  return c;
}

Outcome table2_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = table2_suite(suite());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double cm_err = find_row(rows, "balanced", "CM", "reconstruction_error").mean;
  const double sf_err = find_row(rows, "balanced", "SF", "reconstruction_error").mean;
  const double cm_rho = find_row(rows, "balanced", "CM", "spearman").mean;
  const double sf_rho = find_row(rows, "balanced", "SF", "spearman").mean;
  return {sf_err <= 0.7 * cm_err && sf_rho >= cm_rho && secs < 300.0,
          "recon SF " + fmt(sf_err) + " vs CM " + fmt(cm_err) + "; rho SF " + fmt(sf_rho) + " vs CM " + fmt(cm_rho) +
              "; " + fmt(secs) + " s"};
}

Outcome effects_order() {
  const auto rows = ablation_suite(AblationAxis::effects_order, suite());
  bool ok = true;
  std::string detail;
  for (const char* e : {"CM", "SF"}) {
    const double pair = find_row(rows, "pairwise", e, "spearman").mean;
    const double mains = find_row(rows, "mains-only", e, "spearman").mean;
    ok = ok && pair - mains >= 0.1;
    detail += std::string(e) + " pairwise " + fmt(pair) + " vs mains-only " + fmt(mains) + "; ";
  }
  return {ok, detail};
}

Outcome design_robustness() {
  const auto rows = ablation_suite(AblationAxis::design_robustness, suite());
  const double sf = find_row(rows, "skewed", "SF", "spearman").mean;
  const double cm = find_row(rows, "skewed", "CM", "spearman").mean;
  return {sf - cm >= 0.1, "skewed rho SF " + fmt(sf) + " vs CM " + fmt(cm)};
}

Outcome seed_budget() {
  const auto rows = ablation_suite(AblationAxis::seed_budget, suite());
  bool ok = true;
  std::string detail;
  for (const char* e : {"CM", "SF"}) {
    const double r16 = find_row(rows, "16", e, "spearman").mean;
    const double r4 = find_row(rows, "4", e, "spearman").mean;
    ok = ok && r16 >= r4;
    detail += std::string(e) + " rho@16 " + fmt(r16) + " vs rho@4 " + fmt(r4) + "; ";
  }
  return {ok, detail};
}

// Random objective over a small space: partial support, risk and cost weights, some bans.
struct Instance {
  EffectTable table;
  SupportCounts support;
  ObjectiveSpec spec;
  CostModel cost;
};

Instance random_instance(Rng& rng, int index) {
  const FactorSpace s = random_space(rng, 2, 6, 4);
  const double pair_sd = index % 3 == 0 ? 0.05 : 0.6;
  Instance in{random_table(s, rng, 1.0, pair_sd), {}, {}, CostModel::zero(s)};
  std::vector<Record> records;
  const auto grid = all_configs(s);
  const std::size_t n = 1 + uniform_index(rng, 2 * grid.size());
  for (std::size_t i = 0; i < n; ++i) records.push_back({grid[uniform_index(rng, grid.size())], 0.0, 1.0, 0});
  in.support = support_counts(RunLog(s, records));
  in.spec.lambda_risk = uniform01(rng);
  in.spec.lambda_cost = 0.5 * uniform01(rng);
  in.spec.default_gamma = 0.5 + uniform01(rng);
  for (std::size_t j = 0; j < s.dimension(); ++j)
    for (auto& c : in.cost.level_costs[j]) c = uniform01(rng);
  if (index % 4 == 1) {
    in.spec.feasibility.banned_levels.resize(s.dimension());
    for (std::size_t j = 0; j < s.dimension(); ++j) {
      in.spec.feasibility.banned_levels[j].assign(s.levels(j), false);
      if (s.levels(j) > 2) in.spec.feasibility.banned_levels[j][uniform_index(rng, s.levels(j))] = true;
    }
  }
  if (index % 4 == 2)
    for (int b = 0; b < 3; ++b) in.spec.feasibility.ban_config(grid[uniform_index(rng, grid.size())]);
  return in;
}

Outcome optimizer_guarantees() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(808);
  std::size_t swap_fail = 0, dominated = 0, global_fail = 0, trace_fail = 0;
  for (int i = 0; i < 200; ++i) {
    const Instance in = random_instance(rng, i);
    const Objective obj(in.table, in.support, in.spec, in.cost);
    SearchSpec search;
    search.seed = static_cast<std::uint64_t>(i);
    search.beam = 1 + uniform_index(rng, 3);
    const SearchResult res = multistart(obj, search);
    for (const auto& tr : res.traces) {
      if (!verify_1swap(obj, tr.final).optimal) ++swap_fail;
      for (std::size_t k = 1; k < tr.steps.size(); ++k)
        if (!(tr.steps[k].value >= tr.steps[k - 1].value)) ++trace_fail;
    }
    const auto dom = diag_dominance_check(obj);
    if (dom.holds) {
      ++dominated;
      if (!(exhaustive_argmax(obj)->config == res.best)) ++global_fail;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {swap_fail == 0 && global_fail == 0 && trace_fail == 0 && dominated > 0 && secs < 60.0,
          "1-swap failures " + std::to_string(swap_fail) + "; dominance held on " + std::to_string(dominated) +
              " instances, non-global " + std::to_string(global_fail) + "; non-monotone steps " +
              std::to_string(trace_fail) + "; " + fmt(secs) + " s"};
}

Outcome near_optimality() {
  Rng rng(909);
  std::normal_distribution<double> n;
  std::size_t violations = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    Instance in = random_instance(rng, i);
    in.spec.feasibility = {};
    EffectTable noisy = in.table;
    const double sd = 0.05 + 0.3 * uniform01(rng);
    noisy.mu += sd * n(rng);
    for (auto& m : noisy.mains)
      for (auto& v : m) v += sd * n(rng);
    for (auto& p : noisy.pairs)
      for (auto& v : p.reshaped()) v += sd * n(rng);
    const Objective truth(in.table, in.support, in.spec, in.cost);
    const Objective est(noisy, in.support, in.spec, in.cost);
    double eps = 0.0;
    for (const Config& x : all_configs(in.table.space))
      eps = std::max(eps, std::abs(est.value(x) - truth.value(x)));
    const Config xhat = exhaustive_argmax(est)->config;
    const double best = exhaustive_argmax(truth)->value;
    const double slack = truth.value(xhat) - (best - near_opt_bound(eps));
    tightest = std::min(tightest, slack);
    if (slack < 0.0) ++violations;
  }
  return {violations == 0, "violations " + std::to_string(violations) + "; smallest slack " + fmt(tightest)};
}

Outcome pci_properties() {
  Rng rng(1010);
  double energy = 0.0, affine = 0.0, shrink = 0.0, separable = 0.0;
  std::size_t range_fail = 0;
  for (int i = 0; i < 100; ++i) {
    const FactorSpace s = random_space(rng, 2, 4, 4);
    const EffectTable t = random_table(s, rng);
    const RunLog log = full_grid_log(s, [&](const Config& x) { return evaluate_second_order(t, x); });
    const auto u = ReferenceDistribution::uniform(s);
    const auto spec = ShrinkageSpec::shared(s, 0.5, 0.5);
    const EffectTable base = estimate_effects_cm(log, u, spec);
    const double a = 0.1 + 5.0 * uniform01(rng), b = 10.0 * (uniform01(rng) - 0.5);
    std::vector<Record> moved = log.records();
    for (auto& r : moved) r.response = a * r.response + b;
    const EffectTable scaled = estimate_effects_cm(RunLog(s, moved), u, spec);
    EffectTable shrunk = base;
    apply_shrinkage(shrunk, SupportCounts::uniform(s, 1.0 + uniform_index(rng, 5)),
                    ShrinkageSpec::shared(s, tau_limit, 0.1 + 3.0 * uniform01(rng)), u);
    for (std::size_t p = 0; p < s.pair_count(); ++p) {
      auto [j, k] = s.pair_factors(p);
      const auto m = pci_matrix(base, j, k);
      const double cells = static_cast<double>(s.levels(j) * s.levels(k));
      energy = std::max(energy, std::abs(m.values.squaredNorm() - cells));
      const double peak = m.values.cwiseAbs().maxCoeff();
      if (peak < 1.0 - 1e-12 || peak > std::sqrt(cells) + 1e-12) ++range_fail;
      affine = std::max(affine, (pci_matrix(scaled, j, k).values - m.values).cwiseAbs().maxCoeff());
      shrink = std::max(shrink, (pci_matrix(shrunk, j, k).values - m.values).cwiseAbs().maxCoeff());
    }
    const std::size_t j = 0, k = 1;
    Eigen::VectorXd uj(static_cast<Eigen::Index>(s.levels(j))), vk(static_cast<Eigen::Index>(s.levels(k)));
    for (auto& v : uj) v = n01(rng);
    for (auto& v : vk) v = n01(rng);
    uj.array() -= uj.mean();
    vk.array() -= vk.mean();
    EffectTable outer = t;
    outer.pairs[s.pair_index(j, k)] = uj * vk.transpose();
    const auto m = pci_matrix(outer, j, k);
    const Eigen::MatrixXd expected = (uj / std::sqrt(uj.squaredNorm() / static_cast<double>(uj.size()))) *
                                     (vk / std::sqrt(vk.squaredNorm() / static_cast<double>(vk.size()))).transpose();
    separable = std::max(separable, (m.values - expected).cwiseAbs().maxCoeff());
  }
  return {energy <= 1e-9 && range_fail == 0 && affine <= 1e-10 && shrink <= 1e-12 && separable <= 1e-10,
          "energy " + fmt(energy) + "; range failures " + std::to_string(range_fail) + "; affine " + fmt(affine) +
              "; shrinkage " + fmt(shrink) + "; separable " + fmt(separable)};
}

Outcome planner_formulas() {
  // Closed forms evaluated independently.
  const auto cell = static_cast<std::uint64_t>(std::ceil(2.0 / 0.01 * std::log(2.0 / 0.05)));
  const auto mc = static_cast<std::uint64_t>(std::ceil(8.0 / 0.01 * std::log(2.0 / 0.05)));
  const auto cells = static_cast<std::uint64_t>(std::ceil(2.0 / 0.01 * std::log(2.0 * 9.0 / 0.05)));
  const auto a = hoeffding_cell_n(1, 0.1, 0.05);
  const auto b = mc_sample_size(1, 0.1, 0.05);
  const auto c = uniform_cells_n(1, 0.1, 0.05, 3, 3);
  return {a == 738 && b == 2952 && c == 1178 && a == cell && b == mc && c == cells,
          "cell " + std::to_string(a) + ", mc " + std::to_string(b) + ", uniform cells " + std::to_string(c)};
}

struct ReferenceTable {
  std::string name;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> factors;
};

std::vector<ReferenceTable> reference_tables() {
  return {
      {"concrete",
       {{"batch_size", {{"64", "-8.7206"}, {"256", "-10.9667"}}},
        {"epochs", {{"150", "-8.7114"}, {"50", "-10.9758"}}},
        {"learning_rate", {{"high", "-7.7583"}, {"mid", "-9.3441"}, {"low", "-12.4283"}}},
        {"optimizer", {{"Adam", "-8.5782"}, {"SGD", "-11.1091"}}},
        {"l2", {{"0.0000", "-9.8431"}, {"0.0010", "-9.8441"}}}}},
      {"car",
       {{"batch_size", {{"64", "0.8902"}, {"256", "0.7986"}}},
        {"epochs", {{"150", "0.8878"}, {"50", "0.8009"}}},
        {"learning_rate", {{"high", "0.9227"}, {"mid", "0.8632"}, {"low", "0.7472"}}},
        {"optimizer", {{"Adam", "0.9006"}, {"SGD", "0.7881"}}},
        {"l2", {{"0.0000", "0.8444"}, {"0.0010", "0.8443"}}}}},
      {"fmnist",
       {{"batch_size", {{"64", "0.8872"}, {"256", "0.8811"}}},
        {"epochs", {{"30", "0.8869"}, {"15", "0.8813"}}},
        {"learning_rate", {{"high", "0.8866"}, {"mid", "0.8851"}, {"low", "0.8806"}}},
        {"optimizer", {{"Adam", "0.8892"}, {"SGD", "0.8790"}}},
        {"l2", {{"0.0000", "0.8842"}, {"0.0001", "0.8841"}}}}},
  };
}

Outcome benchmark_fixtures() {
  const fs::path root = fs::temp_directory_path() / ("effectmap_fixtures_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::size_t checked = 0, mismatched = 0;
  std::string first_bad;
  for (const auto& table : reference_tables()) {
    std::vector<Factor> factors;
    for (const auto& [name, levels] : table.factors) {
      Factor f{name, {}};
      for (const auto& [label, mean] : levels) f.levels.push_back(label);
      factors.push_back(std::move(f));
    }
    const FactorSpace s(factors);
    write_file_atomic(root / (table.name + "_space.json"), dump_json(space_to_json(s)));
    for (std::size_t j = 0; j < s.dimension(); ++j) {
      // Every record carries the published mean of its level of factor j.
      std::vector<double> means;
      for (const auto& [label, mean] : table.factors[j].second) means.push_back(*parse_double(mean));
      const RunLog log = full_grid_log(s, [&](const Config& x) { return means[static_cast<std::size_t>(x[j])]; });
      std::ostringstream csv;
      export_log(csv, log);
      const std::string stem = table.name + "_" + s.factor(j).name;
      write_file_atomic(root / (stem + ".csv"), csv.str());
      const fs::path out = root / stem;
      const int code = cli::run({"effectmap", "estimate", "--space", (root / (table.name + "_space.json")).string(),
                                 "--log", (root / (stem + ".csv")).string(), "--out", out.string(), "--seed", "1"});
      if (code != 0) {
        ++mismatched;
        first_bad = stem + " exited " + std::to_string(code);
        continue;
      }
      std::istringstream emitted(read_text_file(out / "main_effects.csv"));
      std::string line;
      while (std::getline(emitted, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("factor,", 0) == 0) continue;
        const auto cells = split_csv_line(line);
        if (cells[0] != s.factor(j).name) continue;
        const auto level = s.find_level(j, cells[1]);
        const double got = *parse_double(cells[2]);
        const double want = means[static_cast<std::size_t>(*level)];
        ++checked;
        if (std::bit_cast<std::uint64_t>(got) != std::bit_cast<std::uint64_t>(want)) {
          ++mismatched;
          if (first_bad.empty()) first_bad = stem + "/" + cells[1] + " " + cells[2];
        }
      }
    }
  }
  fs::remove_all(root);
  return {checked == 33 && mismatched == 0, std::to_string(checked) + " level means checked, " +
                                                 std::to_string(mismatched) + " mismatched" +
                                                 (first_bad.empty() ? "" : " (" + first_bad + ")")};
}

Outcome ls_stability() {
  Rng rng(1313);
  std::normal_distribution<double> n;
  std::size_t violations = 0, draws = 0;
  double worst_ratio = 0.0;
  for (int inst = 0; inst < 5; ++inst) {
    const FactorSpace s = random_space(rng, 3, 4, 3);
    const EffectTable t = random_table(s, rng);
    const auto u = ReferenceDistribution::uniform(s);
    const ValueOracle oracle = ValueOracle::from_function(
        s, [&](const Config& x) { return evaluate_second_order(t, x); }, u, 10.0);
    auto grid = all_configs(s);
    std::shuffle(grid.begin(), grid.end(), rng);
    // Smallest prefix of a shuffled grid that identifies every block.
    std::optional<EffectDesignMatrix> matrix;
    std::vector<Config> points;
    for (const auto& x : grid) {
      points.push_back(x);
      try {
        matrix = build_design_matrix(points, s, u);
        break;
      } catch (const RankDeficientError&) {
      }
    }
    std::vector<ShapleyEstimate> exact;
    for (const auto& x : matrix->points) exact.push_back(exact_shapley(oracle, x));
    const Eigen::VectorXd theta = matrix->encode(t);
    const auto spec = ShrinkageSpec::shared(s, tau_limit, tau_limit);
    for (int k = 0; k < 100; ++k) {
      auto noisy = exact;
      double sq = 0.0;
      const double sd = 0.01 + 0.5 * uniform01(rng);
      for (auto& e : noisy)
        for (auto& v : e.phi) {
          const double z = sd * n(rng);
          v += z;
          sq += z * z;
        }
      const SfFit fit = fit_effects_sf(noisy, s, u, spec, t.mu);
      const double err = (matrix->encode(fit.table) - theta).norm();
      const double bound = stability_bound(*matrix, std::sqrt(sq));
      worst_ratio = std::max(worst_ratio, err / bound);
      if (err > bound * (1.0 + 1e-12)) ++violations;
      ++draws;
    }
  }
  return {violations == 0, std::to_string(draws) + " draws; violations " + std::to_string(violations) +
                               "; max error/bound " + fmt(worst_ratio)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, exact_recovery},       {2, shapley_identities}, {3, mc_concentration}, {4, table2_direction},
      {5, effects_order},        {6, design_robustness},  {7, seed_budget},      {8, optimizer_guarantees},
      {9, near_optimality},      {10, pci_properties},    {11, planner_formulas}, {12, benchmark_fixtures},
      {13, ls_stability},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")" << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
