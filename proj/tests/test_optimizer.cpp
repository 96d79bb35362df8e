#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "effectmap/error.hpp"
#include "effectmap/optimizer.hpp"

using namespace effectmap;
using namespace testsupport;

TEST_CASE("coordinate ascent traces are monotone and end 1-swap optimal") {
  Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const FactorSpace s = random_space(rng, 2, 5, 4);
    const EffectTable t = random_table(s, rng, 1.0, 1.0);
    const SupportCounts support = SupportCounts::uniform(s, 1.0);
    ObjectiveSpec spec;
    spec.lambda_risk = 0.2;
    const CostModel cost = CostModel::zero(s);
    const Objective obj(t, support, spec, cost);
    SearchSpec search;
    search.seed = static_cast<std::uint64_t>(rep);
    const auto result = multistart(obj, search);
    for (const auto& tr : result.traces)
      for (std::size_t i = 1; i < tr.steps.size(); ++i) CHECK(tr.steps[i].value > tr.steps[i - 1].value);
    CHECK(verify_1swap(obj, result.best).optimal);
    CHECK(result.value == doctest::Approx(obj.value(result.best)));
    const auto best = exhaustive_argmax(obj);
    REQUIRE(best);
    CHECK(result.value <= best->value + 1e-12);
  }
}

TEST_CASE("multistart is deterministic per seed") {
  Rng rng(2);
  const FactorSpace s = make_space({3, 3, 3, 3});
  const EffectTable t = random_table(s, rng, 1.0, 2.0);
  const SupportCounts support = SupportCounts::uniform(s, 1.0);
  const ObjectiveSpec spec;
  const CostModel cost = CostModel::zero(s);
  const Objective obj(t, support, spec, cost);
  SearchSpec search;
  search.seed = 5;
  const auto a = multistart(obj, search);
  const auto b = multistart(obj, search);
  CHECK(a.best == b.best);
  CHECK(a.traces.size() == b.traces.size());
}

TEST_CASE("dominance holds for an additive objective and the solver finds the optimum") {
  Rng rng(3);
  const FactorSpace s = make_space({2, 3, 3});
  EffectTable t = random_table(s, rng);
  t.zero_pairs();
  const SupportCounts support = SupportCounts::uniform(s, 5.0);
  ObjectiveSpec spec;
  spec.lambda_risk = 0.0;
  const CostModel cost = CostModel::zero(s);
  const Objective obj(t, support, spec, cost);
  const auto dom = diag_dominance_check(obj);
  CHECK(dom.exact);
  CHECK(dom.holds);
  CHECK(multistart(obj, SearchSpec{}).best == exhaustive_argmax(obj)->config);
}

TEST_CASE("verify_1swap reports the best violation") {
  const FactorSpace s = make_space({2, 2});
  EffectTable t(s, Provenance::truth);
  t.mains[0] << -1.0, 1.0;
  t.mains[1] << 0.5, -0.5;
  const SupportCounts support = SupportCounts::uniform(s, 1.0);
  ObjectiveSpec spec;
  spec.lambda_risk = 0.0;
  const CostModel cost = CostModel::zero(s);
  const Objective obj(t, support, spec, cost);
  const auto check = verify_1swap(obj, Config{0, 1});
  CHECK_FALSE(check.optimal);
  REQUIRE(check.best_violation);
  CHECK(check.best_violation->factor == 0);
  CHECK(check.best_violation->improvement == doctest::Approx(2.0));
  CHECK(verify_1swap(obj, Config{1, 0}).optimal);
  CHECK_THROWS_AS(two_swap_bound(obj, Config{0, 1}), Error);
  CHECK(two_swap_bound(obj, Config{1, 0}) >= 0.0);
}

TEST_CASE("two-swap bound covers every double substitution") {
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const FactorSpace s = random_space(rng, 2, 4, 3);
    const EffectTable t = random_table(s, rng, 1.0, 1.0);
    const SupportCounts support = SupportCounts::uniform(s, 1.0);
    ObjectiveSpec spec;
    spec.lambda_risk = 0.3;
    const CostModel cost = CostModel::zero(s);
    const Objective obj(t, support, spec, cost);
    const Config x = multistart(obj, SearchSpec{}).best;
    const double bound = two_swap_bound(obj, x);
    for (std::size_t j = 0; j < s.dimension(); ++j)
      for (std::size_t k = j + 1; k < s.dimension(); ++k)
        for (int a = 0; a < static_cast<int>(s.levels(j)); ++a)
          for (int b = 0; b < static_cast<int>(s.levels(k)); ++b) {
            Config y = x;
            y[j] = a;
            y[k] = b;
            CHECK(obj.value(y) - obj.value(x) <= bound + 1e-12);
          }
  }
}

TEST_CASE("ranked configurations are sorted and respect feasibility") {
  Rng rng(4);
  const FactorSpace s = make_space({2, 3});
  const EffectTable t = random_table(s, rng);
  const SupportCounts support = SupportCounts::uniform(s, 1.0);
  ObjectiveSpec spec;
  spec.feasibility.ban_config(Config{1, 1});
  const CostModel cost = CostModel::zero(s);
  const Objective obj(t, support, spec, cost);
  const auto ranked = rank_configs(obj, 10);
  CHECK(ranked.size() == 5);
  for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].value >= ranked[i].value);
  for (const auto& r : ranked) CHECK_FALSE(r.config == Config{1, 1});
  CHECK(near_opt_bound(0.25) == 0.5);
}
