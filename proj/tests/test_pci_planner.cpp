#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "effectmap/error.hpp"
#include "effectmap/pci.hpp"
#include "effectmap/planner.hpp"

using namespace effectmap;
using namespace testsupport;

TEST_CASE("pci standardizes by the RMS strength") {
  Rng rng(1);
  const FactorSpace s = make_space({2, 3, 4});
  const EffectTable t = random_table(s, rng);
  const auto m = pci_matrix(t, 0, 2);
  CHECK(m.scale == doctest::Approx(std::sqrt(t.pairs[1].squaredNorm() / 8.0)));
  CHECK(m.values.squaredNorm() == doctest::Approx(8.0));
  const auto swapped = pci_matrix(t, 2, 0);
  CHECK((swapped.values - m.values.transpose()).norm() < 1e-12);
}

TEST_CASE("zero interaction gives a zero map") {
  const FactorSpace s = make_space({2, 2});
  EffectTable t(s, Provenance::truth);
  const auto m = pci_matrix(t, 0, 1);
  CHECK(m.scale == 0.0);
  CHECK(m.values.isZero());
}

TEST_CASE("weighted mode needs a reference") {
  Rng rng(2);
  const FactorSpace s = make_space({2, 3});
  const EffectTable t = random_table(s, rng);
  CHECK_THROWS_AS(pci_matrix(t, 0, 1, PciMode::weighted), Error);
  const auto u = ReferenceDistribution::uniform(s);
  const auto w = pci_matrix(t, 0, 1, PciMode::weighted, &u);
  CHECK((w.values - pci_matrix(t, 0, 1).values).norm() < 1e-12);
}

TEST_CASE("pairs are ranked by strength") {
  Rng rng(3);
  const FactorSpace s = make_space({2, 2, 2});
  EffectTable t = random_table(s, rng);
  t.pairs[2] *= 10.0;
  const auto r = pci_rank_pairs(t);
  REQUIRE(r.size() == 3);
  CHECK(r[0].name == "x1|x2");
  CHECK(r[0].scale >= r[1].scale);
  CHECK(r[1].scale >= r[2].scale);
}

TEST_CASE("planner closed forms") {
  CHECK(hoeffding_cell_n(1.0, 0.1, 0.05) == 738);
  CHECK(uniform_cells_n(1.0, 0.1, 0.05, 3, 3) == 1178);
  CHECK(hoeffding_cell_bound(1.0, 0.1, 0.05) == doctest::Approx(200.0 * std::log(40.0)));
  CHECK(hoeffding_halfwidth(1.0, 738.0, 0.05) <= 0.1);
  CHECK(hoeffding_halfwidth(1.0, 737.0, 0.05) > 0.1);
  CHECK(bernstein_halfwidth(0.1, 1.0, 1000.0, 0.05) == doctest::Approx(0.0304).epsilon(0.01));
  const auto [mains, pairs] = effect_error_budget(0.01, 0.1);
  CHECK(mains == doctest::Approx(0.11));
  CHECK(pairs == doctest::Approx(0.31));
  CHECK_THROWS_AS(hoeffding_cell_n(1.0, 0.0, 0.05), Error);
  CHECK_THROWS_AS(hoeffding_cell_n(1.0, 0.1, 1.0), Error);
}

TEST_CASE("bound inference inflates the largest response") {
  const FactorSpace s = make_space({2});
  const RunLog log(s, {{Config{0}, -2.0, 1.0, 0}, {Config{1}, 1.0, 1.0, 0}});
  CHECK(infer_bound(log) == doctest::Approx(2.2));
}
