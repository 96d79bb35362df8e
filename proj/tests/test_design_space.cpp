#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "effectmap/error.hpp"

#include <set>
#include <sstream>

using namespace effectmap;
using testsupport::make_space;

TEST_CASE("space validation rejects malformed declarations") {
  CHECK_THROWS_AS(FactorSpace(std::vector<Factor>{}), Error);
  CHECK_THROWS_AS(FactorSpace(std::vector<Factor>{{"a", {"x"}}}), Error);
  CHECK_THROWS_AS(FactorSpace(std::vector<Factor>{{"a", {"x", "y"}}, {"a", {"x", "y"}}}), Error);
  CHECK_THROWS_AS(FactorSpace(std::vector<Factor>{{"a", {"x", "x"}}}), Error);
  try {
    FactorSpace(std::vector<Factor>{{"a", {"x"}}});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_space);
  }
}

TEST_CASE("rank and unrank are inverse with the last factor fastest") {
  const FactorSpace s = make_space({2, 3, 2});
  CHECK(s.grid_size() == 12);
  const auto grid = enumerate_grid(s);
  REQUIRE(grid.size() == 12);
  CHECK(grid[1] == Config{0, 0, 1});
  CHECK(grid[2] == Config{0, 1, 0});
  for (std::uint64_t r = 0; r < grid.size(); ++r) {
    CHECK(s.rank(grid[r]) == r);
    CHECK(s.unrank(r) == grid[r]);
  }
  CHECK_THROWS_AS(enumerate_grid(s, 5), Error);
}

TEST_CASE("pair indexing follows (0,1),(0,2),(1,2)") {
  const FactorSpace s = make_space({2, 2, 2});
  CHECK(s.pair_count() == 3);
  CHECK(s.pair_index(0, 1) == 0);
  CHECK(s.pair_index(0, 2) == 1);
  CHECK(s.pair_index(1, 2) == 2);
  CHECK(s.pair_index(2, 1) == 2);
  CHECK(s.pair_name(1) == "x0|x2");
  for (std::size_t p = 0; p < 3; ++p) {
    auto [j, k] = s.pair_factors(p);
    CHECK(s.pair_index(j, k) == p);
  }
}

TEST_CASE("balanced designs spread levels evenly without duplicates") {
  const FactorSpace s = make_space({2, 3, 2, 3, 2, 3});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto design = sample_design(s, DesignPlan::balanced(48), seed);
    REQUIRE(design.size() == 48);
    std::set<Config> unique(design.begin(), design.end());
    CHECK(unique.size() == 48);
    for (std::size_t j = 0; j < s.dimension(); ++j) {
      std::vector<int> counts(s.levels(j), 0);
      for (const auto& x : design) ++counts[x[j]];
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      CHECK(*hi - *lo <= 1);
    }
  }
}

TEST_CASE("design sampling is deterministic per seed") {
  const FactorSpace s = make_space({2, 3, 2, 3});
  CHECK(sample_design(s, DesignPlan::balanced(20), 7) == sample_design(s, DesignPlan::balanced(20), 7));
  CHECK(sample_design(s, DesignPlan::skewed(20, 3.0), 7) == sample_design(s, DesignPlan::skewed(20, 3.0), 7));
  CHECK(sample_design(s, DesignPlan::full(), 1).size() == 36);
}

TEST_CASE("skewed designs favour the first level") {
  const FactorSpace s = make_space({2, 3, 2, 3});
  const auto design = sample_design(s, DesignPlan::skewed(4000, 3.0), 3);
  for (std::size_t j = 0; j < s.dimension(); ++j) {
    std::vector<double> freq(s.levels(j), 0.0);
    for (const auto& x : design) freq[x[j]] += 1.0 / 4000.0;
    const double expected = 3.0 / (3.0 + static_cast<double>(s.levels(j)) - 1.0);
    CHECK(freq[0] == doctest::Approx(expected).epsilon(0.1));
  }
}

TEST_CASE("log parsing round-trips and names offending rows and columns") {
  const FactorSpace s(std::vector<Factor>{{"opt", {"adam", "sgd"}}, {"lr", {"low", "high"}}});
  std::istringstream in("opt,lr,response,weight,seed\nadam,low,1.5,1,0\nsgd,high,-2,0.5,3\n");
  const RunLog log = parse_log(in, s);
  REQUIRE(log.size() == 2);
  CHECK(log.records()[1].config == Config{1, 1});
  CHECK(log.records()[1].weight == 0.5);
  CHECK(log.records()[1].seed == 3);
  std::ostringstream out;
  export_log(out, log);
  std::istringstream back(out.str());
  const RunLog again = parse_log(back, s);
  CHECK(again.records()[0].response == 1.5);
  CHECK(again.records()[1].config == Config{1, 1});

  std::istringstream bad("opt,lr,response\nadam,mid,1\n");
  try {
    parse_log(bad, s);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
    CHECK(std::string(e.what()).find("lr") != std::string::npos);
    CHECK(std::string(e.what()).find("row") != std::string::npos);
  }
  std::istringstream missing("opt,response\nadam,1\n");
  CHECK_THROWS_AS(parse_log(missing, s), Error);
  std::istringstream zero("opt,lr,response,weight\nadam,low,1,0\n");
  try {
    parse_log(zero, s);
    FAIL("expected an empty-log error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_log);
  }
}

TEST_CASE("reference distributions") {
  const FactorSpace s = make_space({2, 3});
  const auto u = ReferenceDistribution::uniform(s);
  CHECK(u.probability(Config{1, 2}) == doctest::Approx(1.0 / 6.0));
  CHECK(u.joint(0, 1).sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(ReferenceDistribution::product(s, {{0.5, 0.6}, {0.2, 0.3, 0.5}}), Error);

  const RunLog log(s, {{Config{0, 0}, 1.0, 1.0, 0}, {Config{0, 0}, 1.0, 1.0, 0}, {Config{1, 2}, 1.0, 2.0, 0}});
  const auto e = ReferenceDistribution::empirical(log);
  CHECK_FALSE(e.is_product());
  CHECK(e.probability(Config{0, 0}) == doctest::Approx(0.5));
  CHECK(e.probability(Config{0, 1}) == 0.0);
  CHECK(e.joint(0, 1)(1, 2) == doctest::Approx(0.5));
  const auto m = ReferenceDistribution::empirical_marginals(log);
  CHECK(m.is_product());
  CHECK(m.probability(Config{0, 2}) == doctest::Approx(0.25));
}

TEST_CASE("support counts and effective sample size") {
  const FactorSpace s = make_space({2, 2});
  const RunLog log(s, {{Config{0, 0}, 1.0, 1.0, 0}, {Config{0, 0}, 2.0, 3.0, 0}, {Config{1, 1}, 0.0, 1.0, 0}});
  const auto c = support_counts(log);
  CHECK(c.level[0](0) == 2.0);
  CHECK(c.pair[0](0, 0) == 2.0);
  CHECK(c.pair_count(s, 1, 1, 0, 1) == 1.0);
  CHECK(c.pair_effective[0](0, 0) == doctest::Approx(16.0 / 10.0));
  const std::vector<double> equal{1.0, 1.0, 1.0, 1.0};
  CHECK(effective_sample_size(equal) == doctest::Approx(4.0));
}
