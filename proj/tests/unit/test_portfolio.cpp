#include <doctest.h>

#include <cmath>
#include <set>

#include "vadelta/error.hpp"
#include "vadelta/portfolio.hpp"

using namespace vadelta;

TEST_CASE("input portfolio stays inside the generation space") {
  const auto space = GenerationSpace::inputSpace();
  const auto p = generateInputPortfolio(space, 100000, 7);
  REQUIRE(p.size() == 100000);
  for (const auto& c : p) {
    CHECK(space.contains(c));
    if (c.rider == Rider::GmdbPlusGmwb) CHECK(c.gdValue == c.gwValue);
    else CHECK(c.gwValue == 0.0);
  }
  CHECK(p.front().id == 0);
  CHECK(p.back().id == 99999);
}

TEST_CASE("generation is deterministic per seed") {
  const auto space = GenerationSpace::inputSpace();
  CHECK(generateInputPortfolio(space, 500, 3) == generateInputPortfolio(space, 500, 3));
  CHECK(generateInputPortfolio(space, 500, 3) != generateInputPortfolio(space, 500, 4));
}

TEST_CASE("attribute means match the uniform moments") {
  const auto space = GenerationSpace::inputSpace();
  const std::size_t n = 10000;
  const auto p = generateInputPortfolio(space, n, 11);
  auto check = [&](auto get, double lo, double hi, double var) {
    double m = 0;
    for (const auto& c : p) m += get(c);
    m /= n;
    const double se = std::sqrt(var / n);
    CHECK(std::abs(m - 0.5 * (lo + hi)) < 3 * se);
  };
  const auto cont = [](double lo, double hi) { return (hi - lo) * (hi - lo) / 12; };
  const auto disc = [](int k) { return (k * k - 1) / 12.0; };
  check([](const VaContract& c) { return c.accountValue; }, 1e4, 5e5, cont(1e4, 5e5));
  check([](const VaContract& c) { return double(c.age); }, 20, 60, disc(41));
  check([](const VaContract& c) { return double(c.maturity); }, 10, 25, disc(16));
  check([](const VaContract& c) { return c.withdrawalRate; }, 0.04, 0.08, 0.0001 * disc(5));
}

TEST_CASE("degenerate space yields identical contracts") {
  GenerationSpace s{{Rider::GmdbPlusGmwb}, {Gender::Female},
                    NumericDomain::points({40}), NumericDomain::interval(1e5, 1e5),
                    NumericDomain::points({2e5}), NumericDomain::points({0.05}),
                    NumericDomain::points({15})};
  auto p = generateInputPortfolio(s, 5, 1);
  for (auto& c : p) c.id = 0;
  for (const auto& c : p) CHECK(c == p.front());
}

TEST_CASE("empty ranges are configuration errors") {
  auto s = GenerationSpace::inputSpace();
  s.riders.clear();
  CHECK_THROWS_AS(generateInputPortfolio(s, 1, 0), ConfigError);
  CHECK_THROWS_AS(NumericDomain::interval(2, 1), ConfigError);
}

TEST_CASE("grid sampling draws distinct grid points") {
  const auto grid = GenerationSpace::representativeGrid();
  const auto reps = sampleFromGrid(grid, 300, 5, 1000);
  std::set<std::int64_t> ids;
  for (const auto& c : reps) {
    CHECK(grid.contains(c));
    ids.insert(c.id);
    CHECK(c == gridPoint(grid, static_cast<std::uint64_t>(c.id - 1000), 1000));
  }
  CHECK(ids.size() == 300);

  const auto tgrid = GenerationSpace::trainingGrid();
  const auto tr = sampleFromGrid(tgrid, 200, 5);
  std::set<std::int64_t> tids;
  for (const auto& c : tr) {
    CHECK(tgrid.contains(c));
    tids.insert(c.id);
  }
  CHECK(tids.size() == 200);
}

TEST_CASE("exhaustive grid draw returns the whole grid") {
  GenerationSpace s{{Rider::GmdbOnly, Rider::GmdbPlusGmwb}, {Gender::Male, Gender::Female},
                    NumericDomain::points({20, 30, 40, 50, 60}),
                    NumericDomain::points({1e4, 1e5, 2e5}),
                    NumericDomain::points({1e5, 2e5, 3e5, 4e5, 5e5}),
                    NumericDomain::points({0.04}), NumericDomain::points({10})};
  REQUIRE(s.gridSize() == 300);
  const auto all = sampleFromGrid(s, 300, 9);
  std::set<std::int64_t> ids;
  for (const auto& c : all) ids.insert(c.id);
  CHECK(ids.size() == 300);
  CHECK(*ids.begin() == 0);
  CHECK(*ids.rbegin() == 299);
  CHECK_THROWS(sampleFromGrid(s, 301, 9));
}

TEST_CASE("validation draws are a subset in shuffle order") {
  const auto input = generateInputPortfolio(GenerationSpace::inputSpace(), 1000, 1);
  const auto v = sampleValidation(input, 250, 2);
  std::set<std::int64_t> ids;
  for (const auto& c : v) {
    CHECK(c == input[static_cast<std::size_t>(c.id)]);
    ids.insert(c.id);
  }
  CHECK(ids.size() == 250);
  const auto perm = sampleValidation(input, input.size(), 2);
  std::set<std::int64_t> all;
  for (const auto& c : perm) all.insert(c.id);
  CHECK(all.size() == input.size());
  CHECK(sampleValidation(input, 1, 8) == sampleValidation(input, 1, 8));
  CHECK_THROWS(sampleValidation(input, 1001, 2));
}

TEST_CASE("portfolio csv round trip") {
  const auto p = generateInputPortfolio(GenerationSpace::inputSpace(), 50, 4);
  const auto path = std::filesystem::temp_directory_path() / "vadelta_portfolio_rt.csv";
  writePortfolioCsv(path, p);
  CHECK(readPortfolioCsv(path) == p);
  std::filesystem::remove(path);
}
