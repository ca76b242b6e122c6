#include <doctest.h>

#include <cmath>

#include "vadelta/error.hpp"
#include "vadelta/mc_engine.hpp"

using namespace vadelta;

namespace {

double normCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

VaContract gmdb(double av, double gd, int maturity) {
  VaContract c;
  c.id = 1;
  c.rider = Rider::GmdbOnly;
  c.age = 40;
  c.accountValue = av;
  c.gdValue = gd;
  c.withdrawalRate = 0.05;
  c.maturity = maturity;
  return c;
}

}  // namespace

TEST_CASE("one-year GMDB with certain death is a European put") {
  McConfig cfg;
  cfg.scenarioCount = 10000;
  cfg.seed = 42;
  const auto mort = MortalityTable::constant(1.0);
  const double s0 = 100.0, k = 105.0, r = cfg.riskFreeRate, v = cfg.volatility;
  const auto c = gmdb(s0, k, 1);

  const double d1 = (std::log(s0 / k) + (r + 0.5 * v * v)) / v;
  const double d2 = d1 - v;
  const double put = k * std::exp(-r) * normCdf(-d2) - s0 * normCdf(-d1);
  const double putDelta = s0 * (normCdf(d1) - 1.0);

  const auto paths = generatePaths(cfg, 1, contractSeed(cfg.seed, c.id));
  double m = 0, m2 = 0;
  for (std::size_t s = 0; s < paths.scenarios(); ++s) {
    const double x = std::exp(-r) * std::max(k - s0 * paths(s, 0), 0.0);
    m += x;
    m2 += x * x;
  }
  const double n = static_cast<double>(paths.scenarios());
  const double se = std::sqrt((m2 / n - (m / n) * (m / n)) / (n - 1));
  const auto res = computeDelta(c, mort, cfg);
  CHECK(std::abs(res.liability - put) < 3 * se);
  CHECK(std::abs(res.delta - putDelta) < 3 * res.standardError);
  CHECK(res.delta < 0.0);
}

TEST_CASE("delta is reproducible and independent runs agree within 5%") {
  McConfig cfg;
  cfg.scenarioCount = 10000;
  const auto mort = MortalityTable::gompertzMakeham();
  auto c = gmdb(1e5, 1.2e5, 15);
  c.rider = Rider::GmdbPlusGmwb;
  c.gwValue = c.gdValue;
  cfg.seed = 1;
  const auto a = computeDelta(c, mort, cfg);
  CHECK(computeDelta(c, mort, cfg).delta == a.delta);
  cfg.seed = 2;
  const auto b = computeDelta(c, mort, cfg);
  CHECK(std::abs(a.delta - b.delta) <= 0.05 * std::abs(a.delta));
}

TEST_CASE("zero volatility gives deterministic growth") {
  McConfig cfg;
  cfg.scenarioCount = 4;
  cfg.volatility = 0.0;
  const auto p = generatePaths(cfg, 3, 0);
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t t = 0; t < 3; ++t) CHECK(p(s, t) == std::exp(cfg.riskFreeRate));
}

TEST_CASE("GMWB with empty account pays the discounted withdrawals") {
  McConfig cfg;
  cfg.scenarioCount = 200;
  VaContract c = gmdb(0.0, 1e5, 10);
  c.rider = Rider::GmdbPlusGmwb;
  c.gwValue = 1e5;
  c.withdrawalRate = 0.05;

  // Without deaths only the withdrawals remain: sum_t e^{-mu t} W.
  const auto none = MortalityTable::constant(0.0);
  double expected = 0;
  for (int t = 1; t <= 10; ++t) expected += std::exp(-cfg.riskFreeRate * t) * 5000.0;
  CHECK(computeDelta(c, none, cfg).liability == doctest::Approx(expected).epsilon(1e-12));

  // With deaths survivors keep withdrawing and heirs get the remaining GD.
  const double q = 0.01;
  const auto flat = MortalityTable::constant(q);
  double withMort = 0, alive = 1, gd = 1e5;
  for (int t = 1; t <= 10; ++t) {
    const double dying = alive * q;
    alive *= 1 - q;
    gd -= 5000.0;
    withMort += std::exp(-cfg.riskFreeRate * t) * (alive * 5000.0 + dying * gd);
  }
  CHECK(computeDelta(c, flat, cfg).liability == doctest::Approx(withMort).epsilon(1e-12));
}

TEST_CASE("valuation does not depend on the worker count") {
  McConfig cfg;
  cfg.scenarioCount = 300;
  const auto mort = MortalityTable::gompertzMakeham();
  std::vector<VaContract> p;
  for (int i = 0; i < 12; ++i) {
    auto c = gmdb(1e5 + 1e4 * i, 1.5e5, 10 + i);
    c.id = i;
    p.push_back(c);
  }
  cfg.threads = 1;
  const auto a = valuePortfolio(p, mort, cfg);
  cfg.threads = 4;
  const auto b = valuePortfolio(p, mort, cfg);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(a.results[i].delta == b.results[i].delta);
  CHECK(a.aggregateDelta == b.aggregateDelta);
}

TEST_CASE("bad inputs are rejected") {
  McConfig cfg;
  const auto mort = MortalityTable::constant(0.01, 20, 60);
  auto c = gmdb(1e5, 1e5, 10);
  c.age = 55;
  CHECK_THROWS_WITH_AS(computeDelta(c, mort, cfg), doctest::Contains("age"), InvalidArgument);
  cfg.scenarioCount = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = McConfig{};
  cfg.bumpFraction = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("mortality csv round trip") {
  const auto m = MortalityTable::gompertzMakeham();
  const auto path = std::filesystem::temp_directory_path() / "vadelta_mort_rt.csv";
  m.saveCsv(path);
  const auto r = MortalityTable::loadCsv(path);
  for (int a = 0; a <= 120; ++a) {
    CHECK(r.qx(Gender::Male, a) == m.qx(Gender::Male, a));
    CHECK(r.qx(Gender::Female, a) == m.qx(Gender::Female, a));
  }
  std::filesystem::remove(path);
}

TEST_CASE("results csv round trip") {
  std::vector<McResult> rs{{3, 1.5, -0.25, 0.01, 100}, {7, 2.0, 0.1, 0.02, 100}};
  const auto path = std::filesystem::temp_directory_path() / "vadelta_results_rt.csv";
  writeResultsCsv(path, rs);
  const auto back = readResultsCsv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].id == 7);
  CHECK(back[0].delta == -0.25);
  std::filesystem::remove(path);
}

TEST_CASE("shipped mortality table matches the built-in one") {
  const auto shipped = MortalityTable::loadCsv(VADELTA_DATA_DIR "/mortality.csv");
  const auto builtin = MortalityTable::gompertzMakeham();
  REQUIRE(shipped.minAge() == builtin.minAge());
  REQUIRE(shipped.maxAge() == builtin.maxAge());
  for (int age = builtin.minAge(); age <= builtin.maxAge(); ++age)
    for (auto g : {Gender::Male, Gender::Female}) CHECK(shipped.qx(g, age) == builtin.qx(g, age));
}
