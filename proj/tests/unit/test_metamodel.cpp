#include <doctest.h>

#include <cmath>
#include <random>

#include "vadelta/error.hpp"
#include "vadelta/metamodel.hpp"
#include "vadelta/model_io.hpp"

using namespace vadelta;

namespace {

const FeatureConfig& defaultFeatures() {
  static const FeatureConfig f = FeatureConfig::fromSpace(GenerationSpace::inputSpace());
  return f;
}

ValuedPortfolio randomSet(std::size_t n, std::uint64_t seed, std::int64_t idBase = 0) {
  ValuedPortfolio r;
  r.contracts = generateInputPortfolio(GenerationSpace::inputSpace(), n, seed, idBase);
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-500, 100);
  for (std::size_t i = 0; i < n; ++i) r.deltas.push_back(u(g));
  return r;
}

Metamodel randomModel(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Metamodel m(defaultFeatures(), randomSet(n, seed));
  std::mt19937_64 g(seed + 1);
  std::normal_distribution<double> z(0, scale);
  std::vector<double> p(m.parameterCount());
  for (double& v : p) v = z(g);
  m.setParameters(p);
  return m;
}

// Independent extended-precision evaluation of the mini-batch loss, so the
// finite-difference oracle is not dominated by double rounding.
long double referenceLoss(const Metamodel& m, const std::vector<double>& p,
                          const ValuedPortfolio& data) {
  const std::size_t n = m.size(), nf = m.featureCount();
  long double sum = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    long double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = buildFeatures(data.contracts[k], m.representatives().contracts[i], m.features());
      long double a = p[n * nf + i];
      for (std::size_t c = 0; c < nf; ++c) a += static_cast<long double>(p[i * nf + c]) * f[c];
      num += std::exp(a) * m.representatives().deltas[i];
      den += std::exp(a);
    }
    const long double e = (num / den - data.deltas[k]) / m.normalization();
    sum += e * e;
  }
  return sum / (2.0L * data.size());
}

}  // namespace

TEST_CASE("default feature ranges come from the generation space") {
  const auto& f = defaultFeatures();
  REQUIRE(f.transforms.size() == 6);
  CHECK(f.featureCount() == 14);
  CHECK(f.transforms[0].range == 15);
  CHECK(f.transforms[1].range == 40);
  CHECK(f.transforms[2].range == doctest::Approx(4.9e5));
  CHECK(f.transforms[3].range == doctest::Approx(6e5 / 1e4 - 0.5e4 / 5e5));
  CHECK(f.transforms[4].range == doctest::Approx(60.0));
  CHECK(f.transforms[5].range == doctest::Approx(0.04));
}

TEST_CASE("features of a contract against itself are zero") {
  for (const auto& c : generateInputPortfolio(GenerationSpace::inputSpace(), 20, 1))
    for (double v : buildFeatures(c, c, defaultFeatures())) CHECK(v == 0.0);
}

TEST_CASE("rectified features are complementary and bounded") {
  const auto p = generateInputPortfolio(GenerationSpace::inputSpace(), 100, 2);
  const auto& cfg = defaultFeatures();
  const std::size_t nc = cfg.categorical.size(), nt = cfg.transforms.size();
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const auto f = buildFeatures(p[i], p[i + 1], cfg);
    for (std::size_t t = 0; t < nt; ++t) CHECK(f[nc + t] * f[nc + nt + t] == 0.0);
    for (double v : f) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("age feature from the full range") {
  VaContract q, r;
  q.accountValue = r.accountValue = 1e5;
  q.age = 60;
  r.age = 20;
  const auto& cfg = defaultFeatures();
  const auto f = buildFeatures(q, r, cfg);
  const std::size_t nc = 2, nt = 6;
  CHECK(f[nc + nt + 1] == 1.0);  // F+ age
  CHECK(f[nc + 1] == 0.0);       // F- age
}

TEST_CASE("zero parameters give the mean representative delta") {
  const Metamodel m(defaultFeatures(), randomSet(7, 3));
  double mean = 0;
  for (double d : m.representatives().deltas) mean += d / 7;
  const auto q = generateInputPortfolio(GenerationSpace::inputSpace(), 1, 4).front();
  const auto r = m.forward(q);
  CHECK(r.estimate == doctest::Approx(mean).epsilon(1e-14));
  for (double o : r.outputs) CHECK(o == doctest::Approx(1.0 / 7));
}

TEST_CASE("a single representative is returned verbatim") {
  const auto m = randomModel(1, 5, 3.0);
  for (const auto& q : generateInputPortfolio(GenerationSpace::inputSpace(), 10, 6))
    CHECK(m.estimate(q) == m.representatives().deltas[0]);
}

TEST_CASE("forward matches a direct evaluation of the estimator") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = randomModel(5, 100 + s, 0.5);
    const auto q = generateInputPortfolio(GenerationSpace::inputSpace(), 1, 200 + s).front();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto f = buildFeatures(q, m.representatives().contracts[i], m.features());
      double a = m.bias(i);
      for (std::size_t k = 0; k < f.size(); ++k) a += m.weight(i, k) * f[k];
      num += std::exp(a) * m.representatives().deltas[i];
      den += std::exp(a);
    }
    CHECK(m.estimate(q) == doctest::Approx(num / den).epsilon(1e-12));
  }
}

TEST_CASE("softmax outputs form a convex combination") {
  const auto m = randomModel(10, 7, 20.0);
  const auto& y = m.representatives().deltas;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  for (const auto& q : generateInputPortfolio(GenerationSpace::inputSpace(), 50, 8)) {
    const auto r = m.forward(q);
    double s = 0;
    for (double o : r.outputs) {
      CHECK(o >= 0.0);
      s += o;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(r.estimate >= *lo - 1e-9);
    CHECK(r.estimate <= *hi + 1e-9);
  }
}

TEST_CASE("a common bias shift leaves the estimate unchanged") {
  auto m = randomModel(8, 9);
  const auto q = generateInputPortfolio(GenerationSpace::inputSpace(), 1, 10).front();
  const double before = m.estimate(q);
  std::vector<double> p(m.parameters().begin(), m.parameters().end());
  for (std::size_t i = 0; i < m.size(); ++i) p[m.size() * m.featureCount() + i] += 123.0;
  m.setParameters(p);
  CHECK(m.estimate(q) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("batch loss decomposes over items") {
  const auto m = randomModel(6, 11);
  const auto data = randomSet(20, 12, 500);
  double single = 0;
  for (std::size_t k = 0; k < 20; ++k) {
    const std::size_t idx[] = {k};
    single += batchLoss(m, data, idx);
  }
  CHECK(batchLoss(m, data) == doctest::Approx(single / 20).epsilon(1e-13));

  ValuedPortfolio exact;
  exact.contracts = data.contracts;
  for (const auto& c : data.contracts) exact.deltas.push_back(m.estimate(c));
  CHECK(batchLoss(m, exact) == doctest::Approx(0.0));

  ValuedPortfolio one;
  one.contracts = {data.contracts[0]};
  one.deltas = {m.estimate(data.contracts[0]) + 0.3 * m.normalization()};
  CHECK(batchLoss(m, one) == doctest::Approx(0.045).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central differences") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto m = randomModel(4, 300 + s, 0.7);
    const auto data = randomSet(5, 400 + s, 900);
    const auto g = gradient(m, data);
    std::vector<double> p(m.parameters().begin(), m.parameters().end());
    const double h = 1e-6;
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto up = p, dn = p;
      up[k] += h;
      dn[k] -= h;
      const double fd = static_cast<double>(
          (referenceLoss(m, up, data) - referenceLoss(m, dn, data)) / (2 * h));
      CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-6));
    }
  }
}

TEST_CASE("gradient vanishes when everything equals one constant") {
  ValuedPortfolio reps = randomSet(5, 13);
  std::fill(reps.deltas.begin(), reps.deltas.end(), -4.0);
  const Metamodel m(defaultFeatures(), reps);
  ValuedPortfolio data = randomSet(10, 14);
  std::fill(data.deltas.begin(), data.deltas.end(), -4.0);
  for (double v : gradient(m, data)) CHECK(v == 0.0);
}

TEST_CASE("uniform softmax gradient for two representatives") {
  ValuedPortfolio reps = randomSet(2, 15);
  reps.deltas = {-2.0, -6.0};
  const Metamodel m(defaultFeatures(), reps);
  ValuedPortfolio data;
  data.contracts = {generateInputPortfolio(GenerationSpace::inputSpace(), 1, 16).front()};
  data.deltas = {-5.0};
  // yhat = -4, s = 6: dE/da_i = (yhat - y)/s * 1/2 * (y_i - yhat)/s.
  const auto g = gradient(m, data);
  const std::size_t nf = m.featureCount();
  const double a0 = (1.0 / 6) * 0.5 * (2.0 / 6), a1 = (1.0 / 6) * 0.5 * (-2.0 / 6);
  CHECK(g[2 * nf] == doctest::Approx(a0).epsilon(1e-14));
  CHECK(g[2 * nf + 1] == doctest::Approx(a1).epsilon(1e-14));
  const auto f0 = buildFeatures(data.contracts[0], reps.contracts[0], m.features());
  for (std::size_t k = 0; k < nf; ++k) CHECK(g[k] == doctest::Approx(a0 * f0[k]).epsilon(1e-14));
}

TEST_CASE("zero account value uses the ratio upper bound") {
  VaContract c;
  c.gdValue = 1e5;
  const auto& t = defaultFeatures().transforms[3];
  CHECK(transformValue(t, c) == t.upper);
}

TEST_CASE("model json round trip") {
  auto m = randomModel(6, 17);
  m.seed = 99;
  const auto back = modelFromJson(modelToJson(m));
  CHECK(back.seed == 99);
  CHECK(back.representatives().contracts == m.representatives().contracts);
  CHECK(back.representatives().deltas == m.representatives().deltas);
  CHECK(back.normalization() == m.normalization());
  for (std::size_t k = 0; k < m.parameterCount(); ++k) CHECK(back.parameters()[k] == m.parameters()[k]);
  const auto q = generateInputPortfolio(GenerationSpace::inputSpace(), 1, 18).front();
  CHECK(back.estimate(q) == m.estimate(q));
  CHECK_THROWS_AS(modelFromJson("{\"schema_version\": 9}"), ConfigError);
  CHECK_THROWS_AS(modelFromJson("not json"), ConfigError);
}

TEST_CASE("portfolio estimation time grows linearly in N") {
  const auto m = randomModel(100, 19, 0.1);
  const auto small = generateInputPortfolio(GenerationSpace::inputSpace(), 1000, 20);
  const auto large = generateInputPortfolio(GenerationSpace::inputSpace(), 10000, 21);
  const MetamodelEstimator est(m);
  auto best = [&](const std::vector<VaContract>& p) {
    double t = 1e9;
    for (int k = 0; k < 5; ++k) t = std::min(t, portfolioEstimate(est, p, false).portfolioSeconds);
    return t;
  };
  best(small);
  const double ratio = best(large) / best(small);
  CHECK(ratio >= 5.0);
  CHECK(ratio <= 20.0);
}
