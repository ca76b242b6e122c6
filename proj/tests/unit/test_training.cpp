#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "vadelta/autotune.hpp"
#include "vadelta/error.hpp"
#include "vadelta/mc_engine.hpp"
#include "vadelta/training.hpp"

using namespace vadelta;

TEST_CASE("momentum schedule") {
  CHECK(momentumCoeff(1, 0.99) == 0.5);
  CHECK(momentumCoeff(50, 0.99) == 0.75);
  CHECK(momentumCoeff(150, 0.99) == 0.875);
  CHECK(momentumCoeff(1000000, 0.99) == 0.99);
  double prev = 0;
  for (std::size_t t = 1; t <= 100000; t += 7) {
    const double mu = momentumCoeff(t, 0.99);
    CHECK(mu >= prev);
    CHECK(mu <= 0.99);
    prev = mu;
  }
}

TEST_CASE("nag step with no momentum is gradient descent") {
  TrainConfig cfg;
  cfg.muMax = 0.0;
  cfg.learningRate = 0.1;
  TrainState st;
  st.params = {1.0, -2.0};
  const GradientFn grad = [](std::span<const double> p, std::span<double> g) {
    g[0] = 2 * p[0];
    g[1] = 4 * p[1];
  };
  for (int k = 0; k < 5; ++k) {
    const auto before = st.params;
    nagStep(st, cfg, grad);
    CHECK(st.params[0] == doctest::Approx(before[0] - 0.1 * 2 * before[0]));
    CHECK(st.params[1] == doctest::Approx(before[1] - 0.1 * 4 * before[1]));
  }
  CHECK(st.iteration == 5);
}

TEST_CASE("velocity decays geometrically under zero gradient") {
  TrainConfig cfg;
  TrainState st;
  st.params = {0.0};
  st.velocity = {1.0};
  const GradientFn zero = [](std::span<const double>, std::span<double> g) { g[0] = 0; };
  double expected = 1.0, pos = 0.0;
  for (int k = 1; k <= 100; ++k) {
    nagStep(st, cfg, zero);
    expected *= momentumCoeff(static_cast<std::size_t>(k), cfg.muMax);
    pos += expected;
    CHECK(st.velocity[0] == doctest::Approx(expected).epsilon(1e-14));
    CHECK(st.params[0] == doctest::Approx(pos).epsilon(1e-12));
  }
}

TEST_CASE("nag beats gradient descent on an ill-conditioned bowl") {
  // f(x) = 1/2 x^T A x with A = diag(1, 0.01).
  const GradientFn grad = [](std::span<const double> p, std::span<double> g) {
    g[0] = p[0];
    g[1] = 0.01 * p[1];
  };
  auto loss = [](const std::vector<double>& p) { return 0.5 * (p[0] * p[0] + 0.01 * p[1] * p[1]); };
  auto iterations = [&](double muMax) {
    TrainConfig cfg;
    cfg.learningRate = 1.0;
    cfg.muMax = muMax;
    TrainState st;
    st.params = {1.0, 1.0};
    while (loss(st.params) > 1e-6 && st.iteration < 100000) nagStep(st, cfg, grad);
    return st.iteration;
  };
  const auto nag = iterations(0.99), gd = iterations(0.0);
  CHECK(nag < gd);
}

namespace {

std::vector<double> uShape(std::uint64_t seed, std::size_t span, double noise,
                           std::vector<double>& stamps) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-noise, noise);
  const double tmin = 0.4 * static_cast<double>(span);
  std::vector<double> v;
  stamps.clear();
  for (std::size_t t = 50; t <= span; t += 50) {
    const double x = (static_cast<double>(t) - tmin) / tmin;
    stamps.push_back(static_cast<double>(t));
    v.push_back(x * x + 0.2 + u(g));
  }
  return v;
}

}  // namespace

TEST_CASE("stopping detector on simple shapes") {
  TrainConfig cfg;
  std::vector<double> t, dec, flat;
  for (int k = 1; k <= 40; ++k) {
    t.push_back(50.0 * k);
    dec.push_back(1.0 / k);
    flat.push_back(0.3);
  }
  CHECK_FALSE(detectStopping(t, dec, cfg).event);
  CHECK_FALSE(detectStopping(t, flat, cfg).event);
  CHECK_FALSE(detectStopping(std::span(t).first(13), std::span(dec).first(13), cfg).event);
}

TEST_CASE("stopping detector fires soon after a clean minimum") {
  TrainConfig cfg;
  std::vector<double> stamps;
  const auto v = uShape(1, 2000, 0.0, stamps);
  std::size_t fired = 0;
  for (std::size_t k = cfg.smoothingWindow + cfg.trendWindow; k <= v.size(); ++k)
    if (detectStopping(std::span(stamps).first(k), std::span(v).first(k), cfg).event) {
      fired = static_cast<std::size_t>(stamps[k - 1]);
      break;
    }
  CHECK(fired > 800);
  CHECK(fired <= 1000);
}

TEST_CASE("relative error stop") {
  ValuedPortfolio reps;
  reps.contracts = generateInputPortfolio(GenerationSpace::inputSpace(), 1, 1);
  reps.deltas = {-100.0};
  const Metamodel m(FeatureConfig::fromSpace(GenerationSpace::inputSpace()), reps);
  ValuedPortfolio v;
  v.contracts = generateInputPortfolio(GenerationSpace::inputSpace(), 3, 2);
  v.deltas = {-100.0, -100.0, -100.0};
  CHECK(relErrStop(m, v, 0.005));
  v.deltas = {-100.0 / 1.004, -100.0 / 1.004, -100.0 / 1.004};
  CHECK(relErrStop(m, v, 0.005));
  v.deltas = {-100.0 / 1.006, -100.0 / 1.006, -100.0 / 1.006};
  CHECK_FALSE(relErrStop(m, v, 0.005));
  v.deltas = {1.0, -1.0, 0.0};
  CHECK_THROWS_AS(relErrStop(m, v, 0.005), NumericError);
}

namespace {

struct Fixture {
  ValuedPortfolio reps, training, validation;
  FeatureConfig features = FeatureConfig::fromSpace(GenerationSpace::inputSpace());
};

Fixture smallProblem() {
  Fixture f;
  McConfig mc;
  mc.scenarioCount = 200;
  const auto mort = MortalityTable::gompertzMakeham();
  auto value = [&](std::vector<VaContract> cs) {
    ValuedPortfolio p;
    const auto v = valuePortfolio(cs, mort, mc);
    for (const auto& r : v.results) p.deltas.push_back(r.delta);
    p.contracts = std::move(cs);
    return p;
  };
  f.reps = value(sampleFromGrid(GenerationSpace::representativeGrid(), 10, 1, 1000));
  f.training = value(sampleFromGrid(GenerationSpace::trainingGrid(), 30, 2, 2000));
  f.validation = value(generateInputPortfolio(GenerationSpace::inputSpace(), 20, 3));
  return f;
}

}  // namespace

TEST_CASE("training on the representatives themselves fits them") {
  const auto f = smallProblem();
  TrainConfig cfg;
  cfg.maxIterations = 3000;
  cfg.earlyStopping = false;
  cfg.batchSize = 5;
  const auto r = train(f.reps, f.reps, f.validation, f.features, cfg);
  CHECK(r.state.records.back().trainMse < r.state.records.front().trainMse / 10);
  CHECK((r.state.stopReason == StopReason::MaxIterations));
  CHECK(r.state.iteration == 3000);
}

TEST_CASE("training is deterministic per seed") {
  const auto f = smallProblem();
  TrainConfig cfg;
  cfg.maxIterations = 400;
  cfg.seed = 5;
  const auto a = train(f.reps, f.training, f.validation, f.features, cfg);
  const auto b = train(f.reps, f.training, f.validation, f.features, cfg);
  CHECK(a.state.params == b.state.params);
  REQUIRE(a.state.records.size() == b.state.records.size());
  for (std::size_t k = 0; k < a.state.records.size(); ++k)
    CHECK(a.state.records[k].valMse == b.state.records[k].valMse);
  cfg.seed = 6;
  const auto c = train(f.reps, f.training, f.validation, f.features, cfg);
  CHECK(a.state.params != c.state.params);
}

TEST_CASE("zero iterations returns the uniform model") {
  const auto f = smallProblem();
  TrainConfig cfg;
  cfg.maxIterations = 0;
  const auto r = train(f.reps, f.training, f.validation, f.features, cfg);
  CHECK((r.state.stopReason == StopReason::MaxIterations));
  for (double p : r.model.parameters()) CHECK(p == 0.0);
}

TEST_CASE("warm start and stopping reasons") {
  const auto f = smallProblem();
  TrainConfig cfg;
  cfg.maxIterations = 20000;
  cfg.requireRelErr = false;
  const auto r = train(f.reps, f.training, f.validation, f.features, cfg);
  if (r.state.stopEvent) CHECK((r.state.stopReason == StopReason::TrendUShape));
  TrainConfig warm;
  warm.maxIterations = 0;
  warm.warmStart = r.state.params;
  const auto w = train(f.reps, f.training, f.validation, f.features, warm);
  CHECK(w.state.params == r.state.params);
  warm.warmStart.pop_back();
  CHECK_THROWS_AS(train(f.reps, f.training, f.validation, f.features, warm), InvalidArgument);
}

TEST_CASE("divergent learning rates raise a numeric error") {
  const auto f = smallProblem();
  TrainConfig cfg;
  cfg.maxIterations = 200;
  cfg.warmStart.assign(f.reps.size() * (f.features.featureCount() + 1), 0.0);
  cfg.warmStart[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train(f.reps, f.training, f.validation, f.features, cfg), NumericError);
}

TEST_CASE("training configuration is validated") {
  TrainConfig cfg;
  cfg.polyDegree = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batchSize = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

namespace {

// Gradient descent on f(x) = L/2 x^2: converges iff lr < 2/L.
class QuadraticToy final : public TuneProblem {
 public:
  explicit QuadraticToy(double curvature) : l_(curvature) {}
  std::size_t trainingSize() const override { return 200; }
  std::vector<double> trainingCurve(double lr, std::size_t batch, std::size_t iters,
                                    std::size_t interval) override {
    (void)batch;
    double x = 1.0;
    std::vector<double> out;
    for (std::size_t t = 1; t <= iters; ++t) {
      x -= lr * l_ * x;
      if (t % interval == 0) out.push_back(0.5 * l_ * x * x);
      if (!std::isfinite(x)) break;
    }
    return out;
  }
  std::vector<double> validationCurve(double lr, std::size_t batch, std::size_t iters,
                                      std::size_t interval) override {
    return trainingCurve(lr, batch, iters, interval);
  }

 private:
  double l_;
};

}  // namespace

TEST_CASE("auto-tuning picks a stable rate on a toy problem") {
  QuadraticToy toy(0.5);  // threshold 2/L = 4
  AutoTuneConfig cfg;
  const auto r = autoTune(toy, cfg);
  CHECK(r.learningRate >= 1.0);
  CHECK(r.learningRate < 4.0);
  CHECK_FALSE(r.probes.empty());
}

TEST_CASE("auto-tuning with no budget returns the defaults") {
  QuadraticToy toy(0.5);
  AutoTuneConfig cfg;
  cfg.budget = 0;
  const auto r = autoTune(toy, cfg);
  CHECK(r.learningRate == 1.0);
  CHECK(r.batchSize == 20);
  CHECK(r.recordInterval == 50);
}

TEST_CASE("auto-tuning fails loudly without a stable rate") {
  QuadraticToy toy(1e6);
  AutoTuneConfig cfg;
  cfg.budget = 4;
  CHECK_THROWS_WITH_AS(autoTune(toy, cfg), doctest::Contains("probes"), ConfigError);
}

TEST_CASE("full-batch training curves are stable") {
  const auto f = smallProblem();
  MetamodelTuneProblem p(f.reps, f.training, f.validation, f.features, TrainConfig{});
  AutoTuneConfig cfg;
  CHECK(isStableCurve(p.trainingCurve(1.0, f.training.size(), 3000, 10), cfg));
}
