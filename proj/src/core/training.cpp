#include "vadelta/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "vadelta/error.hpp"
#include "vadelta/random.hpp"

namespace vadelta {

void TrainConfig::validate() const {
  if (!(learningRate > 0.0) || !std::isfinite(learningRate))
    throw ConfigError("learning rate must be > 0");
  if (batchSize == 0) throw ConfigError("batch size must be >= 1");
  if (!(muMax >= 0.0 && muMax <= 1.0)) throw ConfigError("mu_max must lie in [0, 1]");
  if (recordInterval == 0) throw ConfigError("record interval must be >= 1");
  if (smoothingWindow == 0) throw ConfigError("smoothing window must be >= 1");
  if (polyDegree < 0 || polyDegree % 2 != 0)
    throw ConfigError("polynomial degree must be even and >= 0");
  if (trendWindow < 2) throw ConfigError("trend window must be >= 2");
  if (!(relErrThreshold > 0.0)) throw ConfigError("relative error threshold must be > 0");
}

std::string_view toString(StopReason r) noexcept {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::TrendUShape: return "trend_u_shape";
    case StopReason::RelErrBelowDelta: return "rel_err_below_delta";
    case StopReason::MaxIterations: return "max_iterations";
  }
  return "?";
}

double momentumCoeff(std::size_t t, double muMax) {
  const double k = std::floor(static_cast<double>(t) / 50.0) + 1.0;
  const double mu = 1.0 - std::exp2(-1.0 - std::log2(k));
  return std::min(mu, muMax);
}

void nagStep(TrainState& state, const TrainConfig& cfg, const GradientFn& gradAt) {
  const std::size_t p = state.params.size();
  if (state.velocity.size() != p) state.velocity.assign(p, 0.0);
  const std::size_t t = state.iteration + 1;
  const double mu = momentumCoeff(t, cfg.muMax);
  std::vector<double> look(p), grad(p);
  for (std::size_t k = 0; k < p; ++k) look[k] = state.params[k] + mu * state.velocity[k];
  gradAt(look, grad);
  for (std::size_t k = 0; k < p; ++k) {
    state.velocity[k] = mu * state.velocity[k] - cfg.learningRate * grad[k];
    state.params[k] += state.velocity[k];
  }
  state.iteration = t;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> smooth(std::span<const double> y, std::size_t window) {
  const std::size_t n = y.size();
  const std::size_t left = (window - 1) / 2, right = window / 2;
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t a, b;
    if (j >= left && j + right <= n - 1) {
      a = j - left;
      b = j + right;
    } else {
      const std::size_t m = std::min({j, n - 1 - j, left});
      a = j - m;
      b = j + m;
    }
    double s = 0.0;
    for (std::size_t k = a; k <= b; ++k) s += y[k];
    out[j] = s / static_cast<double>(b - a + 1);
  }
  return out;
}

// Legendre basis on [-1, 1] keeps the normal equations well conditioned.
Eigen::MatrixXd legendreBasis(const Eigen::VectorXd& x, int degree) {
  Eigen::MatrixXd p(x.size(), degree + 1);
  p.col(0).setOnes();
  if (degree >= 1) p.col(1) = x;
  for (int k = 2; k <= degree; ++k)
    p.col(k) = ((2.0 * k - 1.0) * x.cwiseProduct(p.col(k - 1)) -
                (k - 1.0) * p.col(k - 2)) / k;
  return p;
}

}  // namespace

StoppingCheck detectStopping(std::span<const double> stamps,
                             std::span<const double> values,
                             const TrainConfig& cfg) {
  if (stamps.size() != values.size())
    throw InvalidArgument("stamps and values differ in size");
  StoppingCheck out;
  const std::size_t n = values.size();
  const std::size_t w = cfg.trendWindow;
  if (n < cfg.smoothingWindow + w || n < 2) return out;

  out.smoothed = smooth(values, cfg.smoothingWindow);
  const double lo = stamps.front(), hi = stamps.back();
  if (!(hi > lo)) return out;
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  Eigen::VectorXd s(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    x(static_cast<Eigen::Index>(k)) = 2.0 * (stamps[k] - lo) / (hi - lo) - 1.0;
    s(static_cast<Eigen::Index>(k)) = out.smoothed[k];
  }
  const int degree = std::min<int>(cfg.polyDegree, static_cast<int>(n) - 1);
  const Eigen::MatrixXd basis = legendreBasis(x, degree);
  const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(s);
  const Eigen::VectorXd fit = basis * coef;
  out.trend.assign(fit.data(), fit.data() + n);

  out.minIndex = static_cast<std::size_t>(
      std::min_element(out.trend.begin(), out.trend.end()) - out.trend.begin());
  const std::size_t first = n - w;
  bool rising = out.trend.back() > out.trend[first];
  for (std::size_t k = first + 1; k < n && rising; ++k)
    rising = out.trend[k] >= out.trend[k - 1];
  out.event = out.minIndex <= first && rising;
  return out;
}

double relativeError(const Metamodel& model, const ValuedPortfolio& validation) {
  validation.validate();
  double est = 0.0, mc = 0.0;
  for (std::size_t k = 0; k < validation.size(); ++k) {
    est += model.estimate(validation.contracts[k]);
    mc += validation.deltas[k];
  }
  if (mc == 0.0)
    throw NumericError("mean validation delta is zero; relative error undefined");
  return std::abs(est - mc) / std::abs(mc);
}

bool relErrStop(const Metamodel& model, const ValuedPortfolio& validation,
                double delta) {
  return relativeError(model, validation) < delta;
}

// ---------------------------------------------------------------------------

TrainResult train(const ValuedPortfolio& reps, const ValuedPortfolio& training,
                  const ValuedPortfolio& validation,
                  const FeatureConfig& features, const TrainConfig& cfg) {
  cfg.validate();
  training.validate();
  validation.validate();
  TrainResult r{Metamodel(features, reps), {}};
  Metamodel& model = r.model;
  TrainState& st = r.state;
  model.seed = cfg.seed;
  if (!cfg.warmStart.empty()) model.setParameters(cfg.warmStart);
  st.params.assign(model.parameters().begin(), model.parameters().end());
  st.velocity.assign(st.params.size(), 0.0);

  const std::size_t batch = std::min(cfg.batchSize, training.size());
  std::vector<std::size_t> pool(training.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng gen(deriveSeed(cfg.seed, "batches"));

  std::vector<double> stamps, valSeries;
  auto record = [&] {
    model.setParameters(st.params);
    TrainRecord rec;
    rec.iteration = st.iteration;
    rec.trainMse = batchLoss(model, training);
    rec.valMse = batchLoss(model, validation);
    rec.mu = momentumCoeff(std::max<std::size_t>(st.iteration, 1), cfg.muMax);
    if (!std::isfinite(rec.trainMse) || !std::isfinite(rec.valMse))
      throw NumericError("loss became non-finite at iteration " +
                         std::to_string(st.iteration) + " (learning rate " +
                         std::to_string(cfg.learningRate) + " is unstable)");
    st.records.push_back(rec);
    stamps.push_back(static_cast<double>(rec.iteration));
    valSeries.push_back(rec.valMse);
  };

  record();
  if (cfg.maxIterations == 0) {
    st.stopReason = StopReason::MaxIterations;
    return r;
  }

  const GradientFn gradAt = [&](std::span<const double> point, std::span<double> grad) {
    for (std::size_t k = 0; k < batch; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(gen)]);
    }
    gradient(model, point, training, std::span(pool.data(), batch), grad);
  };

  while (st.iteration < cfg.maxIterations) {
    nagStep(st, cfg, gradAt);
    if (st.iteration % cfg.recordInterval != 0 && st.iteration != cfg.maxIterations)
      continue;
    record();
    if (!cfg.earlyStopping) continue;
    if (!st.stopEvent) {
      auto check = detectStopping(stamps, valSeries, cfg);
      st.smoothed = std::move(check.smoothed);
      st.trend = std::move(check.trend);
      if (check.event) {
        st.stopEvent = true;
        st.stopEventIteration = st.iteration;
      }
    }
    if (st.stopEvent) {
      if (!cfg.requireRelErr) {
        st.stopReason = StopReason::TrendUShape;
        break;
      }
      if (relErrStop(model, validation, cfg.relErrThreshold)) {
        st.stopReason = StopReason::RelErrBelowDelta;
        break;
      }
    }
  }
  if (st.stopReason == StopReason::None) st.stopReason = StopReason::MaxIterations;
  model.setParameters(st.params);
  return r;
}

}  // namespace vadelta
