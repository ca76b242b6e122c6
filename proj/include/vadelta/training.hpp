#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "vadelta/metamodel.hpp"

namespace vadelta {

struct TrainConfig {
  double learningRate = 1.0;
  std::size_t batchSize = 20;
  double muMax = 0.99;
  std::size_t recordInterval = 50;   // I
  std::size_t smoothingWindow = 10;  // W-bar
  int polyDegree = 6;                // d
  std::size_t trendWindow = 4;       // W
  double relErrThreshold = 0.005;    // delta
  std::size_t maxIterations = 20000;
  std::uint64_t seed = 0;
  /// When false the trend event alone stops training.
  bool requireRelErr = true;
  /// When false training always runs to maxIterations.
  bool earlyStopping = true;
  /// Initial parameters; empty means zeros.
  std::vector<double> warmStart;

  /// Throws ConfigError on non-positive values or an odd degree.
  void validate() const;
};

enum class StopReason { None, TrendUShape, RelErrBelowDelta, MaxIterations };
std::string_view toString(StopReason r) noexcept;

struct TrainRecord {
  std::size_t iteration = 0;
  double trainMse = 0.0;  // loss over the whole training portfolio
  double valMse = 0.0;    // loss over the validation portfolio
  double mu = 0.0;        // momentum coefficient used at this iteration
};

struct TrainState {
  std::size_t iteration = 0;
  std::vector<double> params;
  std::vector<double> velocity;
  std::vector<TrainRecord> records;
  /// Smoothed and fitted validation series at the last stopping check.
  std::vector<double> smoothed;
  std::vector<double> trend;
  bool stopEvent = false;
  std::size_t stopEventIteration = 0;
  StopReason stopReason = StopReason::None;
};

/// min(1 - 2^{-1 - log2(floor(t/50) + 1)}, muMax).
double momentumCoeff(std::size_t t, double muMax);

using GradientFn =
    std::function<void(std::span<const double> point, std::span<double> grad)>;

/// One Nesterov step: the gradient is taken at params + mu v, then
/// v <- mu v - eps grad and params <- params + v. Advances the iteration.
void nagStep(TrainState& state, const TrainConfig& cfg, const GradientFn& gradAt);

struct StoppingCheck {
  bool event = false;
  std::vector<double> smoothed;
  std::vector<double> trend;
  std::size_t minIndex = 0;
};

/// Smooths the series with a centred moving average of width W-bar (the
/// window shrinks symmetrically at the ends), fits a least-squares
/// polynomial of degree d against the stamps and reports an event when the
/// fitted minimum lies before the last W values and those W values rise.
/// Fewer than W-bar + W records give no event.
StoppingCheck detectStopping(std::span<const double> stamps,
                             std::span<const double> values,
                             const TrainConfig& cfg);

/// |mean estimate - mean target| / |mean target| over the portfolio. Throws
/// NumericError when the target mean is zero.
double relativeError(const Metamodel& model, const ValuedPortfolio& validation);
bool relErrStop(const Metamodel& model, const ValuedPortfolio& validation,
                double delta);

struct TrainResult {
  Metamodel model;
  TrainState state;
};

/// Mini-batch NAG training from zero (or warm-start) parameters. Records
/// every I iterations; stops when the trend event has fired and the
/// relative error is below delta, or at maxIterations. Deterministic given
/// cfg.seed. Throws NumericError if the loss becomes non-finite.
TrainResult train(const ValuedPortfolio& reps, const ValuedPortfolio& training,
                  const ValuedPortfolio& validation,
                  const FeatureConfig& features, const TrainConfig& cfg);

}  // namespace vadelta
