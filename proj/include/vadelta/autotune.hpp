#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vadelta/training.hpp"

namespace vadelta {

/// Something that can be trained for a fixed number of iterations and
/// report its loss curves, one value per record.
class TuneProblem {
 public:
  virtual ~TuneProblem() = default;
  virtual std::size_t trainingSize() const = 0;
  /// Training loss recorded every `interval` iterations. A diverged run
  /// ends with a non-finite value.
  virtual std::vector<double> trainingCurve(double learningRate,
                                            std::size_t batchSize,
                                            std::size_t iterations,
                                            std::size_t interval) = 0;
  virtual std::vector<double> validationCurve(double learningRate,
                                              std::size_t batchSize,
                                              std::size_t iterations,
                                              std::size_t interval) = 0;
};

struct AutoTuneConfig {
  std::size_t budget = 24;            // probe runs; 0 returns the defaults
  std::size_t probeIterations = 3000;
  std::size_t probeInterval = 10;
  std::size_t smoothingWindow = 10;
  double jumpThreshold = 0.5;         // relative rise between smoothed records
  double prominence = 0.1;            // of the smoothed range, for peaks
  int bisectionSteps = 3;
  std::size_t initialBatch = 20;      // used while the rate is tuned
};

struct TuneResult {
  double learningRate = 1.0;
  std::size_t batchSize = 20;
  std::size_t recordInterval = 50;
  std::vector<std::string> probes;  // one line per probe run
};

/// Finite, ends lower than it starts and never jumps up by more than the
/// threshold between consecutive smoothed records.
bool isStableCurve(const std::vector<double>& curve, const AutoTuneConfig& cfg);

/// Number of smoothed local extrema whose prominence exceeds the configured
/// fraction of the curve's range.
std::size_t majorTurns(const std::vector<double>& curve, const AutoTuneConfig& cfg);

/// Learning rate by doubling from 1 then bisection (halving when 1 is
/// unstable), batch size by doubling from 5 until stable, record interval
/// by doubling from 10 while the count of major turns is unchanged. Throws
/// ConfigError listing the probes when no stable setting fits the budget.
TuneResult autoTune(TuneProblem& problem, const AutoTuneConfig& cfg);

/// Probes the network on MC-valued portfolios.
class MetamodelTuneProblem final : public TuneProblem {
 public:
  MetamodelTuneProblem(ValuedPortfolio reps, ValuedPortfolio training,
                       ValuedPortfolio validation, FeatureConfig features,
                       TrainConfig base);
  std::size_t trainingSize() const override { return training_.size(); }
  std::vector<double> trainingCurve(double learningRate, std::size_t batchSize,
                                    std::size_t iterations,
                                    std::size_t interval) override;
  std::vector<double> validationCurve(double learningRate, std::size_t batchSize,
                                      std::size_t iterations,
                                      std::size_t interval) override;

 private:
  std::vector<TrainRecord> run(double learningRate, std::size_t batchSize,
                               std::size_t iterations, std::size_t interval);
  ValuedPortfolio reps_, training_, validation_;
  FeatureConfig features_;
  TrainConfig base_;
};

}  // namespace vadelta
