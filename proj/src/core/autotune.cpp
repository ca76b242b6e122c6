#include "vadelta/autotune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "vadelta/error.hpp"

namespace vadelta {

namespace {

std::vector<double> movingAverage(const std::vector<double>& y, std::size_t window) {
  std::vector<double> out;
  if (y.size() < window || window == 0) return y;
  // Direct sums: a running sum cancels badly once the curve has fallen by
  // many orders of magnitude.
  for (std::size_t k = window; k <= y.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = k - window; j < k; ++j) s += y[j];
    out.push_back(s / static_cast<double>(window));
  }
  return out;
}

}  // namespace

bool isStableCurve(const std::vector<double>& curve, const AutoTuneConfig& cfg) {
  if (curve.size() < 2) return false;
  for (double v : curve)
    if (!std::isfinite(v)) return false;
  const auto s = movingAverage(curve, cfg.smoothingWindow);
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k] > (1.0 + cfg.jumpThreshold) * s[k - 1]) return false;
  return s.back() < s.front();
}

std::size_t majorTurns(const std::vector<double>& curve, const AutoTuneConfig& cfg) {
  const auto s = movingAverage(curve, cfg.smoothingWindow);
  if (s.size() < 3) return 0;
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  const double threshold = cfg.prominence * (*hi - *lo);
  if (!(threshold > 0.0)) return 0;
  // Zig-zag count: a turn is confirmed once the series retreats from the
  // running extreme by more than the threshold.
  std::size_t turns = 0;
  int dir = 0;
  double extreme = s.front();
  for (double v : s) {
    if (dir >= 0) {
      if (v > extreme) extreme = v;
      else if (extreme - v > threshold) {
        if (dir > 0) ++turns;
        dir = -1;
        extreme = v;
        continue;
      }
    }
    if (dir <= 0) {
      if (v < extreme) extreme = v;
      else if (v - extreme > threshold) {
        if (dir < 0) ++turns;
        dir = 1;
        extreme = v;
      }
    }
  }
  return turns;
}

TuneResult autoTune(TuneProblem& problem, const AutoTuneConfig& cfg) {
  TuneResult out;
  if (cfg.budget == 0) return out;
  std::size_t used = 0;
  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << what << "; probes:";
    for (const auto& p : out.probes) os << "\n  " << p;
    throw ConfigError(os.str());
  };
  auto stable = [&](double lr, std::size_t batch) -> std::optional<bool> {
    if (used >= cfg.budget) return std::nullopt;
    ++used;
    const auto c = problem.trainingCurve(lr, batch, cfg.probeIterations, cfg.probeInterval);
    const bool ok = isStableCurve(c, cfg);
    std::ostringstream os;
    os << "lr=" << lr << " batch=" << batch << (ok ? " stable" : " unstable");
    out.probes.push_back(os.str());
    return ok;
  };

  // Learning rate.
  const std::size_t probeBatch = std::min(cfg.initialBatch, problem.trainingSize());
  double good = 0.0, bad = 0.0;
  auto first = stable(1.0, probeBatch);
  if (!first) fail("probe budget exhausted");
  if (*first) {
    good = 1.0;
    for (;;) {
      auto r = stable(2.0 * good, probeBatch);
      if (!r) break;
      if (*r) good *= 2.0;
      else {
        bad = 2.0 * good;
        break;
      }
    }
  } else {
    bad = 1.0;
    for (;;) {
      auto r = stable(0.5 * bad, probeBatch);
      if (!r) fail("no stable learning rate found");
      if (*r) {
        good = 0.5 * bad;
        break;
      }
      bad *= 0.5;
    }
  }
  if (bad > 0.0) {
    for (int k = 0; k < cfg.bisectionSteps; ++k) {
      const double mid = 0.5 * (good + bad);
      auto r = stable(mid, probeBatch);
      if (!r) break;
      (*r ? good : bad) = mid;
    }
  }
  out.learningRate = good;

  // Batch size. A full batch is the exact gradient and counts as stable.
  std::size_t batch = std::min<std::size_t>(5, problem.trainingSize());
  for (;;) {
    if (batch >= problem.trainingSize()) {
      batch = problem.trainingSize();
      break;
    }
    auto r = stable(out.learningRate, batch);
    if (!r) fail("no stable batch size found");
    if (*r) break;
    batch *= 2;
  }
  out.batchSize = batch;

  // Record interval: one fine validation curve, subsampled at coarser I.
  if (used >= cfg.budget) {
    out.recordInterval = cfg.probeInterval;
    return out;
  }
  ++used;
  const auto fine = problem.validationCurve(out.learningRate, out.batchSize,
                                            cfg.probeIterations, cfg.probeInterval);
  const std::size_t reference = majorTurns(fine, cfg);
  std::size_t interval = cfg.probeInterval;
  for (;;) {
    const std::size_t next = interval * 2;
    const std::size_t stride = next / cfg.probeInterval;
    std::vector<double> coarse;
    for (std::size_t k = stride - 1; k < fine.size(); k += stride) coarse.push_back(fine[k]);
    if (coarse.size() < 2 * cfg.smoothingWindow) break;
    if (majorTurns(coarse, cfg) != reference) break;
    interval = next;
  }
  out.recordInterval = interval;
  std::ostringstream os;
  os << "interval=" << interval << " turns=" << reference;
  out.probes.push_back(os.str());
  return out;
}

// ---------------------------------------------------------------------------

MetamodelTuneProblem::MetamodelTuneProblem(ValuedPortfolio reps,
                                           ValuedPortfolio training,
                                           ValuedPortfolio validation,
                                           FeatureConfig features,
                                           TrainConfig base)
    : reps_(std::move(reps)),
      training_(std::move(training)),
      validation_(std::move(validation)),
      features_(std::move(features)),
      base_(std::move(base)) {}

std::vector<TrainRecord> MetamodelTuneProblem::run(double learningRate,
                                                   std::size_t batchSize,
                                                   std::size_t iterations,
                                                   std::size_t interval) {
  TrainConfig cfg = base_;
  cfg.learningRate = learningRate;
  cfg.batchSize = batchSize;
  cfg.maxIterations = iterations;
  cfg.recordInterval = interval;
  cfg.earlyStopping = false;
  try {
    return train(reps_, training_, validation_, features_, cfg).state.records;
  } catch (const NumericError&) {
    TrainRecord diverged;
    diverged.trainMse = diverged.valMse = std::numeric_limits<double>::infinity();
    return {diverged};
  }
}

std::vector<double> MetamodelTuneProblem::trainingCurve(double learningRate,
                                                        std::size_t batchSize,
                                                        std::size_t iterations,
                                                        std::size_t interval) {
  std::vector<double> out;
  for (const auto& r : run(learningRate, batchSize, iterations, interval))
    out.push_back(r.trainMse);
  return out;
}

std::vector<double> MetamodelTuneProblem::validationCurve(double learningRate,
                                                          std::size_t batchSize,
                                                          std::size_t iterations,
                                                          std::size_t interval) {
  std::vector<double> out;
  for (const auto& r : run(learningRate, batchSize, iterations, interval))
    out.push_back(r.valMse);
  return out;
}

}  // namespace vadelta
