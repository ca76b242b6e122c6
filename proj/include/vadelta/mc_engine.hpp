#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vadelta/mortality.hpp"
#include "vadelta/portfolio.hpp"

namespace vadelta {

struct McConfig {
  std::size_t scenarioCount = 10000;
  double riskFreeRate = 0.03;  // continuously compounded
  double volatility = 0.20;
  double timeStepYears = 1.0;  // 1 / timeStepYears must be an integer
  double bumpFraction = 0.01;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
  int stepsPerYear() const;
};

/// Fund growth factors, one row per scenario, one column per time step.
class PathMatrix {
 public:
  PathMatrix(std::size_t scenarios, std::size_t steps, int stepsPerYear);

  std::size_t scenarios() const noexcept { return scenarios_; }
  std::size_t steps() const noexcept { return steps_; }
  int stepsPerYear() const noexcept { return stepsPerYear_; }
  int horizonYears() const noexcept {
    return static_cast<int>(steps_) / stepsPerYear_;
  }

  double& operator()(std::size_t s, std::size_t t) noexcept {
    return data_[s * steps_ + t];
  }
  double operator()(std::size_t s, std::size_t t) const noexcept {
    return data_[s * steps_ + t];
  }
  std::span<const double> scenario(std::size_t s) const noexcept {
    return {data_.data() + s * steps_, steps_};
  }

  bool operator==(const PathMatrix&) const = default;

 private:
  std::size_t scenarios_;
  std::size_t steps_;
  int stepsPerYear_;
  std::vector<double> data_;
};

/// Log-normal growth factors exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z).
PathMatrix generatePaths(const McConfig& cfg, int horizonYears,
                         std::uint64_t seed);

/// Discounted liability of one contract, averaged over the path matrix, with
/// the initial account value scaled by `initialScale`.
///
/// Cash-flow model, per scenario and policy year t = 1..maturity:
///   1. the account value grows by the year's fund factor;
///   2. GMWB: while guaranteed balance remains, W = rate * GW0 (capped at
///      the balance) is withdrawn at the anniversary; the account drops by W
///      (floored at 0), GD drops by W (floored at 0), and the insurer pays the
///      shortfall max(W - AV, 0) to survivors;
///   3. the death benefit max(GD - AV, 0) is paid for deaths in year t.
/// Mortality is an expected-value decrement from q_x; all flows are
/// discounted at the risk-free rate from the end of year t.
double projectContract(const VaContract& contract, const PathMatrix& paths,
                       const MortalityTable& mortality, const McConfig& cfg,
                       double initialScale);

struct McResult {
  std::int64_t id = 0;
  double liability = 0.0;
  /// dV / d(scale) at scale 1, i.e. dollar delta per unit relative move of
  /// the account value (S * dV/dS).
  double delta = 0.0;
  double standardError = 0.0;  // of the delta estimate
  std::size_t scenarioCount = 0;
};

/// Central-difference delta over common random numbers: both bumped
/// valuations use the same paths, seeded from (cfg.seed, contract.id).
McResult computeDelta(const VaContract& contract,
                      const MortalityTable& mortality, const McConfig& cfg);

/// As above with an explicit path matrix.
McResult computeDelta(const VaContract& contract, const PathMatrix& paths,
                      const MortalityTable& mortality, const McConfig& cfg);

struct PortfolioValuation {
  std::vector<McResult> results;  // same order as the input
  double aggregateDelta = 0.0;    // sum in input order
  double seconds = 0.0;
};

/// Values every contract (in parallel when cfg.threads != 1). Results do not
/// depend on the number of workers.
PortfolioValuation valuePortfolio(std::span<const VaContract> contracts,
                                  const MortalityTable& mortality,
                                  const McConfig& cfg);

/// Per-contract seed used by computeDelta.
std::uint64_t contractSeed(std::uint64_t baseSeed, std::int64_t id) noexcept;

// Results CSV: id,liability,delta,std_err
void writeResultsCsv(const std::filesystem::path& path,
                     std::span<const McResult> results);
std::vector<McResult> readResultsCsv(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0: hardware
/// concurrency). The first exception thrown by any worker is rethrown.
template <class Fn>
void parallelFor(std::size_t count, unsigned threads, Fn&& fn);

}  // namespace vadelta

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

template <class Fn>
void vadelta::parallelFor(std::size_t count, unsigned threads, Fn&& fn) {
  unsigned workers = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (workers == 0) workers = 1;
  if (workers > count) workers = static_cast<unsigned>(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failureMutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failureMutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}
