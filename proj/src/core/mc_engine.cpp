#include "vadelta/mc_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "vadelta/csv.hpp"
#include "vadelta/error.hpp"
#include "vadelta/random.hpp"

namespace vadelta {

void McConfig::validate() const {
  if (scenarioCount < 1) throw ConfigError("scenario count must be >= 1");
  if (!(volatility >= 0.0)) throw ConfigError("volatility must be >= 0");
  if (!(bumpFraction > 0.0 && bumpFraction < 1.0))
    throw ConfigError("bump fraction must lie in (0, 1)");
  if (!std::isfinite(riskFreeRate)) throw ConfigError("risk-free rate must be finite");
  stepsPerYear();
}

int McConfig::stepsPerYear() const {
  if (!(timeStepYears > 0.0) || timeStepYears > 1.0)
    throw ConfigError("time step must lie in (0, 1] years");
  const double n = 1.0 / timeStepYears;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9)
    throw ConfigError("1 / time step must be an integer");
  return static_cast<int>(r);
}

PathMatrix::PathMatrix(std::size_t scenarios, std::size_t steps,
                       int stepsPerYear)
    : scenarios_(scenarios),
      steps_(steps),
      stepsPerYear_(stepsPerYear),
      data_(scenarios * steps, 1.0) {}

PathMatrix generatePaths(const McConfig& cfg, int horizonYears,
                         std::uint64_t seed) {
  cfg.validate();
  if (horizonYears < 1) throw InvalidArgument("horizon must be >= 1 year");
  const int perYear = cfg.stepsPerYear();
  const std::size_t steps = static_cast<std::size_t>(horizonYears) * perYear;
  PathMatrix paths(cfg.scenarioCount, steps, perYear);

  const double dt = cfg.timeStepYears;
  const double drift =
      (cfg.riskFreeRate - 0.5 * cfg.volatility * cfg.volatility) * dt;
  const double diffusion = cfg.volatility * std::sqrt(dt);
  if (diffusion == 0.0) {
    const double g = std::exp(drift);
    for (std::size_t s = 0; s < paths.scenarios(); ++s)
      for (std::size_t t = 0; t < steps; ++t) paths(s, t) = g;
    return paths;
  }
  Rng gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t s = 0; s < paths.scenarios(); ++s)
    for (std::size_t t = 0; t < steps; ++t)
      paths(s, t) = std::exp(drift + diffusion * z(gen));
  return paths;
}

namespace {

// Deterministic per-contract quantities shared by every scenario.
struct Schedule {
  std::vector<double> discount;   // e^{-mu t}
  std::vector<double> survival;   // P(alive at end of year t)
  std::vector<double> deathProb;  // P(die in year t)
};

Schedule buildSchedule(const VaContract& c, const MortalityTable& mortality,
                       const McConfig& cfg) {
  Schedule s;
  double alive = 1.0;
  for (int t = 1; t <= c.maturity; ++t) {
    const double q = mortality.qx(c.gender, c.age + t - 1);
    s.deathProb.push_back(alive * q);
    alive *= 1.0 - q;
    s.survival.push_back(alive);
    s.discount.push_back(std::exp(-cfg.riskFreeRate * t));
  }
  return s;
}

void checkContract(const VaContract& c, const PathMatrix& paths) {
  if (c.maturity < 1)
    throw InvalidArgument("contract " + std::to_string(c.id) +
                          ": maturity must be >= 1");
  if (c.maturity > paths.horizonYears())
    throw InvalidArgument("contract " + std::to_string(c.id) + ": maturity " +
                          std::to_string(c.maturity) +
                          " exceeds path horizon " +
                          std::to_string(paths.horizonYears()));
  if (c.accountValue < 0 || c.gdValue < 0 || c.gwValue < 0)
    throw InvalidArgument("contract " + std::to_string(c.id) +
                          ": negative currency attribute");
}

// Discounted payout along one scenario.
double scenarioLiability(const VaContract& c, std::span<const double> growth,
                         int stepsPerYear, const Schedule& sched,
                         double scale) {
  double av = scale * c.accountValue;
  double gd = c.gdValue;
  const bool gmwb = c.rider == Rider::GmdbPlusGmwb;
  double balance = gmwb ? c.gwValue : 0.0;
  const double annual = c.withdrawalRate * c.gwValue;
  double pv = 0.0;
  std::size_t step = 0;
  for (int t = 0; t < c.maturity; ++t) {
    for (int k = 0; k < stepsPerYear; ++k) av *= growth[step++];
    if (gmwb && balance > 0.0 && annual > 0.0) {
      const double w = std::min(annual, balance);
      const double shortfall = std::max(w - av, 0.0);
      av = std::max(av - w, 0.0);
      balance -= w;
      gd = std::max(gd - w, 0.0);
      pv += sched.discount[t] * sched.survival[t] * shortfall;
    }
    pv += sched.discount[t] * sched.deathProb[t] * std::max(gd - av, 0.0);
  }
  return pv;
}

}  // namespace

double projectContract(const VaContract& contract, const PathMatrix& paths,
                       const MortalityTable& mortality, const McConfig& cfg,
                       double initialScale) {
  if (!(initialScale > 0.0)) throw InvalidArgument("initial scale must be > 0");
  checkContract(contract, paths);
  const Schedule sched = buildSchedule(contract, mortality, cfg);
  double sum = 0.0;
  for (std::size_t s = 0; s < paths.scenarios(); ++s)
    sum += scenarioLiability(contract, paths.scenario(s), paths.stepsPerYear(),
                             sched, initialScale);
  return sum / static_cast<double>(paths.scenarios());
}

std::uint64_t contractSeed(std::uint64_t baseSeed, std::int64_t id) noexcept {
  return deriveSeed(baseSeed, "contract", static_cast<std::uint64_t>(id));
}

McResult computeDelta(const VaContract& contract, const PathMatrix& paths,
                      const MortalityTable& mortality, const McConfig& cfg) {
  cfg.validate();
  checkContract(contract, paths);
  const Schedule sched = buildSchedule(contract, mortality, cfg);
  const double h = cfg.bumpFraction;
  const std::size_t n = paths.scenarios();

  // Welford accumulation of the per-scenario central difference.
  double mean = 0.0, m2 = 0.0, base = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto row = paths.scenario(s);
    const double up = scenarioLiability(contract, row, paths.stepsPerYear(), sched, 1.0 + h);
    const double down = scenarioLiability(contract, row, paths.stepsPerYear(), sched, 1.0 - h);
    base += scenarioLiability(contract, row, paths.stepsPerYear(), sched, 1.0);
    const double d = (up - down) / (2.0 * h);
    const double delta = d - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (d - mean);
  }
  McResult r;
  r.id = contract.id;
  r.liability = base / static_cast<double>(n);
  r.delta = mean;
  r.standardError =
      n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))
            : 0.0;
  r.scenarioCount = n;
  return r;
}

McResult computeDelta(const VaContract& contract,
                      const MortalityTable& mortality, const McConfig& cfg) {
  cfg.validate();
  if (contract.maturity < 1)
    throw InvalidArgument("contract " + std::to_string(contract.id) +
                          ": maturity must be >= 1");
  const PathMatrix paths =
      generatePaths(cfg, contract.maturity, contractSeed(cfg.seed, contract.id));
  return computeDelta(contract, paths, mortality, cfg);
}

PortfolioValuation valuePortfolio(std::span<const VaContract> contracts,
                                  const MortalityTable& mortality,
                                  const McConfig& cfg) {
  if (contracts.empty()) throw InvalidArgument("cannot value an empty portfolio");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  PortfolioValuation out;
  out.results.resize(contracts.size());
  parallelFor(contracts.size(), cfg.threads, [&](std::size_t i) {
    out.results[i] = computeDelta(contracts[i], mortality, cfg);
  });
  for (const auto& r : out.results) out.aggregateDelta += r.delta;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void writeResultsCsv(const std::filesystem::path& path,
                     std::span<const McResult> results) {
  std::ostringstream os;
  os << "id,liability,delta,std_err\n";
  for (const auto& r : results)
    os << r.id << ',' << csv::formatDouble(r.liability) << ','
       << csv::formatDouble(r.delta) << ',' << csv::formatDouble(r.standardError)
       << '\n';
  csv::writeText(path, os.str());
}

std::vector<McResult> readResultsCsv(const std::filesystem::path& path) {
  const auto t = csv::readTable(path);
  const auto ci = t.column("id"), cl = t.column("liability"),
             cd = t.column("delta"), cs = t.column("std_err");
  std::vector<McResult> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    McResult r;
    r.id = csv::parseInt(row[ci]);
    r.liability = csv::parseDouble(row[cl]);
    r.delta = csv::parseDouble(row[cd]);
    r.standardError = csv::parseDouble(row[cs]);
    out.push_back(r);
  }
  return out;
}

}  // namespace vadelta
