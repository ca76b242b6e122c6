#include "vadelta/interpolation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "vadelta/error.hpp"

namespace vadelta {

double Estimator::aggregate(std::span<const VaContract> portfolio) const {
  double sum = 0.0;
  for (const auto& q : portfolio) sum += estimate(q);
  return sum;
}

// ---------------------------------------------------------------------------

double idwEstimate(const RepresentativeSet& reps, const VaContract& query,
                   double power, double maxAge, double gamma) {
  reps.validate();
  if (!(power > 0.0)) throw InvalidArgument("IDW power must be > 0");
  const std::size_t n = reps.size();
  std::vector<double> logWeight(n);
  double exactSum = 0.0;
  std::size_t exactCount = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = idwDistance(query, reps.contracts[i], maxAge, gamma);
    if (d == 0.0) {
      exactSum += reps.deltas[i];
      ++exactCount;
    }
    logWeight[i] = -power * std::log(d);
  }
  if (exactCount > 0) return exactSum / static_cast<double>(exactCount);

  // Weights are formed in log space so that large powers do not overflow.
  const double top = *std::max_element(logWeight.begin(), logWeight.end());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(logWeight[i] - top);
    num += w * reps.deltas[i];
    den += w;
  }
  return num / den;
}

IdwEstimator::IdwEstimator(RepresentativeSet reps, double power, double maxAge,
                           double gamma)
    : reps_(std::move(reps)), power_(power), maxAge_(maxAge), gamma_(gamma) {
  reps_.validate();
  if (!(power_ > 0.0)) throw InvalidArgument("IDW power must be > 0");
}

double IdwEstimator::estimate(const VaContract& query) const {
  return idwEstimate(reps_, query, power_, maxAge_, gamma_);
}

// ---------------------------------------------------------------------------

double VariogramModel::operator()(double h) const noexcept {
  if (h <= 0.0) return 0.0;
  const double partial = sill - nugget;
  if (kind == VariogramKind::Spherical) {
    if (h >= range) return sill;
    const double x = h / range;
    return nugget + partial * (1.5 * x - 0.5 * x * x * x);
  }
  return nugget + partial * (1.0 - std::exp(-3.0 * h / range));
}

void VariogramModel::validate() const {
  if (!(nugget >= 0.0) || !(sill >= nugget) || !(range > 0.0) ||
      !std::isfinite(sill) || !std::isfinite(range))
    throw InvalidArgument("variogram requires 0 <= nugget <= sill and range > 0");
}

EmpiricalVariogram empiricalVariogram(const RepresentativeSet& reps,
                                      const AttributeRanges& ranges,
                                      double gamma, std::size_t bins) {
  reps.validate();
  if (bins == 0) throw InvalidArgument("variogram needs at least one bin");
  const std::size_t n = reps.size();
  std::vector<double> dist;
  std::vector<double> semi;
  dist.reserve(n * (n - 1) / 2);
  semi.reserve(n * (n - 1) / 2);
  double maxD = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = krigingDistance(reps.contracts[i], reps.contracts[j], ranges, gamma);
      const double diff = reps.deltas[i] - reps.deltas[j];
      dist.push_back(d);
      semi.push_back(0.5 * diff * diff);
      maxD = std::max(maxD, d);
    }
  if (!(maxD > 0.0))
    throw InvalidArgument(
        "all representatives coincide; no spatial structure to fit");

  const double width = maxD / static_cast<double>(bins);
  std::vector<double> sumD(bins, 0.0), sumG(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t k = 0; k < dist.size(); ++k) {
    auto b = static_cast<std::size_t>(dist[k] / width);
    if (b >= bins) b = bins - 1;
    sumD[b] += dist[k];
    sumG[b] += semi[k];
    ++count[b];
  }
  EmpiricalVariogram ev;
  ev.maxDistance = maxD;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    ev.lag.push_back(sumD[b] / static_cast<double>(count[b]));
    ev.value.push_back(sumG[b] / static_cast<double>(count[b]));
    ev.pairs.push_back(count[b]);
  }
  return ev;
}

namespace {

struct LinearFit {
  double nugget = 0.0;
  double partial = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

// For a fixed range the model is linear in (nugget, partial sill); solve the
// two-variable nonnegative least squares problem by checking the interior
// solution and the faces of the feasible quadrant.
LinearFit fitForRange(const EmpiricalVariogram& ev, VariogramKind kind,
                      double range) {
  VariogramModel unit{kind, 0.0, 1.0, range};
  const std::size_t m = ev.lag.size();
  std::vector<double> s(m);
  for (std::size_t b = 0; b < m; ++b) s[b] = unit(ev.lag[b]);

  double sw = 0, ss = 0, sv = 0, sss = 0, ssv = 0;
  for (std::size_t b = 0; b < m; ++b) {
    const double w = static_cast<double>(ev.pairs[b]);
    sw += w;
    ss += w * s[b];
    sv += w * ev.value[b];
    sss += w * s[b] * s[b];
    ssv += w * s[b] * ev.value[b];
  }
  auto sse = [&](double n0, double c) {
    double e = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      const double r = ev.value[b] - n0 - c * s[b];
      e += static_cast<double>(ev.pairs[b]) * r * r;
    }
    return e;
  };
  LinearFit best;
  auto consider = [&](double n0, double c) {
    if (n0 < 0.0 || c < 0.0 || !std::isfinite(n0) || !std::isfinite(c)) return;
    const double e = sse(n0, c);
    if (e < best.sse) best = {n0, c, e};
  };
  const double det = sw * sss - ss * ss;
  if (std::abs(det) > 1e-12 * std::max(1.0, sw * sss))
    consider((sss * sv - ss * ssv) / det, (sw * ssv - ss * sv) / det);
  if (sss > 0.0) consider(0.0, std::max(0.0, ssv / sss));
  consider(std::max(0.0, sv / sw), 0.0);
  consider(0.0, 0.0);
  return best;
}

}  // namespace

VariogramModel fitVariogram(const EmpiricalVariogram& ev, VariogramKind kind) {
  if (ev.lag.empty() || !(ev.maxDistance > 0.0))
    throw InvalidArgument("empty empirical variogram");

  // Coarse log-spaced scan over the range, then golden-section refinement in
  // log(range) between the neighbours of the best candidate.
  const double lo = std::log(ev.maxDistance * 0.01);
  const double hi = std::log(ev.maxDistance * 5.0);
  constexpr int kScan = 100;
  std::vector<double> grid(kScan);
  int bestIdx = 0;
  double bestSse = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kScan; ++k) {
    grid[k] = lo + (hi - lo) * k / (kScan - 1);
    const double e = fitForRange(ev, kind, std::exp(grid[k])).sse;
    if (e < bestSse) {
      bestSse = e;
      bestIdx = k;
    }
  }
  double a = grid[std::max(0, bestIdx - 1)];
  double b = grid[std::min(kScan - 1, bestIdx + 1)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double x) { return fitForRange(ev, kind, std::exp(x)).sse; };
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  double logRange = 0.5 * (a + b);
  if (f(logRange) > bestSse) logRange = grid[bestIdx];
  const double range = std::exp(logRange);
  const LinearFit fit = fitForRange(ev, kind, range);
  return VariogramModel{kind, fit.nugget, fit.nugget + fit.partial, range};
}

VariogramModel fitVariogram(const RepresentativeSet& reps, VariogramKind kind,
                            const AttributeRanges& ranges, double gamma) {
  if (reps.size() < 10)
    throw InvalidArgument("variogram fitting needs at least 10 representatives");
  return fitVariogram(empiricalVariogram(reps, ranges, gamma), kind);
}

namespace {

constexpr double kJitter = 1e-10;

bool wellConditioned(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
  const double rc = lu.rcond();
  return std::isfinite(rc) && rc > 1e-15;
}

}  // namespace

KrigingEstimator::KrigingEstimator(RepresentativeSet reps, VariogramModel model,
                                   AttributeRanges ranges, double gamma)
    : reps_(std::move(reps)), model_(model), ranges_(ranges), gamma_(gamma) {
  reps_.validate();
  model_.validate();
  ranges_.validate();
  const auto n = static_cast<Eigen::Index>(reps_.size());
  Eigen::MatrixXd a(n + 1, n + 1);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double g = model_(krigingDistance(reps_.contracts[i], reps_.contracts[j], ranges_, gamma_));
      a(i, j) = a(j, i) = g;
      scale = std::max(scale, std::abs(g));
    }
    a(i, n) = a(n, i) = 1.0;
  }
  a(n, n) = 0.0;
  lu_.compute(a);
  if (!wellConditioned(lu_)) {
    const double jitter = kJitter * (scale > 0.0 ? scale : 1.0);
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) += jitter;
    lu_.compute(a);
    jittered_ = true;
    if (!(lu_.rcond() > 0.0) || !std::isfinite(lu_.rcond()))
      throw NumericError("kriging system is singular even after jitter");
  }
}

Eigen::VectorXd KrigingEstimator::rhs(const VaContract& query) const {
  const auto n = static_cast<Eigen::Index>(reps_.size());
  Eigen::VectorXd b(n + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    b(i) = model_(krigingDistance(query, reps_.contracts[i], ranges_, gamma_));
  b(n) = 1.0;
  return b;
}

std::vector<double> KrigingEstimator::weights(const VaContract& query) const {
  const Eigen::VectorXd w = lu_.solve(rhs(query));
  return {w.data(), w.data() + reps_.size()};
}

double KrigingEstimator::estimate(const VaContract& query) const {
  const Eigen::VectorXd w = lu_.solve(rhs(query));
  double sum = 0.0;
  for (std::size_t i = 0; i < reps_.size(); ++i)
    sum += w(static_cast<Eigen::Index>(i)) * reps_.deltas[i];
  return sum;
}

double KrigingEstimator::aggregate(std::span<const VaContract> portfolio) const {
  const auto n = static_cast<Eigen::Index>(reps_.size());
  Eigen::VectorXd total = Eigen::VectorXd::Zero(n + 1);
  for (const auto& q : portfolio) total += rhs(q);
  const Eigen::VectorXd w = lu_.solve(total);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += w(i) * reps_.deltas[static_cast<std::size_t>(i)];
  return sum;
}

// ---------------------------------------------------------------------------

RbfEstimator::RbfEstimator(RepresentativeSet reps, double epsilon,
                           AttributeRanges ranges, double gamma)
    : reps_(std::move(reps)), epsilon_(epsilon), ranges_(ranges), gamma_(gamma) {
  reps_.validate();
  ranges_.validate();
  if (!(epsilon_ > 0.0)) throw InvalidArgument("RBF epsilon must be > 0");
  const auto n = static_cast<Eigen::Index>(reps_.size());
  Eigen::MatrixXd phi(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = krigingDistance(reps_.contracts[i], reps_.contracts[j], ranges_, gamma_);
      if (d == 0.0)
        throw InvalidArgument("duplicate representatives " +
                              std::to_string(reps_.contracts[i].id) + " and " +
                              std::to_string(reps_.contracts[j].id));
      const double e = epsilon_ * d;
      phi(i, j) = phi(j, i) = std::exp(-e * e);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> y(reps_.deltas.data(), n);
  Eigen::LLT<Eigen::MatrixXd> llt(phi);
  if (llt.info() == Eigen::Success) {
    lambda_ = llt.solve(y);
  }
  if (llt.info() != Eigen::Success || !lambda_.allFinite()) {
    phi.diagonal().array() += kJitter;
    jittered_ = true;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(phi);
    lambda_ = lu.solve(y);
    if (!lambda_.allFinite())
      throw NumericError("RBF system is singular even after jitter");
  }
}

double RbfEstimator::estimate(const VaContract& query) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < reps_.size(); ++i) {
    const double e = epsilon_ * krigingDistance(query, reps_.contracts[i], ranges_, gamma_);
    sum += lambda_(static_cast<Eigen::Index>(i)) * std::exp(-e * e);
  }
  return sum;
}

double RbfEstimator::aggregate(std::span<const VaContract> portfolio) const {
  const auto n = reps_.size();
  std::vector<double> basisSum(n, 0.0);
  for (const auto& q : portfolio)
    for (std::size_t i = 0; i < n; ++i) {
      const double e = epsilon_ * krigingDistance(q, reps_.contracts[i], ranges_, gamma_);
      basisSum[i] += std::exp(-e * e);
    }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += lambda_(static_cast<Eigen::Index>(i)) * basisSum[i];
  return sum;
}

// ---------------------------------------------------------------------------

PortfolioEstimate portfolioEstimate(const Estimator& estimator,
                                    std::span<const VaContract> portfolio,
                                    bool perPolicy) {
  using clock = std::chrono::steady_clock;
  PortfolioEstimate out;
  auto t0 = clock::now();
  out.aggregate = estimator.aggregate(portfolio);
  out.portfolioSeconds = std::chrono::duration<double>(clock::now() - t0).count();
  if (perPolicy) {
    t0 = clock::now();
    out.perPolicy.reserve(portfolio.size());
    for (const auto& q : portfolio) {
      out.perPolicy.push_back(estimator.estimate(q));
      out.perPolicyAggregate += out.perPolicy.back();
    }
    out.perPolicySeconds = std::chrono::duration<double>(clock::now() - t0).count();
  }
  return out;
}

}  // namespace vadelta
