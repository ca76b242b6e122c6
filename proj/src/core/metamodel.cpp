#include "vadelta/metamodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vadelta/error.hpp"
#include "vadelta/mc_engine.hpp"

namespace vadelta {

std::string_view toString(Categorical c) noexcept {
  return c == Categorical::Rider ? "rider" : "gender";
}

std::string_view toString(Transform t) noexcept {
  switch (t) {
    case Transform::Maturity: return "maturity";
    case Transform::Age: return "age";
    case Transform::AccountValue: return "account_value";
    case Transform::GdOverAv: return "gd_over_av";
    case Transform::GwOverAv: return "gw_over_av";
    case Transform::WithdrawalRate: return "withdrawal_rate";
  }
  return "?";
}

Categorical parseCategorical(std::string_view s) {
  if (s == "rider") return Categorical::Rider;
  if (s == "gender") return Categorical::Gender;
  throw ConfigError("unknown categorical feature '" + std::string(s) + "'");
}

Transform parseTransform(std::string_view s) {
  for (auto t : {Transform::Maturity, Transform::Age, Transform::AccountValue,
                 Transform::GdOverAv, Transform::GwOverAv,
                 Transform::WithdrawalRate})
    if (toString(t) == s) return t;
  throw ConfigError("unknown transform '" + std::string(s) + "'");
}

void FeatureConfig::validate() const {
  for (const auto& t : transforms)
    if (!(t.range > 0.0) || !std::isfinite(t.range))
      throw ConfigError("range of transform " + std::string(toString(t.kind)) +
                        " must be positive");
}

FeatureConfig FeatureConfig::fromSpace(const GenerationSpace& space) {
  space.validate();
  const double avLo = space.accountValue.min(), avHi = space.accountValue.max();
  const double gLo = space.guaranteeValue.min(), gHi = space.guaranteeValue.max();
  const bool gmdbOnly = std::find(space.riders.begin(), space.riders.end(),
                                  Rider::GmdbOnly) != space.riders.end();
  const bool gmwb = std::find(space.riders.begin(), space.riders.end(),
                              Rider::GmdbPlusGmwb) != space.riders.end();
  // Ratio extremes. AV = 0 would make them unbounded; such contracts are
  // mapped to the upper end.
  const double avFloor = avLo > 0.0 ? avLo : avHi;
  const double gdMax = gHi / avFloor, gdMin = gLo / avHi;
  const double gwMax = gmwb ? gHi / avFloor : 0.0;
  const double gwMin = gmdbOnly ? 0.0 : gLo / avHi;

  auto span = [](double lo, double hi) { return hi > lo ? hi - lo : 1.0; };
  FeatureConfig cfg;
  cfg.categorical = {Categorical::Rider, Categorical::Gender};
  cfg.transforms = {
      {Transform::Maturity, span(space.maturity.min(), space.maturity.max()), space.maturity.max()},
      {Transform::Age, span(space.age.min(), space.age.max()), space.age.max()},
      {Transform::AccountValue, span(avLo, avHi), avHi},
      {Transform::GdOverAv, span(gdMin, gdMax), gdMax},
      {Transform::GwOverAv, span(gwMin, gwMax), gwMax},
      {Transform::WithdrawalRate, span(space.withdrawalRate.min(), space.withdrawalRate.max()),
       space.withdrawalRate.max()},
  };
  return cfg;
}

double transformValue(const TransformSpec& spec, const VaContract& c) noexcept {
  switch (spec.kind) {
    case Transform::Maturity: return c.maturity;
    case Transform::Age: return c.age;
    case Transform::AccountValue: return c.accountValue;
    case Transform::GdOverAv:
      return c.accountValue > 0.0 ? c.gdValue / c.accountValue : spec.upper;
    case Transform::GwOverAv:
      return c.accountValue > 0.0 ? c.gwValue / c.accountValue : spec.upper;
    case Transform::WithdrawalRate: return c.withdrawalRate;
  }
  return 0.0;
}

namespace {

double categoricalMismatch(Categorical c, const VaContract& x,
                           const VaContract& y) {
  if (c == Categorical::Rider) return x.rider != y.rider ? 1.0 : 0.0;
  return x.gender != y.gender ? 1.0 : 0.0;
}

}  // namespace

std::vector<double> buildFeatures(const VaContract& query,
                                  const VaContract& rep,
                                  const FeatureConfig& cfg) {
  std::vector<double> f;
  f.reserve(cfg.featureCount());
  for (auto c : cfg.categorical) f.push_back(categoricalMismatch(c, query, rep));
  const std::size_t base = f.size();
  f.resize(cfg.featureCount(), 0.0);
  const std::size_t nt = cfg.transforms.size();
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& spec = cfg.transforms[t];
    const double d = transformValue(spec, rep) - transformValue(spec, query);
    f[base + t] = std::max(d, 0.0) / spec.range;
    f[base + nt + t] = std::max(-d, 0.0) / spec.range;
  }
  return f;
}

// ---------------------------------------------------------------------------

Metamodel::Metamodel(FeatureConfig features, ValuedPortfolio reps)
    : features_(std::move(features)), reps_(std::move(reps)) {
  features_.validate();
  reps_.validate();
  const std::size_t nt = features_.transforms.size();
  repTransforms_.resize(reps_.size() * nt);
  for (std::size_t i = 0; i < reps_.size(); ++i)
    for (std::size_t t = 0; t < nt; ++t)
      repTransforms_[i * nt + t] = transformValue(features_.transforms[t], reps_.contracts[i]);
  params_.assign(parameterCount(), 0.0);
  double m = 0.0;
  for (double y : reps_.deltas) m = std::max(m, std::abs(y));
  scale_ = m > 0.0 ? m : 1.0;
}

void Metamodel::setParameters(std::span<const double> params) {
  if (params.size() != params_.size())
    throw InvalidArgument("expected " + std::to_string(params_.size()) +
                          " parameters, got " + std::to_string(params.size()));
  std::copy(params.begin(), params.end(), params_.begin());
}

void Metamodel::featureRows(const VaContract& query, std::span<double> out) const {
  const std::size_t nf = featureCount();
  const std::size_t nc = features_.categorical.size();
  const std::size_t nt = features_.transforms.size();
  double tq[16];
  std::vector<double> tqHeap;
  double* q = tq;
  if (nt > 16) {
    tqHeap.resize(nt);
    q = tqHeap.data();
  }
  for (std::size_t t = 0; t < nt; ++t)
    q[t] = transformValue(features_.transforms[t], query);
  for (std::size_t i = 0; i < size(); ++i) {
    double* row = out.data() + i * nf;
    for (std::size_t c = 0; c < nc; ++c)
      row[c] = categoricalMismatch(features_.categorical[c], query, reps_.contracts[i]);
    const double* rt = repTransforms_.data() + i * nt;
    for (std::size_t t = 0; t < nt; ++t) {
      const double d = rt[t] - q[t];
      const double r = features_.transforms[t].range;
      row[nc + t] = d > 0.0 ? d / r : 0.0;
      row[nc + nt + t] = d < 0.0 ? -d / r : 0.0;
    }
  }
}

namespace {

// Softmax outputs for one query from precomputed feature rows. Returns the
// estimate in original units.
double softmax(const Metamodel& m, std::span<const double> params,
               std::span<const double> rows, std::span<double> outputs) {
  const std::size_t n = m.size(), nf = m.featureCount();
  const double* bias = params.data() + n * nf;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double* w = params.data() + i * nf;
    const double* f = rows.data() + i * nf;
    double a = bias[i];
    for (std::size_t k = 0; k < nf; ++k) a += w[k] * f[k];
    outputs[i] = a;
    top = std::max(top, a);
  }
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    outputs[i] = std::exp(outputs[i] - top);
    den += outputs[i];
  }
  double y = 0.0;
  const auto& deltas = m.representatives().deltas;
  for (std::size_t i = 0; i < n; ++i) {
    outputs[i] /= den;
    y += outputs[i] * deltas[i];
  }
  return y;
}

void checkParams(const Metamodel& m, std::span<const double> params) {
  if (params.size() != m.parameterCount())
    throw InvalidArgument("parameter vector has the wrong size");
}

}  // namespace

ForwardResult Metamodel::forward(const VaContract& query,
                                 std::span<const double> params) const {
  checkParams(*this, params);
  std::vector<double> rows(size() * featureCount());
  featureRows(query, rows);
  ForwardResult r;
  r.outputs.resize(size());
  r.estimate = softmax(*this, params, rows, r.outputs);
  return r;
}

ForwardResult Metamodel::forward(const VaContract& query) const {
  return forward(query, params_);
}

double Metamodel::estimate(const VaContract& query) const {
  thread_local std::vector<double> rows, outputs;
  rows.resize(size() * featureCount());
  outputs.resize(size());
  featureRows(query, rows);
  return softmax(*this, params_, rows, outputs);
}

double batchLoss(const Metamodel& model, std::span<const double> params,
                 const ValuedPortfolio& data, std::span<const std::size_t> batch) {
  checkParams(model, params);
  const std::size_t count = batch.empty() ? data.size() : batch.size();
  if (count == 0) throw InvalidArgument("empty batch");
  std::vector<double> rows(model.size() * model.featureCount());
  std::vector<double> outputs(model.size());
  const double s = model.normalization();
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = batch.empty() ? k : batch[k];
    model.featureRows(data.contracts[j], rows);
    const double e = (softmax(model, params, rows, outputs) - data.deltas[j]) / s;
    sum += e * e;
  }
  return sum / (2.0 * static_cast<double>(count));
}

double batchLoss(const Metamodel& model, const ValuedPortfolio& data,
                 std::span<const std::size_t> batch) {
  return batchLoss(model, model.parameters(), data, batch);
}

void gradient(const Metamodel& model, std::span<const double> params,
              const ValuedPortfolio& data, std::span<const std::size_t> batch,
              std::span<double> out) {
  checkParams(model, params);
  if (out.size() != params.size())
    throw InvalidArgument("gradient buffer has the wrong size");
  const std::size_t count = batch.empty() ? data.size() : batch.size();
  if (count == 0) throw InvalidArgument("empty batch");
  const std::size_t n = model.size(), nf = model.featureCount();
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> rows(n * nf), o(n);
  const double s = model.normalization();
  const auto& y = model.representatives().deltas;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = batch.empty() ? k : batch[k];
    model.featureRows(data.contracts[j], rows);
    const double yhat = softmax(model, params, rows, o);
    const double e = (yhat - data.deltas[j]) / s;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = e * o[i] * (y[i] - yhat) / s * inv;
      if (g == 0.0) continue;
      double* gw = out.data() + i * nf;
      const double* f = rows.data() + i * nf;
      for (std::size_t c = 0; c < nf; ++c) gw[c] += g * f[c];
      out[n * nf + i] += g;
    }
  }
}

std::vector<double> gradient(const Metamodel& model, const ValuedPortfolio& data,
                             std::span<const std::size_t> batch) {
  std::vector<double> g(model.parameterCount());
  gradient(model, model.parameters(), data, batch, g);
  return g;
}

std::vector<double> estimateAll(const Metamodel& model,
                                std::span<const VaContract> portfolio,
                                unsigned threads) {
  std::vector<double> out(portfolio.size());
  parallelFor(portfolio.size(), threads,
              [&](std::size_t i) { out[i] = model.estimate(portfolio[i]); });
  return out;
}

}  // namespace vadelta
