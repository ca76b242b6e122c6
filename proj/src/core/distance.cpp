#include "vadelta/distance.hpp"

#include <algorithm>
#include <cmath>

#include "vadelta/error.hpp"

namespace vadelta {

AttributeRanges AttributeRanges::fromSpace(const GenerationSpace& space) {
  AttributeRanges r;
  r.accountValue = space.accountValue.max() - space.accountValue.min();
  r.gdValue = space.guaranteeValue.max() - space.guaranteeValue.min();
  const bool hasGmdbOnly =
      std::find(space.riders.begin(), space.riders.end(), Rider::GmdbOnly) !=
      space.riders.end();
  const bool hasGmwb =
      std::find(space.riders.begin(), space.riders.end(),
                Rider::GmdbPlusGmwb) != space.riders.end();
  const double gwMin = hasGmdbOnly ? 0.0 : space.guaranteeValue.min();
  const double gwMax = hasGmwb ? space.guaranteeValue.max() : 0.0;
  r.gwValue = gwMax - gwMin;
  r.maturity = space.maturity.max() - space.maturity.min();
  r.age = space.age.max() - space.age.min();
  r.withdrawalRate = space.withdrawalRate.max() - space.withdrawalRate.min();
  return r;
}

void AttributeRanges::validate() const {
  for (double v : {accountValue, gdValue, gwValue, maturity, age, withdrawalRate})
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError("attribute ranges must be positive and finite");
}

namespace {

int mismatches(const VaContract& x, const VaContract& y) {
  return (x.gender != y.gender ? 1 : 0) + (x.rider != y.rider ? 1 : 0);
}

double sq(double v) { return v * v; }

double moneynessWeight(const VaContract& c) {
  if (c.gdValue <= 0.0) return 0.0;
  return std::exp(-c.accountValue / c.gdValue);
}

}  // namespace

double krigingDistance(const VaContract& x, const VaContract& y,
                       const AttributeRanges& ranges, double gamma) {
  ranges.validate();
  const double s =
      sq((x.accountValue - y.accountValue) / ranges.accountValue) +
      sq((x.gdValue - y.gdValue) / ranges.gdValue) +
      sq((x.gwValue - y.gwValue) / ranges.gwValue) +
      sq(static_cast<double>(x.maturity - y.maturity) / ranges.maturity) +
      sq(static_cast<double>(x.age - y.age) / ranges.age) +
      sq((x.withdrawalRate - y.withdrawalRate) / ranges.withdrawalRate) +
      gamma * mismatches(x, y);
  return std::sqrt(s);
}

double idwDistance(const VaContract& x, const VaContract& y, double maxAge,
                   double gamma) {
  const double ex = moneynessWeight(x), ey = moneynessWeight(y);
  const double ageWeight = std::exp(0.5 * (x.age + y.age) - maxAge);
  const double s = ageWeight * sq(ex * x.age - ey * y.age) +
                   sq(ex * x.maturity - ey * y.maturity) +
                   sq(ex * x.withdrawalRate - ey * y.withdrawalRate) +
                   gamma * mismatches(x, y);
  return std::sqrt(s);
}

}  // namespace vadelta
