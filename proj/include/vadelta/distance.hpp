#pragma once

#include "vadelta/portfolio.hpp"

namespace vadelta {

/// Normalizing ranges (max - min) of the numeric attributes.
struct AttributeRanges {
  double accountValue = 1.0;
  double gdValue = 1.0;
  double gwValue = 1.0;
  double maturity = 1.0;
  double age = 1.0;
  double withdrawalRate = 1.0;

  /// Ranges implied by a generation space. GW spans [0, max] when the space
  /// contains GMDB-only contracts.
  static AttributeRanges fromSpace(const GenerationSpace& space);
  /// Throws ConfigError if any range is not strictly positive.
  void validate() const;
};

/// Normalized Euclidean distance over AV, GD, GW, maturity, age and
/// withdrawal rate plus gamma times the number of categorical mismatches
/// (gender, rider), under one square root.
double krigingDistance(const VaContract& x, const VaContract& y,
                       const AttributeRanges& ranges, double gamma = 1.0);

/// Age- and moneyness-weighted distance:
///   sqrt( f(age) g_age + g_maturity + g_rate + gamma * mismatches )
///   f = exp((x_age + y_age)/2 - M),  g_h = (e^{-r_x} x_h - e^{-r_y} y_h)^2,
///   r = AV / GD,
/// with M the maximum age in the portfolio. GD = 0 is read as r = +inf, so
/// e^{-r} = 0.
double idwDistance(const VaContract& x, const VaContract& y, double maxAge,
                   double gamma = 1.0);

}  // namespace vadelta
