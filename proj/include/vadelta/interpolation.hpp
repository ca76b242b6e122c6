#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vadelta/distance.hpp"
#include "vadelta/portfolio.hpp"

namespace vadelta {

/// Representative contracts with their Monte Carlo deltas.
using RepresentativeSet = ValuedPortfolio;

/// Common interface of the spatial estimators.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual double estimate(const VaContract& query) const = 0;
  /// Sum of the estimates over a portfolio. Estimators that are linear in
  /// the representative values override this with a cheaper route.
  virtual double aggregate(std::span<const VaContract> portfolio) const;
};

// ---------------------------------------------------------------------------
// Inverse distance weighting

/// Weighted mean with weights d_i^{-p} over idwDistance. A query at distance
/// zero from one or more representatives returns their (mean) delta.
double idwEstimate(const RepresentativeSet& reps, const VaContract& query,
                   double power, double maxAge, double gamma = 1.0);

class IdwEstimator final : public Estimator {
 public:
  IdwEstimator(RepresentativeSet reps, double power, double maxAge,
               double gamma = 1.0);
  double estimate(const VaContract& query) const override;

 private:
  RepresentativeSet reps_;
  double power_;
  double maxAge_;
  double gamma_;
};

// ---------------------------------------------------------------------------
// Variograms and ordinary kriging

enum class VariogramKind { Spherical, Exponential };

/// gamma(0) = 0; for h > 0:
///   spherical:   nugget + (sill - nugget)(1.5 h/a - 0.5 (h/a)^3), h <= a
///   exponential: nugget + (sill - nugget)(1 - exp(-3h/a))
struct VariogramModel {
  VariogramKind kind = VariogramKind::Spherical;
  double nugget = 0.0;
  double sill = 0.0;
  double range = 1.0;

  double operator()(double h) const noexcept;
  void validate() const;
};

struct EmpiricalVariogram {
  std::vector<double> lag;    // mean pair distance per non-empty bin
  std::vector<double> value;  // mean semivariance per non-empty bin
  std::vector<std::size_t> pairs;
  double maxDistance = 0.0;
};

/// Semivariogram from all representative pairs, in `bins` equal-width
/// distance bins over [0, max pair distance]. Throws InvalidArgument when
/// every representative sits at the same point.
EmpiricalVariogram empiricalVariogram(const RepresentativeSet& reps,
                                      const AttributeRanges& ranges,
                                      double gamma = 1.0, std::size_t bins = 15);

/// Pair-count-weighted least squares fit with nugget, sill - nugget >= 0
/// and range > 0.
VariogramModel fitVariogram(const EmpiricalVariogram& empirical,
                            VariogramKind kind);

VariogramModel fitVariogram(const RepresentativeSet& reps, VariogramKind kind,
                            const AttributeRanges& ranges, double gamma = 1.0);

class KrigingEstimator final : public Estimator {
 public:
  KrigingEstimator(RepresentativeSet reps, VariogramModel model,
                   AttributeRanges ranges, double gamma = 1.0);

  double estimate(const VaContract& query) const override;
  /// One solve against the summed right-hand side.
  double aggregate(std::span<const VaContract> portfolio) const override;
  /// Kriging weights for a query (they sum to one).
  std::vector<double> weights(const VaContract& query) const;
  const VariogramModel& model() const noexcept { return model_; }
  bool jittered() const noexcept { return jittered_; }

 private:
  Eigen::VectorXd rhs(const VaContract& query) const;

  RepresentativeSet reps_;
  VariogramModel model_;
  AttributeRanges ranges_;
  double gamma_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool jittered_ = false;
};

// ---------------------------------------------------------------------------
// Gaussian radial basis functions

/// Interpolant sum_i lambda_i exp(-(eps D(q, z_i))^2) through the
/// representative deltas, with D the kriging distance.
class RbfEstimator final : public Estimator {
 public:
  /// Throws InvalidArgument if two representatives coincide.
  RbfEstimator(RepresentativeSet reps, double epsilon, AttributeRanges ranges,
               double gamma = 1.0);

  double estimate(const VaContract& query) const override;
  double aggregate(std::span<const VaContract> portfolio) const override;
  const Eigen::VectorXd& coefficients() const noexcept { return lambda_; }
  bool jittered() const noexcept { return jittered_; }

 private:
  RepresentativeSet reps_;
  double epsilon_;
  AttributeRanges ranges_;
  double gamma_;
  Eigen::VectorXd lambda_;
  bool jittered_ = false;
};

// ---------------------------------------------------------------------------

struct PortfolioEstimate {
  double aggregate = 0.0;          // portfolio mode
  double perPolicyAggregate = 0.0; // sum of the per-policy estimates
  std::vector<double> perPolicy;   // one entry per contract when requested
  double portfolioSeconds = 0.0;
  double perPolicySeconds = 0.0;
};

/// Runs the estimator in portfolio mode and, when `perPolicy` is set, in
/// per-policy mode, timing each separately.
PortfolioEstimate portfolioEstimate(const Estimator& estimator,
                                    std::span<const VaContract> portfolio,
                                    bool perPolicy = true);

}  // namespace vadelta
