#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "vadelta/interpolation.hpp"
#include "vadelta/portfolio.hpp"

namespace vadelta {

enum class Categorical { Rider, Gender };

enum class Transform {
  Maturity,
  Age,
  AccountValue,
  GdOverAv,
  GwOverAv,
  WithdrawalRate,
};

std::string_view toString(Categorical c) noexcept;
std::string_view toString(Transform t) noexcept;
Categorical parseCategorical(std::string_view s);
Transform parseTransform(std::string_view s);

struct TransformSpec {
  Transform kind = Transform::Age;
  double range = 1.0;  // R_t
  /// Value used for the ratio transforms when AV = 0.
  double upper = 0.0;
};

struct FeatureConfig {
  std::vector<Categorical> categorical;
  std::vector<TransformSpec> transforms;

  std::size_t featureCount() const noexcept {
    return categorical.size() + 2 * transforms.size();
  }
  /// Throws ConfigError when a range is not strictly positive.
  void validate() const;

  /// {rider, gender} and {maturity, age, AV, GD/AV, GW/AV, rate}, with R_t
  /// taken from the extremes of the space.
  static FeatureConfig fromSpace(const GenerationSpace& space);
};

double transformValue(const TransformSpec& spec, const VaContract& c) noexcept;

/// f(z, z_i): categorical mismatch flags, then [t(z_i) - t(z)]^+ / R_t for
/// every transform, then [t(z) - t(z_i)]^+ / R_t.
std::vector<double> buildFeatures(const VaContract& query,
                                  const VaContract& rep,
                                  const FeatureConfig& cfg);

struct ForwardResult {
  double estimate = 0.0;
  std::vector<double> outputs;  // softmax weights o_i
};

/// Softmax-weighted average of the representative deltas.
///
/// Parameters are stored flat: the n weight vectors (row i holds w_i), then
/// the n biases. Training works on deltas divided by `normalization()`, the
/// largest absolute representative delta; estimates are in original units.
class Metamodel {
 public:
  Metamodel() = default;
  /// Zero weights and biases.
  Metamodel(FeatureConfig features, ValuedPortfolio reps);

  std::size_t size() const noexcept { return reps_.size(); }
  std::size_t featureCount() const noexcept { return features_.featureCount(); }
  std::size_t parameterCount() const noexcept {
    return size() * (featureCount() + 1);
  }

  const FeatureConfig& features() const noexcept { return features_; }
  const ValuedPortfolio& representatives() const noexcept { return reps_; }
  double normalization() const noexcept { return scale_; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  /// Replaces all parameters; throws InvalidArgument on a size mismatch.
  void setParameters(std::span<const double> params);

  double weight(std::size_t i, std::size_t f) const noexcept {
    return params_[i * featureCount() + f];
  }
  double bias(std::size_t i) const noexcept {
    return params_[size() * featureCount() + i];
  }

  std::uint64_t seed = 0;

  ForwardResult forward(const VaContract& query) const;
  double estimate(const VaContract& query) const;
  /// Same forward pass with external parameters (same layout).
  ForwardResult forward(const VaContract& query,
                        std::span<const double> params) const;

  /// Fills feature rows for all representatives into `out` (n x F).
  void featureRows(const VaContract& query, std::span<double> out) const;

 private:
  FeatureConfig features_;
  ValuedPortfolio reps_;
  std::vector<double> repTransforms_;  // n x |T|
  std::vector<double> params_;
  double scale_ = 1.0;
};

/// E = 1/(2|B|) sum_k (yhat_k - y_k)^2 on normalized deltas. An empty
/// `batch` means every entry of `data`.
double batchLoss(const Metamodel& model, const ValuedPortfolio& data,
                 std::span<const std::size_t> batch = {});
double batchLoss(const Metamodel& model, std::span<const double> params,
                 const ValuedPortfolio& data,
                 std::span<const std::size_t> batch = {});

/// Analytic gradient of batchLoss in the parameter layout of Metamodel.
std::vector<double> gradient(const Metamodel& model,
                             const ValuedPortfolio& data,
                             std::span<const std::size_t> batch = {});
void gradient(const Metamodel& model, std::span<const double> params,
              const ValuedPortfolio& data, std::span<const std::size_t> batch,
              std::span<double> out);

/// Estimates every contract; parallel over contracts.
std::vector<double> estimateAll(const Metamodel& model,
                                std::span<const VaContract> portfolio,
                                unsigned threads = 1);

/// Adapter so the network can be timed and compared like the baselines.
class MetamodelEstimator final : public Estimator {
 public:
  explicit MetamodelEstimator(const Metamodel& model) : model_(model) {}
  double estimate(const VaContract& query) const override {
    return model_.estimate(query);
  }

 private:
  const Metamodel& model_;
};

}  // namespace vadelta
