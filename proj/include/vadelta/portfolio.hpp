#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vadelta {

enum class Rider { GmdbOnly, GmdbPlusGmwb };
enum class Gender { Male, Female };

std::string_view toString(Rider r) noexcept;    // "GMDB" / "GMDB_GMWB"
std::string_view toString(Gender g) noexcept;   // "M" / "F"
Rider parseRider(std::string_view s);
Gender parseGender(std::string_view s);

/// One variable-annuity policy.
///
/// For GMWB riders the guaranteed death benefit equals the guaranteed
/// withdrawal benefit; GMDB-only policies carry no withdrawal benefit but keep
/// a withdrawal rate so the feature space is the same for both riders.
struct VaContract {
  std::int64_t id = 0;
  Rider rider = Rider::GmdbOnly;
  Gender gender = Gender::Male;
  int age = 0;
  double accountValue = 0.0;
  double gdValue = 0.0;
  double gwValue = 0.0;
  double withdrawalRate = 0.0;
  int maturity = 0;

  bool operator==(const VaContract&) const = default;
};

/// Contracts paired with their (Monte Carlo or estimated) deltas.
struct ValuedPortfolio {
  std::vector<VaContract> contracts;
  std::vector<double> deltas;

  std::size_t size() const noexcept { return contracts.size(); }
  /// Throws InvalidArgument when empty, mismatched or non-finite.
  void validate() const;
};

/// A numeric attribute domain: either a finite set of points or a closed
/// real interval.
class NumericDomain {
 public:
  static NumericDomain interval(double lo, double hi);
  static NumericDomain points(std::vector<double> values);
  /// Integer grid {from, from+step, ..., to}.
  static NumericDomain integerRange(int from, int to, int step = 1);

  bool isInterval() const noexcept { return interval_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double min() const noexcept { return lo_; }
  double max() const noexcept { return hi_; }
  bool contains(double x) const noexcept;

  template <class G>
  double sample(G& gen) const;

 private:
  bool interval_ = false;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> values_;
};

/// Attribute space from which portfolios are drawn. Guarantee values are
/// shared by GD and GW: GMWB contracts draw one value and use it for both.
struct GenerationSpace {
  std::vector<Rider> riders;
  std::vector<Gender> genders;
  NumericDomain age;
  NumericDomain accountValue;
  NumericDomain guaranteeValue;
  NumericDomain withdrawalRate;
  NumericDomain maturity;

  /// Throws ConfigError if any list or range is empty or ill-formed.
  void validate() const;
  bool isGrid() const noexcept;
  /// Number of points of the Cartesian grid; throws if not a grid.
  std::uint64_t gridSize() const;
  bool contains(const VaContract& c) const noexcept;

  /// Input-portfolio space of the reference experiments.
  static GenerationSpace inputSpace();
  /// Grid the representative contracts are drawn from.
  static GenerationSpace representativeGrid();
  /// Grid the training portfolio is drawn from.
  static GenerationSpace trainingGrid();
};

/// Draws `count` contracts uniformly from the space. Ids are
/// `idBase, idBase+1, ...`.
std::vector<VaContract> generateInputPortfolio(const GenerationSpace& space,
                                               std::size_t count,
                                               std::uint64_t seed,
                                               std::int64_t idBase = 0);

/// Draws `count` distinct grid points uniformly without replacement. A
/// contract's id is `idBase + gridIndex`, so the same grid point always gets
/// the same id.
std::vector<VaContract> sampleFromGrid(const GenerationSpace& grid,
                                       std::size_t count, std::uint64_t seed,
                                       std::int64_t idBase = 0);

/// Contract at position `index` of the grid's mixed-radix enumeration.
VaContract gridPoint(const GenerationSpace& grid, std::uint64_t index,
                     std::int64_t idBase = 0);

/// Uniform draw without replacement, in shuffle order.
std::vector<VaContract> sampleValidation(std::span<const VaContract> input,
                                         std::size_t count,
                                         std::uint64_t seed);

// Portfolio CSV:
// id,rider,gender,age,account_value,gd_value,gw_value,withdrawal_rate,maturity
void writePortfolioCsv(const std::filesystem::path& path,
                       std::span<const VaContract> contracts);
std::vector<VaContract> readPortfolioCsv(const std::filesystem::path& path);

}  // namespace vadelta

#include <random>

template <class G>
double vadelta::NumericDomain::sample(G& gen) const {
  if (interval_) {
    if (lo_ == hi_) return lo_;
    std::uniform_real_distribution<double> u(lo_, hi_);
    return u(gen);
  }
  std::uniform_int_distribution<std::size_t> pick(0, values_.size() - 1);
  return values_[pick(gen)];
}
