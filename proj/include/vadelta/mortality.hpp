#pragma once

#include <filesystem>
#include <vector>

#include "vadelta/portfolio.hpp"

namespace vadelta {

/// Annual death probabilities q_x per gender over a contiguous age range.
class MortalityTable {
 public:
  MortalityTable() = default;
  MortalityTable(int minAge, std::vector<double> male,
                 std::vector<double> female);

  /// q_x; throws InvalidArgument naming the age if it is not covered.
  double qx(Gender g, int age) const;
  bool covers(int age) const noexcept;
  int minAge() const noexcept { return minAge_; }
  int maxAge() const noexcept;

  /// Same q_x for every age in [minAge, maxAge] and both genders.
  static MortalityTable constant(double q, int minAge = 0, int maxAge = 120);

  /// Gompertz-Makeham table with the Illustrative Life Table parameters
  /// (A = 0.0007, B = 0.00005, c = 10^0.04), ages 0..120. Females use a
  /// three-year age setback.
  static MortalityTable gompertzMakeham();

  /// CSV rows gender,age,qx with gender in {M, F}. Both genders must cover
  /// the same contiguous age range.
  static MortalityTable loadCsv(const std::filesystem::path& path);
  void saveCsv(const std::filesystem::path& path) const;

 private:
  int minAge_ = 0;
  std::vector<double> male_;
  std::vector<double> female_;
};

}  // namespace vadelta
