#include "vadelta/mortality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "vadelta/csv.hpp"
#include "vadelta/error.hpp"

namespace vadelta {

MortalityTable::MortalityTable(int minAge, std::vector<double> male,
                               std::vector<double> female)
    : minAge_(minAge), male_(std::move(male)), female_(std::move(female)) {
  if (male_.size() != female_.size())
    throw ConfigError("mortality table: genders cover different age ranges");
  for (const auto* v : {&male_, &female_})
    for (double q : *v)
      if (!(q >= 0.0 && q <= 1.0))
        throw ConfigError("mortality table: q_x outside [0, 1]");
}

int MortalityTable::maxAge() const noexcept {
  return minAge_ + static_cast<int>(male_.size()) - 1;
}

bool MortalityTable::covers(int age) const noexcept {
  return !male_.empty() && age >= minAge_ && age <= maxAge();
}

double MortalityTable::qx(Gender g, int age) const {
  if (!covers(age))
    throw InvalidArgument("mortality table has no entry for age " +
                          std::to_string(age));
  const auto i = static_cast<std::size_t>(age - minAge_);
  return g == Gender::Male ? male_[i] : female_[i];
}

MortalityTable MortalityTable::constant(double q, int minAge, int maxAge) {
  const auto n = static_cast<std::size_t>(maxAge - minAge + 1);
  return MortalityTable(minAge, std::vector<double>(n, q),
                        std::vector<double>(n, q));
}

MortalityTable MortalityTable::gompertzMakeham() {
  constexpr double A = 0.0007, B = 0.00005;
  const double c = std::pow(10.0, 0.04);
  // q_x = 1 - exp(-integral_x^{x+1} (A + B c^t) dt)
  auto q = [&](double x) {
    const double hazard = A + B * std::pow(c, x) * (c - 1.0) / std::log(c);
    return std::min(1.0, 1.0 - std::exp(-hazard));
  };
  constexpr int kMaxAge = 120, kFemaleSetback = 3;
  std::vector<double> male, female;
  for (int age = 0; age <= kMaxAge; ++age) {
    male.push_back(q(age));
    female.push_back(q(std::max(0, age - kFemaleSetback)));
  }
  return MortalityTable(0, std::move(male), std::move(female));
}

MortalityTable MortalityTable::loadCsv(const std::filesystem::path& path) {
  const auto t = csv::readTable(path);
  const auto cg = t.column("gender"), ca = t.column("age"), cq = t.column("qx");
  std::map<int, double> male, female;
  for (const auto& row : t.rows) {
    const Gender g = parseGender(row[cg]);
    const int age = static_cast<int>(csv::parseInt(row[ca]));
    const double q = csv::parseDouble(row[cq]);
    (g == Gender::Male ? male : female)[age] = q;
  }
  if (male.empty() || female.empty())
    throw ConfigError(path.string() + ": both genders required");
  auto contiguous = [&](const std::map<int, double>& m) {
    std::vector<double> v;
    int expect = m.begin()->first;
    for (auto [age, q] : m) {
      if (age != expect)
        throw ConfigError(path.string() + ": missing age " +
                          std::to_string(expect));
      v.push_back(q);
      ++expect;
    }
    return v;
  };
  if (male.begin()->first != female.begin()->first ||
      male.rbegin()->first != female.rbegin()->first)
    throw ConfigError(path.string() + ": genders cover different ages");
  return MortalityTable(male.begin()->first, contiguous(male), contiguous(female));
}

void MortalityTable::saveCsv(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << "gender,age,qx\n";
  for (Gender g : {Gender::Male, Gender::Female})
    for (int age = minAge_; age <= maxAge(); ++age)
      os << toString(g) << ',' << age << ',' << csv::formatDouble(qx(g, age))
         << '\n';
  csv::writeText(path, os.str());
}

}  // namespace vadelta
