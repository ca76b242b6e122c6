#include "vadelta/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "vadelta/csv.hpp"
#include "vadelta/error.hpp"
#include "vadelta/random.hpp"

namespace vadelta {

std::string_view toString(Rider r) noexcept {
  return r == Rider::GmdbOnly ? "GMDB" : "GMDB_GMWB";
}

std::string_view toString(Gender g) noexcept {
  return g == Gender::Male ? "M" : "F";
}

Rider parseRider(std::string_view s) {
  if (s == "GMDB") return Rider::GmdbOnly;
  if (s == "GMDB_GMWB") return Rider::GmdbPlusGmwb;
  throw InvalidArgument("unknown rider '" + std::string(s) + "'");
}

Gender parseGender(std::string_view s) {
  if (s == "M") return Gender::Male;
  if (s == "F") return Gender::Female;
  throw InvalidArgument("unknown gender '" + std::string(s) + "'");
}

void ValuedPortfolio::validate() const {
  if (contracts.empty()) throw InvalidArgument("empty valued portfolio");
  if (contracts.size() != deltas.size())
    throw InvalidArgument("contracts and deltas differ in size");
  for (double d : deltas)
    if (!std::isfinite(d)) throw InvalidArgument("non-finite delta");
}

NumericDomain NumericDomain::interval(double lo, double hi) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ConfigError("empty or non-finite interval");
  NumericDomain d;
  d.interval_ = true;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

NumericDomain NumericDomain::points(std::vector<double> values) {
  if (values.empty()) throw ConfigError("empty value set");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("non-finite value in set");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  NumericDomain d;
  d.lo_ = values.front();
  d.hi_ = values.back();
  d.values_ = std::move(values);
  return d;
}

NumericDomain NumericDomain::integerRange(int from, int to, int step) {
  if (step <= 0 || from > to) throw ConfigError("empty integer range");
  std::vector<double> v;
  for (int x = from; x <= to; x += step) v.push_back(x);
  return points(std::move(v));
}

bool NumericDomain::contains(double x) const noexcept {
  if (interval_) return x >= lo_ && x <= hi_;
  return std::binary_search(values_.begin(), values_.end(), x);
}

namespace {

void requireIntegral(const NumericDomain& d, const char* name) {
  if (d.isInterval()) {
    if (d.min() != d.max())
      throw ConfigError(std::string(name) + " must be a set of integers");
  }
  for (double v : d.values())
    if (v != std::floor(v))
      throw ConfigError(std::string(name) + " values must be integers");
}

}  // namespace

void GenerationSpace::validate() const {
  if (riders.empty()) throw ConfigError("generation space: no riders");
  if (genders.empty()) throw ConfigError("generation space: no genders");
  requireIntegral(age, "age");
  requireIntegral(maturity, "maturity");
  if (maturity.min() < 1) throw ConfigError("maturity must be >= 1");
  if (age.min() < 0) throw ConfigError("age must be >= 0");
  if (accountValue.min() < 0 || guaranteeValue.min() < 0)
    throw ConfigError("currency attributes must be >= 0");
  if (withdrawalRate.min() < 0) throw ConfigError("withdrawal rate must be >= 0");
}

bool GenerationSpace::isGrid() const noexcept {
  auto discrete = [](const NumericDomain& d) {
    return !d.isInterval() || d.min() == d.max();
  };
  return discrete(age) && discrete(accountValue) && discrete(guaranteeValue) &&
         discrete(withdrawalRate) && discrete(maturity);
}

namespace {

std::size_t cardinality(const NumericDomain& d) {
  return d.isInterval() ? 1 : d.values().size();
}

double valueAt(const NumericDomain& d, std::size_t i) {
  return d.isInterval() ? d.min() : d.values()[i];
}

}  // namespace

std::uint64_t GenerationSpace::gridSize() const {
  if (!isGrid()) throw ConfigError("generation space is not a finite grid");
  std::uint64_t n = riders.size() * genders.size();
  for (const NumericDomain* d : {&age, &accountValue, &guaranteeValue,
                                 &withdrawalRate, &maturity})
    n *= cardinality(*d);
  return n;
}

bool GenerationSpace::contains(const VaContract& c) const noexcept {
  if (std::find(riders.begin(), riders.end(), c.rider) == riders.end())
    return false;
  if (std::find(genders.begin(), genders.end(), c.gender) == genders.end())
    return false;
  if (!age.contains(c.age) || !maturity.contains(c.maturity) ||
      !accountValue.contains(c.accountValue) ||
      !withdrawalRate.contains(c.withdrawalRate))
    return false;
  if (c.rider == Rider::GmdbPlusGmwb)
    return c.gdValue == c.gwValue && guaranteeValue.contains(c.gwValue);
  return c.gwValue == 0.0 && guaranteeValue.contains(c.gdValue);
}

GenerationSpace GenerationSpace::inputSpace() {
  return {
      {Rider::GmdbOnly, Rider::GmdbPlusGmwb},
      {Gender::Male, Gender::Female},
      NumericDomain::integerRange(20, 60),
      NumericDomain::interval(1e4, 5e5),
      NumericDomain::interval(0.5e4, 6e5),
      NumericDomain::points({0.04, 0.05, 0.06, 0.07, 0.08}),
      NumericDomain::integerRange(10, 25),
  };
}

GenerationSpace GenerationSpace::representativeGrid() {
  return {
      {Rider::GmdbOnly, Rider::GmdbPlusGmwb},
      {Gender::Male, Gender::Female},
      NumericDomain::points({20, 30, 40, 50, 60}),
      NumericDomain::points({1e4, 1e5, 2e5, 3e5, 4e5, 5e5}),
      NumericDomain::points({0.5e4, 1e5, 2e5, 3e5, 4e5, 5e5, 6e5}),
      NumericDomain::points({0.04, 0.08}),
      NumericDomain::points({10, 15, 20, 25}),
  };
}

GenerationSpace GenerationSpace::trainingGrid() {
  return {
      {Rider::GmdbOnly, Rider::GmdbPlusGmwb},
      {Gender::Male, Gender::Female},
      NumericDomain::points({23, 27, 33, 37, 43, 47, 53, 57}),
      NumericDomain::points({0.2e5, 1.5e5, 2.5e5, 3.5e5, 4.5e5}),
      NumericDomain::points({0.5e5, 1.5e5, 2.5e5, 3.5e5, 4.5e5, 5.5e5}),
      NumericDomain::points({0.05, 0.06, 0.07}),
      NumericDomain::points({12, 13, 17, 18, 22, 23}),
  };
}

namespace {

void applyGuarantee(VaContract& c, double guarantee) {
  if (c.rider == Rider::GmdbPlusGmwb) {
    c.gwValue = guarantee;
    c.gdValue = guarantee;
  } else {
    c.gwValue = 0.0;
    c.gdValue = guarantee;
  }
}

}  // namespace

std::vector<VaContract> generateInputPortfolio(const GenerationSpace& space,
                                               std::size_t count,
                                               std::uint64_t seed,
                                               std::int64_t idBase) {
  if (count == 0) throw InvalidArgument("portfolio size must be >= 1");
  space.validate();
  Rng gen(seed);
  std::uniform_int_distribution<std::size_t> riderPick(0, space.riders.size() - 1);
  std::uniform_int_distribution<std::size_t> genderPick(0, space.genders.size() - 1);

  std::vector<VaContract> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    VaContract c;
    c.id = idBase + static_cast<std::int64_t>(i);
    c.rider = space.riders[riderPick(gen)];
    c.gender = space.genders[genderPick(gen)];
    c.age = static_cast<int>(space.age.sample(gen));
    c.accountValue = space.accountValue.sample(gen);
    applyGuarantee(c, space.guaranteeValue.sample(gen));
    c.withdrawalRate = space.withdrawalRate.sample(gen);
    c.maturity = static_cast<int>(space.maturity.sample(gen));
    out.push_back(c);
  }
  return out;
}

VaContract gridPoint(const GenerationSpace& grid, std::uint64_t index,
                     std::int64_t idBase) {
  const std::uint64_t size = grid.gridSize();
  if (index >= size) throw InvalidArgument("grid index out of range");
  VaContract c;
  c.id = idBase + static_cast<std::int64_t>(index);
  std::uint64_t rem = index;
  auto digit = [&rem](std::size_t radix) {
    auto d = static_cast<std::size_t>(rem % radix);
    rem /= radix;
    return d;
  };
  c.maturity = static_cast<int>(valueAt(grid.maturity, digit(cardinality(grid.maturity))));
  c.withdrawalRate = valueAt(grid.withdrawalRate, digit(cardinality(grid.withdrawalRate)));
  const double guarantee = valueAt(grid.guaranteeValue, digit(cardinality(grid.guaranteeValue)));
  c.accountValue = valueAt(grid.accountValue, digit(cardinality(grid.accountValue)));
  c.age = static_cast<int>(valueAt(grid.age, digit(cardinality(grid.age))));
  c.gender = grid.genders[digit(grid.genders.size())];
  c.rider = grid.riders[digit(grid.riders.size())];
  applyGuarantee(c, guarantee);
  return c;
}

namespace {

// Partial Fisher-Yates: the first `count` entries of a uniform shuffle of
// [0, size). Sparse storage keeps large grids cheap.
std::vector<std::uint64_t> drawDistinct(std::uint64_t size, std::size_t count,
                                        std::uint64_t seed) {
  Rng gen(seed);
  std::vector<std::uint64_t> out;
  out.reserve(count);
  if (size <= (std::uint64_t{1} << 24)) {
    std::vector<std::uint64_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::uint64_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::uint64_t> pick(i, size - 1);
      std::swap(idx[i], idx[pick(gen)]);
      out.push_back(idx[i]);
    }
    return out;
  }
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;  // position -> value
  auto lookup = [&swapped](std::uint64_t pos) {
    auto it = swapped.find(pos);
    return it == swapped.end() ? pos : it->second;
  };
  auto store = [&swapped](std::uint64_t pos, std::uint64_t val) {
    swapped[pos] = val;
  };
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::uint64_t> pick(i, size - 1);
    const std::uint64_t j = pick(gen);
    const std::uint64_t vi = lookup(i), vj = lookup(j);
    store(i, vj);
    store(j, vi);
    out.push_back(vj);
  }
  return out;
}

}  // namespace

std::vector<VaContract> sampleFromGrid(const GenerationSpace& grid,
                                       std::size_t count, std::uint64_t seed,
                                       std::int64_t idBase) {
  grid.validate();
  if (count == 0) throw InvalidArgument("sample size must be >= 1");
  const std::uint64_t size = grid.gridSize();
  if (count > size)
    throw InvalidArgument("requested " + std::to_string(count) +
                          " grid points but the grid has only " +
                          std::to_string(size));
  std::vector<VaContract> out;
  out.reserve(count);
  for (std::uint64_t index : drawDistinct(size, count, seed))
    out.push_back(gridPoint(grid, index, idBase));
  return out;
}

std::vector<VaContract> sampleValidation(std::span<const VaContract> input,
                                         std::size_t count,
                                         std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("sample size must be >= 1");
  if (count > input.size())
    throw InvalidArgument("requested " + std::to_string(count) +
                          " contracts from a portfolio of " +
                          std::to_string(input.size()));
  std::vector<VaContract> out;
  out.reserve(count);
  for (std::uint64_t index : drawDistinct(input.size(), count, seed))
    out.push_back(input[index]);
  return out;
}

void writePortfolioCsv(const std::filesystem::path& path,
                       std::span<const VaContract> contracts) {
  std::ostringstream os;
  os << "id,rider,gender,age,account_value,gd_value,gw_value,withdrawal_rate,"
        "maturity\n";
  for (const auto& c : contracts) {
    os << c.id << ',' << toString(c.rider) << ',' << toString(c.gender) << ','
       << c.age << ',' << csv::formatDouble(c.accountValue) << ','
       << csv::formatDouble(c.gdValue) << ',' << csv::formatDouble(c.gwValue)
       << ',' << csv::formatDouble(c.withdrawalRate) << ',' << c.maturity
       << '\n';
  }
  csv::writeText(path, os.str());
}

std::vector<VaContract> readPortfolioCsv(const std::filesystem::path& path) {
  const auto t = csv::readTable(path);
  const auto cId = t.column("id"), cRider = t.column("rider"),
             cGender = t.column("gender"), cAge = t.column("age"),
             cAv = t.column("account_value"), cGd = t.column("gd_value"),
             cGw = t.column("gw_value"), cRate = t.column("withdrawal_rate"),
             cMat = t.column("maturity");
  std::vector<VaContract> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    try {
      VaContract c;
      c.id = csv::parseInt(row[cId]);
      c.rider = parseRider(row[cRider]);
      c.gender = parseGender(row[cGender]);
      c.age = static_cast<int>(csv::parseInt(row[cAge]));
      c.accountValue = csv::parseDouble(row[cAv]);
      c.gdValue = csv::parseDouble(row[cGd]);
      c.gwValue = csv::parseDouble(row[cGw]);
      c.withdrawalRate = csv::parseDouble(row[cRate]);
      c.maturity = static_cast<int>(csv::parseInt(row[cMat]));
      out.push_back(c);
    } catch (const Error& e) {
      throw IoError(path.string() + ": row " + std::to_string(r + 2) + ": " +
                    e.what());
    }
  }
  return out;
}

}  // namespace vadelta
