#include "vadelta/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "vadelta/csv.hpp"
#include "vadelta/error.hpp"
#include "vadelta/interpolation.hpp"
#include "vadelta/model_io.hpp"
#include "vadelta/random.hpp"
#include "vadelta/version.hpp"

namespace vadelta {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string formatValue(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string MethodSpec::label() const {
  if (name == "kriging") return "kriging_" + variogram;
  if (name == "idw") return "idw_p" + formatValue(power);
  if (name == "rbf") return "rbf_eps" + formatValue(epsilon);
  return name;
}

std::string_view toString(SweepKind k) noexcept {
  switch (k) {
    case SweepKind::Representatives: return "representatives";
    case SweepKind::Training: return "training";
    case SweepKind::Validation: return "validation";
    case SweepKind::Sizes: return "sizes";
  }
  return "?";
}

SweepKind parseSweepKind(std::string_view s) {
  for (auto k : {SweepKind::Representatives, SweepKind::Training,
                 SweepKind::Validation, SweepKind::Sizes})
    if (toString(k) == s) return k;
  throw ConfigError("unknown sensitivity sweep '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::vector<MethodSpec> paperMethods() {
  std::vector<MethodSpec> m(6);
  m[0].name = "kriging";
  m[0].variogram = "spherical";
  m[1].name = "kriging";
  m[1].variogram = "exponential";
  m[2].name = "idw";
  m[2].power = 1;
  m[3].name = "idw";
  m[3].power = 100;
  m[4].name = "rbf";
  m[4].epsilon = 1;
  m[5].name = "nn";
  return m;
}

}  // namespace

ExperimentConfig ExperimentConfig::paperScale() {
  ExperimentConfig c;
  c.methods = paperMethods();
  return c;
}

ExperimentConfig ExperimentConfig::deskScale() {
  ExperimentConfig c = paperScale();
  c.inputSize = 10000;
  c.representativeCount = 100;
  c.mc.scenarioCount = 1000;
  c.replications = 3;
  c.sensitivity.sizeFactor = 1.0 / 3.0;
  return c;
}

void ExperimentConfig::validate() const {
  inputSpace.validate();
  representativeGrid.validate();
  trainingGrid.validate();
  if (!representativeGrid.isGrid()) throw ConfigError("representative space must be a grid");
  if (!trainingGrid.isGrid()) throw ConfigError("training space must be a grid");
  if (inputSize == 0 || representativeCount == 0 || trainingSize == 0 || validationSize == 0)
    throw ConfigError("portfolio sizes must be positive");
  if (validationSize > inputSize)
    throw ConfigError("validation portfolio is larger than the input portfolio");
  if (representativeCount > representativeGrid.gridSize())
    throw ConfigError("more representatives requested than grid points");
  if (trainingSize > trainingGrid.gridSize())
    throw ConfigError("training portfolio is larger than its grid");
  if (methods.empty()) throw ConfigError("method list is empty");
  for (const auto& m : methods) {
    if (m.name != "mc" && m.name != "nn" && m.name != "kriging" && m.name != "idw" && m.name != "rbf")
      throw ConfigError("unknown method '" + m.name + "'");
    if (m.name == "kriging" && m.variogram != "spherical" && m.variogram != "exponential")
      throw ConfigError("unknown variogram '" + m.variogram + "'");
  }
  if (replications == 0) throw ConfigError("replications must be >= 1");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (sensitivity.realizations == 0) throw ConfigError("realizations must be >= 1");
  if (!(sensitivity.sizeFactor > 0.0)) throw ConfigError("size factor must be > 0");
  mc.validate();
  train.validate();
}

namespace {

json domainJson(const NumericDomain& d) {
  if (d.isInterval()) return {{"interval", {d.min(), d.max()}}};
  return {{"points", d.values()}};
}

NumericDomain domainFrom(const json& j, const char* what) {
  if (j.contains("interval")) {
    const auto& v = j.at("interval");
    if (!v.is_array() || v.size() != 2)
      throw ConfigError(std::string(what) + ": interval needs [lo, hi]");
    return NumericDomain::interval(v[0].get<double>(), v[1].get<double>());
  }
  if (j.contains("points")) return NumericDomain::points(j.at("points").get<std::vector<double>>());
  throw ConfigError(std::string(what) + ": expected 'points' or 'interval'");
}

json spaceJson(const GenerationSpace& s) {
  json riders = json::array(), genders = json::array();
  for (auto r : s.riders) riders.push_back(toString(r));
  for (auto g : s.genders) genders.push_back(toString(g));
  return {{"riders", riders},
          {"genders", genders},
          {"age", domainJson(s.age)},
          {"account_value", domainJson(s.accountValue)},
          {"guarantee_value", domainJson(s.guaranteeValue)},
          {"withdrawal_rate", domainJson(s.withdrawalRate)},
          {"maturity", domainJson(s.maturity)}};
}

GenerationSpace spaceFrom(const json& j) {
  GenerationSpace s;
  for (const auto& r : j.at("riders")) s.riders.push_back(parseRider(r.get<std::string>()));
  for (const auto& g : j.at("genders")) s.genders.push_back(parseGender(g.get<std::string>()));
  s.age = domainFrom(j.at("age"), "age");
  s.accountValue = domainFrom(j.at("account_value"), "account_value");
  s.guaranteeValue = domainFrom(j.at("guarantee_value"), "guarantee_value");
  s.withdrawalRate = domainFrom(j.at("withdrawal_rate"), "withdrawal_rate");
  s.maturity = domainFrom(j.at("maturity"), "maturity");
  return s;
}

json mcJson(const McConfig& m) {
  return {{"scenarios", m.scenarioCount}, {"rate", m.riskFreeRate},
          {"volatility", m.volatility},   {"time_step", m.timeStepYears},
          {"bump", m.bumpFraction},       {"threads", m.threads}};
}

json toJson(const ExperimentConfig& c) {
  json methods = json::array();
  for (const auto& m : c.methods) {
    json jm = {{"name", m.name}};
    if (m.name == "kriging") jm["variogram"] = m.variogram;
    if (m.name == "idw") jm["power"] = m.power;
    if (m.name == "rbf") jm["epsilon"] = m.epsilon;
    methods.push_back(jm);
  }
  const auto& t = c.train;
  return {
      {"seed", c.seed},
      {"sizes",
       {{"input", c.inputSize},
        {"representatives", c.representativeCount},
        {"training", c.trainingSize},
        {"validation", c.validationSize}}},
      {"spaces",
       {{"input", spaceJson(c.inputSpace)},
        {"representatives", spaceJson(c.representativeGrid)},
        {"training", spaceJson(c.trainingGrid)}}},
      {"mc", mcJson(c.mc)},
      {"train",
       {{"learning_rate", t.learningRate},
        {"batch_size", t.batchSize},
        {"mu_max", t.muMax},
        {"record_interval", t.recordInterval},
        {"smoothing_window", t.smoothingWindow},
        {"poly_degree", t.polyDegree},
        {"trend_window", t.trendWindow},
        {"rel_err_threshold", t.relErrThreshold},
        {"max_iterations", t.maxIterations},
        {"require_rel_err", t.requireRelErr}}},
      {"methods", methods},
      {"gamma", c.gamma},
      {"replications", c.replications},
      {"output_dir", c.outputDir},
      {"mortality_file", c.mortalityFile},
      {"cache_dir", c.cacheDir},
      {"sensitivity",
       {{"vary", toString(c.sensitivity.vary)},
        {"realizations", c.sensitivity.realizations},
        {"size_factor", c.sensitivity.sizeFactor}}},
  };
}

// Counts must be non-negative integers; json would otherwise wrap -1.
template <class T>
T count(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned())
    throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
  return v.get<T>();
}

ExperimentConfig fromFullJson(const json& j) {
  ExperimentConfig c;
  c.seed = count<std::uint64_t>(j, "seed");
  const auto& sz = j.at("sizes");
  c.inputSize = count<std::size_t>(sz, "input");
  c.representativeCount = count<std::size_t>(sz, "representatives");
  c.trainingSize = count<std::size_t>(sz, "training");
  c.validationSize = count<std::size_t>(sz, "validation");
  const auto& sp = j.at("spaces");
  c.inputSpace = spaceFrom(sp.at("input"));
  c.representativeGrid = spaceFrom(sp.at("representatives"));
  c.trainingGrid = spaceFrom(sp.at("training"));
  const auto& m = j.at("mc");
  c.mc.scenarioCount = count<std::size_t>(m, "scenarios");
  c.mc.riskFreeRate = m.at("rate").get<double>();
  c.mc.volatility = m.at("volatility").get<double>();
  c.mc.timeStepYears = m.at("time_step").get<double>();
  c.mc.bumpFraction = m.at("bump").get<double>();
  c.mc.threads = count<unsigned>(m, "threads");
  const auto& t = j.at("train");
  c.train.learningRate = t.at("learning_rate").get<double>();
  c.train.batchSize = count<std::size_t>(t, "batch_size");
  c.train.muMax = t.at("mu_max").get<double>();
  c.train.recordInterval = count<std::size_t>(t, "record_interval");
  c.train.smoothingWindow = count<std::size_t>(t, "smoothing_window");
  c.train.polyDegree = t.at("poly_degree").get<int>();
  c.train.trendWindow = count<std::size_t>(t, "trend_window");
  c.train.relErrThreshold = t.at("rel_err_threshold").get<double>();
  c.train.maxIterations = count<std::size_t>(t, "max_iterations");
  c.train.requireRelErr = t.at("require_rel_err").get<bool>();
  for (const auto& jm : j.at("methods")) {
    MethodSpec s;
    s.name = jm.at("name").get<std::string>();
    s.variogram = jm.value("variogram", s.variogram);
    s.power = jm.value("power", s.power);
    s.epsilon = jm.value("epsilon", s.epsilon);
    c.methods.push_back(s);
  }
  c.gamma = j.at("gamma").get<double>();
  c.replications = count<std::size_t>(j, "replications");
  c.outputDir = j.at("output_dir").get<std::string>();
  c.mortalityFile = j.at("mortality_file").get<std::string>();
  c.cacheDir = j.at("cache_dir").get<std::string>();
  const auto& s = j.at("sensitivity");
  c.sensitivity.vary = parseSweepKind(s.at("vary").get<std::string>());
  c.sensitivity.realizations = count<std::size_t>(s, "realizations");
  c.sensitivity.sizeFactor = s.at("size_factor").get<double>();
  return c;
}

// Unknown keys are almost always typos; reject them instead of ignoring.
void rejectUnknown(const json& user, const json& base, const std::string& prefix) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (prefix.empty() && it.key() == "preset") continue;
    if (!base.contains(it.key()))
      throw ConfigError("unknown configuration key '" + prefix + it.key() + "'");
    const auto& b = base.at(it.key());
    if (b.is_object() && it.key() != "input" && it.key() != "representatives" &&
        it.key() != "training")
      rejectUnknown(*it, b, prefix + it.key() + ".");
  }
}

ExperimentConfig parseConfig(const json& user) {
  if (!user.is_object()) throw ConfigError("configuration must be a JSON object");
  const std::string preset = user.value("preset", std::string("paper"));
  ExperimentConfig base;
  if (preset == "paper") base = ExperimentConfig::paperScale();
  else if (preset == "desk") base = ExperimentConfig::deskScale();
  else throw ConfigError("unknown preset '" + preset + "'");
  json merged = toJson(base);
  rejectUnknown(user, merged, "");
  json patch = user;
  patch.erase("preset");
  merged.merge_patch(patch);
  ExperimentConfig c = fromFullJson(merged);
  c.validate();
  return c;
}

}  // namespace

std::string configToJson(const ExperimentConfig& cfg) { return toJson(cfg).dump(2) + "\n"; }

ExperimentConfig configFromJson(const std::string& text) {
  try {
    return parseConfig(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
}

ExperimentConfig loadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return configFromJson(os.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentConfig applyOverride(const ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json j = toJson(cfg);
  std::string pointer;
  std::stringstream ks(key);
  for (std::string part; std::getline(ks, part, '.');) pointer += "/" + part;
  const json::json_pointer ptr(pointer);
  if (!j.contains(ptr)) throw ConfigError("unknown configuration key '" + key + "'");
  j[ptr] = value;
  try {
    ExperimentConfig out = fromFullJson(j);
    out.validate();
    return out;
  } catch (const json::exception& e) {
    throw ConfigError("override '" + assignment + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Portfolios

namespace {

constexpr std::int64_t kRepIdBase = 1'000'000'000;
constexpr std::int64_t kTrainIdBase = 2'000'000'000;

}  // namespace

std::string_view toString(PortfolioKind k) noexcept {
  switch (k) {
    case PortfolioKind::Input: return "input";
    case PortfolioKind::Representatives: return "representatives";
    case PortfolioKind::Training: return "training";
    case PortfolioKind::Validation: return "validation";
  }
  return "?";
}

PortfolioKind parsePortfolioKind(std::string_view s) {
  for (auto k : {PortfolioKind::Input, PortfolioKind::Representatives, PortfolioKind::Training,
                 PortfolioKind::Validation})
    if (toString(k) == s) return k;
  throw InvalidArgument("unknown portfolio '" + std::string(s) + "'");
}

std::vector<VaContract> drawPortfolio(const ExperimentConfig& cfg, PortfolioKind kind,
                                      std::size_t draw, std::size_t count) {
  switch (kind) {
    case PortfolioKind::Input:
      return generateInputPortfolio(cfg.inputSpace, count ? count : cfg.inputSize,
                                    deriveSeed(cfg.seed, "input"));
    case PortfolioKind::Representatives:
      return sampleFromGrid(cfg.representativeGrid, count ? count : cfg.representativeCount,
                            deriveSeed(cfg.seed, "representatives", draw), kRepIdBase);
    case PortfolioKind::Training:
      return sampleFromGrid(cfg.trainingGrid, count ? count : cfg.trainingSize,
                            deriveSeed(cfg.seed, "training", draw), kTrainIdBase);
    case PortfolioKind::Validation: {
      const auto input = drawPortfolio(cfg, PortfolioKind::Input);
      return sampleValidation(input, count ? count : cfg.validationSize,
                              deriveSeed(cfg.seed, "validation", draw));
    }
  }
  throw InvalidArgument("unknown portfolio kind");
}

McConfig valuationConfig(const ExperimentConfig& cfg) {
  McConfig m = cfg.mc;
  m.seed = deriveSeed(cfg.seed, "mc");
  return m;
}

TrainConfig trainingConfig(const ExperimentConfig& cfg, std::size_t replication) {
  TrainConfig t = cfg.train;
  t.seed = deriveSeed(cfg.seed, "train", replication);
  return t;
}

// ---------------------------------------------------------------------------
// Ground truth

MortalityTable loadMortality(const ExperimentConfig& cfg) {
  if (cfg.mortalityFile.empty()) return MortalityTable::gompertzMakeham();
  return MortalityTable::loadCsv(cfg.mortalityFile);
}

std::string groundTruthKey(const ExperimentConfig& cfg, const MortalityTable& mortality) {
  json mc = mcJson(cfg.mc);
  mc.erase("threads");
  std::ostringstream mort;
  for (int a = mortality.minAge(); a <= mortality.maxAge(); ++a)
    mort << csv::formatDouble(mortality.qx(Gender::Male, a)) << ','
         << csv::formatDouble(mortality.qx(Gender::Female, a)) << ';';
  const json key = {{"space", spaceJson(cfg.inputSpace)},
                    {"size", cfg.inputSize},
                    {"seed", cfg.seed},
                    {"mc", mc},
                    {"mortality", fnv1a(mort.str())}};
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(key.dump());
  return os.str();
}

namespace {

ValuedPortfolio valued(std::vector<VaContract> contracts, const MortalityTable& mort,
                       const McConfig& mc, double* seconds = nullptr) {
  const auto v = valuePortfolio(contracts, mort, mc);
  if (seconds) *seconds = v.seconds;
  ValuedPortfolio p;
  p.contracts = std::move(contracts);
  p.deltas.reserve(v.results.size());
  for (const auto& r : v.results) p.deltas.push_back(r.delta);
  return p;
}

// Error messages carry the stage so failures deep in a long run are easy
// to place.
template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    const std::string msg = std::string("[") + name + "] " + e.what();
    switch (e.kind()) {
      case ErrorKind::InvalidArgument: throw InvalidArgument(msg);
      case ErrorKind::Configuration: throw ConfigError(msg);
      case ErrorKind::Io: throw IoError(msg);
      case ErrorKind::Numeric: throw NumericError(msg);
    }
    throw;
  }
}

}  // namespace

ExperimentData prepareExperiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData d;
  d.mortality = stage("mortality", [&] { return loadMortality(cfg); });
  d.input = stage("generate", [&] { return drawPortfolio(cfg, PortfolioKind::Input); });
  const McConfig mc = valuationConfig(cfg);

  std::filesystem::path cacheFile;
  if (!cfg.cacheDir.empty())
    cacheFile = std::filesystem::path(cfg.cacheDir) /
                ("ground_truth_" + groundTruthKey(cfg, d.mortality) + ".csv");
  if (!cacheFile.empty() && std::filesystem::exists(cacheFile)) {
    d.groundTruth = stage("ground-truth-cache", [&] { return readResultsCsv(cacheFile); });
    if (d.groundTruth.size() == d.input.size()) d.cached = true;
  }
  if (!d.cached) {
    const auto v = stage("ground-truth-mc", [&] { return valuePortfolio(d.input, d.mortality, mc); });
    d.groundTruth = v.results;
    d.groundTruthSeconds = v.seconds;
    if (!cacheFile.empty())
      stage("ground-truth-cache", [&] { writeResultsCsv(cacheFile, d.groundTruth); });
  }
  for (const auto& r : d.groundTruth) d.truth += r.delta;
  if (d.truth == 0.0) throw NumericError("[ground-truth-mc] portfolio delta is zero");
  return d;
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

struct Portfolios {
  ValuedPortfolio reps, training, validation;
};

ValuedPortfolio validationFrom(const ExperimentData& d, std::size_t size, std::uint64_t seed) {
  ValuedPortfolio v;
  v.contracts = sampleValidation(d.input, size, seed);
  for (const auto& c : v.contracts)
    v.deltas.push_back(d.groundTruth[static_cast<std::size_t>(c.id)].delta);
  return v;
}

double relErr(double estimate, double truth) { return (estimate - truth) / std::abs(truth); }

}  // namespace

ComparisonReport runComparison(const ExperimentConfig& cfg) {
  return runComparison(cfg, prepareExperiment(cfg));
}

ComparisonReport runComparison(const ExperimentConfig& cfg, const ExperimentData& data) {
  cfg.validate();
  ComparisonReport rep;
  rep.truth = data.truth;
  rep.groundTruthSeconds = data.groundTruthSeconds;
  rep.groundTruthCached = data.cached;

  const McConfig mc = valuationConfig(cfg);
  const auto ranges = AttributeRanges::fromSpace(cfg.inputSpace);
  const auto features = FeatureConfig::fromSpace(cfg.inputSpace);
  const double maxAge = cfg.inputSpace.age.max();
  bool needsTraining = false;
  for (const auto& m : cfg.methods) needsTraining |= m.name == "nn";

  ValuedPortfolio training, validation;
  if (needsTraining) {
    training = stage("training-mc", [&] {
      return valued(drawPortfolio(cfg, PortfolioKind::Training), data.mortality, mc);
    });
    validation = validationFrom(data, cfg.validationSize, deriveSeed(cfg.seed, "validation", 0));
  }

  for (std::size_t r = 0; r < cfg.replications; ++r) {
    ReplicationDetail detail;
    detail.replication = r;
    bool needsReps = false;
    for (const auto& m : cfg.methods) needsReps |= m.name != "mc";
    ValuedPortfolio reps;
    if (needsReps)
      reps = stage("representative-mc", [&] {
        return valued(drawPortfolio(cfg, PortfolioKind::Representatives, r), data.mortality, mc,
                      &detail.representativeMcSeconds);
      });

    for (const auto& m : cfg.methods) {
      MethodOutcome o;
      o.method = m.label();
      o.replication = r;
      o.truth = data.truth;
      if (m.name == "mc") {
        o.estimate = data.truth;
        o.portfolioSeconds = o.perPolicySeconds = data.groundTruthSeconds;
        o.relError = 0.0;
        rep.rows.push_back(o);
        continue;
      }
      const std::string stageName = "method " + o.method;
      stage(stageName.c_str(), [&] {
        const auto t0 = Clock::now();
        std::unique_ptr<Estimator> est;
        std::optional<TrainResult> trained;
        if (m.name == "nn") {
            trained.emplace(train(reps, training, validation, features, trainingConfig(cfg, r)));
          est = std::make_unique<MetamodelEstimator>(trained->model);
        } else if (m.name == "kriging") {
          const auto kind = m.variogram == "spherical" ? VariogramKind::Spherical
                                                       : VariogramKind::Exponential;
          const auto model = fitVariogram(reps, kind, ranges, cfg.gamma);
          est = std::make_unique<KrigingEstimator>(reps, model, ranges, cfg.gamma);
        } else if (m.name == "idw") {
          est = std::make_unique<IdwEstimator>(reps, m.power, maxAge, cfg.gamma);
        } else {
          est = std::make_unique<RbfEstimator>(reps, m.epsilon, ranges, cfg.gamma);
        }
        o.setupSeconds = secondsSince(t0);
        const auto e = portfolioEstimate(*est, data.input, true);
        o.estimate = e.aggregate;
        o.relError = relErr(o.estimate, data.truth);
        o.portfolioSeconds = o.setupSeconds + e.portfolioSeconds;
        o.perPolicySeconds = o.setupSeconds + e.perPolicySeconds;
        if (trained) {
          detail.history = trained->state.records;
          detail.iterations = trained->state.iteration;
          detail.stopReason = trained->state.stopReason;
          if (r == 0)
            for (std::size_t k = 0; k < validation.size(); ++k)
              rep.scatter.push_back({validation.contracts[k].id, validation.deltas[k],
                                     trained->model.estimate(validation.contracts[k])});
        }
      });
      rep.rows.push_back(o);
    }
    rep.replications.push_back(std::move(detail));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sensitivity

std::pair<double, double> meanStd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

SensitivityReport runSensitivity(const ExperimentConfig& cfg, SweepKind vary,
                                 std::size_t realizations) {
  return runSensitivity(cfg, prepareExperiment(cfg), vary, realizations);
}

SensitivityReport runSensitivity(const ExperimentConfig& cfg, const ExperimentData& data,
                                 SweepKind vary, std::size_t realizations) {
  cfg.validate();
  if (realizations == 0) throw ConfigError("realizations must be >= 1");
  SensitivityReport out;
  out.truth = data.truth;
  const McConfig mc = valuationConfig(cfg);
  const auto features = FeatureConfig::fromSpace(cfg.inputSpace);

  struct Case {
    SweepKind varied;
    std::size_t r, t, v;
  };
  std::vector<Case> cases;
  if (vary == SweepKind::Sizes) {
    // (r, t, v) triples of the reference size study.
    const std::size_t triples[9][3] = {{300, 200, 250}, {250, 200, 250}, {200, 200, 250},
                                       {300, 200, 250}, {300, 150, 250}, {300, 100, 250},
                                       {300, 200, 250}, {300, 200, 200}, {300, 200, 150}};
    const SweepKind varied[3] = {SweepKind::Representatives, SweepKind::Training,
                                 SweepKind::Validation};
    auto scale = [&](std::size_t x) {
      return std::max<std::size_t>(1, static_cast<std::size_t>(
                                          std::llround(static_cast<double>(x) * cfg.sensitivity.sizeFactor)));
    };
    for (int k = 0; k < 9; ++k)
      cases.push_back({varied[k / 3], scale(triples[k][0]), scale(triples[k][1]), scale(triples[k][2])});
  } else {
    cases.push_back({vary, cfg.representativeCount, cfg.trainingSize, cfg.validationSize});
  }

  // Valued portfolios are cached by (kind, size, draw) so repeated sizes
  // are not revalued.
  std::map<std::tuple<int, std::size_t, std::size_t>, ValuedPortfolio> cache;
  auto get = [&](SweepKind kind, std::size_t size, std::size_t draw) -> const ValuedPortfolio& {
    const auto key = std::make_tuple(static_cast<int>(kind), size, draw);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    ValuedPortfolio p;
    if (kind == SweepKind::Representatives)
      p = stage("representative-mc", [&] { return valued(drawPortfolio(cfg, PortfolioKind::Representatives, draw, size), data.mortality, mc); });
    else if (kind == SweepKind::Training)
      p = stage("training-mc", [&] { return valued(drawPortfolio(cfg, PortfolioKind::Training, draw, size), data.mortality, mc); });
    else
      p = validationFrom(data, size, deriveSeed(cfg.seed, "validation", draw));
    return cache.emplace(key, std::move(p)).first->second;
  };

  for (const auto& c : cases) {
    SensitivitySummary sum;
    sum.sweep = vary == SweepKind::Sizes ? SweepKind::Sizes : c.varied;
    sum.reps = c.r;
    sum.training = c.t;
    sum.validation = c.v;
    std::vector<double> errs, times;
    for (std::size_t k = 0; k < realizations; ++k) {
      const auto& reps = get(SweepKind::Representatives, c.r, c.varied == SweepKind::Representatives ? k : 0);
      const auto& training = get(SweepKind::Training, c.t, c.varied == SweepKind::Training ? k : 0);
      const auto& validation = get(SweepKind::Validation, c.v, c.varied == SweepKind::Validation ? k : 0);
      SensitivityRow row;
      row.sweep = sum.sweep;
      row.reps = c.r;
      row.training = c.t;
      row.validation = c.v;
      row.realization = k;
      stage("sensitivity", [&] {
        const auto t0 = Clock::now();
        const auto trained = train(reps, training, validation, features, trainingConfig(cfg, 0));
        const MetamodelEstimator est(trained.model);
        row.estimate = est.aggregate(data.input);
        row.seconds = secondsSince(t0);
        row.iterations = trained.state.iteration;
        row.stopReason = trained.state.stopReason;
      });
      row.relError = relErr(row.estimate, data.truth);
      errs.push_back(row.relError);
      times.push_back(row.seconds);
      out.rows.push_back(row);
    }
    sum.count = realizations;
    std::tie(sum.errMean, sum.errStd) = meanStd(errs);
    std::tie(sum.timeMean, sum.timeStd) = meanStd(times);
    out.summary.push_back(sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string utcTimestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void emitReports(const ExperimentConfig& cfg, const ComparisonReport* comparison,
                 const SensitivityReport* sensitivity, const std::filesystem::path& outDir) {
  using csv::formatDouble;
  std::error_code ec;
  std::filesystem::create_directories(outDir, ec);
  if (ec) throw IoError("cannot create output directory " + outDir.string() + ": " + ec.message());
  std::vector<std::string> files;
  auto write = [&](const std::string& name, const std::string& text) {
    csv::writeText(outDir / name, text);
    files.push_back(name);
  };

  std::ostringstream cmp, cmpSum, tim, sc, tr;
  cmp << "method,replication,estimate,truth,rel_error\n";
  cmpSum << "method,replications,err_mean,err_std,abs_err_mean\n";
  tim << "method,replication,setup_seconds,portfolio_seconds,per_policy_seconds,"
         "representative_mc_seconds\n";
  sc << "id,mc_delta,nn_delta\n";
  tr << "replication,iterations,stop_reason,records\n";
  if (comparison) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> errs;
    for (const auto& o : comparison->rows) {
      cmp << o.method << ',' << o.replication << ',' << formatDouble(o.estimate) << ','
          << formatDouble(o.truth) << ',' << formatDouble(o.relError) << '\n';
      const double repMc = o.replication < comparison->replications.size()
                               ? comparison->replications[o.replication].representativeMcSeconds
                               : 0.0;
      tim << o.method << ',' << o.replication << ',' << formatDouble(o.setupSeconds) << ','
          << formatDouble(o.portfolioSeconds) << ',' << formatDouble(o.perPolicySeconds) << ','
          << formatDouble(o.method == "mc" ? 0.0 : repMc) << '\n';
      if (!errs.count(o.method)) order.push_back(o.method);
      errs[o.method].push_back(o.relError);
    }
    for (const auto& m : order) {
      const auto& e = errs[m];
      const auto [mean, sd] = meanStd(e);
      double absMean = 0.0;
      for (double x : e) absMean += std::abs(x) / static_cast<double>(e.size());
      cmpSum << m << ',' << e.size() << ',' << formatDouble(mean) << ',' << formatDouble(sd)
             << ',' << formatDouble(absMean) << '\n';
    }
    for (const auto& p : comparison->scatter)
      sc << p.id << ',' << formatDouble(p.mcDelta) << ',' << formatDouble(p.nnDelta) << '\n';
    for (const auto& d : comparison->replications) {
      if (d.history.empty()) continue;
      tr << d.replication << ',' << d.iterations << ',' << toString(d.stopReason) << ','
         << d.history.size() << '\n';
      write("history_rep" + std::to_string(d.replication) + ".csv", historyCsv(d.history));
    }
  }
  const bool both = !comparison && !sensitivity;
  if (comparison || both) {
    write("comparison.csv", cmp.str());
    write("comparison_summary.csv", cmpSum.str());
    write("timings.csv", tim.str());
    write("scatter.csv", sc.str());
    write("training.csv", tr.str());
  }

  std::ostringstream sen, senSum, senTim, senTimSum;
  sen << "sweep,reps,training,validation,realization,estimate,rel_error,iterations,stop_reason\n";
  senSum << "sweep,reps,training,validation,count,err_mean,err_std\n";
  senTim << "sweep,reps,training,validation,realization,seconds\n";
  senTimSum << "sweep,reps,training,validation,count,time_mean,time_std\n";
  if (sensitivity) {
    for (const auto& r : sensitivity->rows) {
      const std::string key = std::string(toString(r.sweep)) + ',' + std::to_string(r.reps) + ',' +
                              std::to_string(r.training) + ',' + std::to_string(r.validation);
      sen << key << ',' << r.realization << ',' << formatDouble(r.estimate) << ','
          << formatDouble(r.relError) << ',' << r.iterations << ',' << toString(r.stopReason) << '\n';
      senTim << key << ',' << r.realization << ',' << formatDouble(r.seconds) << '\n';
    }
    for (const auto& s : sensitivity->summary) {
      const std::string key = std::string(toString(s.sweep)) + ',' + std::to_string(s.reps) + ',' +
                              std::to_string(s.training) + ',' + std::to_string(s.validation);
      senSum << key << ',' << s.count << ',' << formatDouble(s.errMean) << ','
             << formatDouble(s.errStd) << '\n';
      senTimSum << key << ',' << s.count << ',' << formatDouble(s.timeMean) << ','
                << formatDouble(s.timeStd) << '\n';
    }
  }
  if (sensitivity || both) {
    write("sensitivity.csv", sen.str());
    write("sensitivity_summary.csv", senSum.str());
    write("sensitivity_timings.csv", senTim.str());
    write("sensitivity_timing_summary.csv", senTimSum.str());
  }

  // A comparison and a sensitivity run may share a directory; keep what the
  // other one recorded.
  json manifest = json::object();
  const auto manifestPath = outDir / "manifest.json";
  if (std::filesystem::exists(manifestPath)) {
    std::ifstream in(manifestPath);
    manifest = json::parse(in, nullptr, false);
    if (!manifest.is_object()) manifest = json::object();
  }
  manifest["tool"] = "vadelta";
  manifest["version"] = kVersion;
  manifest["generated_at"] = utcTimestamp();
  manifest["config"] = json::parse(configToJson(cfg));
  manifest["seeds"] = {{"master", cfg.seed},
                       {"input", deriveSeed(cfg.seed, "input")},
                       {"mc", deriveSeed(cfg.seed, "mc")},
                       {"training_draw", deriveSeed(cfg.seed, "training", 0)},
                       {"validation_draw", deriveSeed(cfg.seed, "validation", 0)}};
  if (sensitivity) manifest["sensitivity"] = {{"delta", sensitivity->truth}};
  if (comparison) {
    manifest["ground_truth"] = {{"delta", comparison->truth},
                                {"cached", comparison->groundTruthCached}};
    json repSeeds = json::array(), trainSeeds = json::array();
    for (std::size_t r = 0; r < comparison->replications.size(); ++r) {
      repSeeds.push_back(deriveSeed(cfg.seed, "representatives", r));
      trainSeeds.push_back(deriveSeed(cfg.seed, "train", r));
    }
    manifest["seeds"]["representatives"] = repSeeds;
    manifest["seeds"]["train"] = trainSeeds;
  }
  json listed = manifest.value("files", json::array());
  for (const auto& f : files)
    if (std::find(listed.begin(), listed.end(), f) == listed.end()) listed.push_back(f);
  std::sort(listed.begin(), listed.end());
  manifest["files"] = listed;
  csv::writeText(manifestPath, manifest.dump(2) + "\n");
}

}  // namespace vadelta
