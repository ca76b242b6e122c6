#include "vadelta/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vadelta/csv.hpp"
#include "vadelta/error.hpp"

namespace vadelta {

using nlohmann::json;

namespace {

json contractJson(const VaContract& c) {
  return {{"id", c.id},
          {"rider", toString(c.rider)},
          {"gender", toString(c.gender)},
          {"age", c.age},
          {"account_value", c.accountValue},
          {"gd_value", c.gdValue},
          {"gw_value", c.gwValue},
          {"withdrawal_rate", c.withdrawalRate},
          {"maturity", c.maturity}};
}

VaContract contractFromJson(const json& j) {
  VaContract c;
  c.id = j.at("id").get<std::int64_t>();
  c.rider = parseRider(j.at("rider").get<std::string>());
  c.gender = parseGender(j.at("gender").get<std::string>());
  c.age = j.at("age").get<int>();
  c.accountValue = j.at("account_value").get<double>();
  c.gdValue = j.at("gd_value").get<double>();
  c.gwValue = j.at("gw_value").get<double>();
  c.withdrawalRate = j.at("withdrawal_rate").get<double>();
  c.maturity = j.at("maturity").get<int>();
  return c;
}

}  // namespace

std::string modelToJson(const Metamodel& model) {
  json features;
  for (auto c : model.features().categorical) features["categorical"].push_back(toString(c));
  for (const auto& t : model.features().transforms)
    features["transforms"].push_back(
        {{"kind", toString(t.kind)}, {"range", t.range}, {"upper", t.upper}});

  json reps = json::array();
  const auto& r = model.representatives();
  for (std::size_t i = 0; i < r.size(); ++i) {
    json c = contractJson(r.contracts[i]);
    c["delta"] = r.deltas[i];
    reps.push_back(std::move(c));
  }
  const std::size_t nf = model.featureCount();
  json weights = json::array();
  json biases = json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    json row = json::array();
    for (std::size_t f = 0; f < nf; ++f) row.push_back(model.weight(i, f));
    weights.push_back(std::move(row));
    biases.push_back(model.bias(i));
  }
  json j = {{"schema_version", kModelSchemaVersion},
            {"feature_config", features},
            {"representatives", reps},
            {"weights", weights},
            {"biases", biases},
            {"normalization", model.normalization()},
            {"seed", model.seed}};
  return j.dump(1) + "\n";
}

Metamodel modelFromJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
      throw ConfigError("unsupported model schema version " + std::to_string(version));
    FeatureConfig fc;
    const auto& jf = j.at("feature_config");
    if (jf.contains("categorical"))
      for (const auto& c : jf.at("categorical")) fc.categorical.push_back(parseCategorical(c.get<std::string>()));
    if (jf.contains("transforms"))
      for (const auto& t : jf.at("transforms"))
        fc.transforms.push_back({parseTransform(t.at("kind").get<std::string>()),
                                 t.at("range").get<double>(), t.value("upper", 0.0)});
    ValuedPortfolio reps;
    for (const auto& c : j.at("representatives")) {
      reps.contracts.push_back(contractFromJson(c));
      reps.deltas.push_back(c.at("delta").get<double>());
    }
    Metamodel m(std::move(fc), std::move(reps));
    const auto& w = j.at("weights");
    const auto& b = j.at("biases");
    if (w.size() != m.size() || b.size() != m.size())
      throw ConfigError("model has " + std::to_string(m.size()) +
                        " representatives but a different number of neurons");
    std::vector<double> params;
    params.reserve(m.parameterCount());
    for (const auto& row : w) {
      if (row.size() != m.featureCount())
        throw ConfigError("weight vector length does not match the feature count");
      for (const auto& v : row) params.push_back(v.get<double>());
    }
    for (const auto& v : b) params.push_back(v.get<double>());
    m.setParameters(params);
    m.seed = j.value("seed", std::uint64_t{0});
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model: ") + e.what());
  }
}

void saveModel(const std::filesystem::path& path, const Metamodel& model) {
  csv::writeText(path, modelToJson(model));
}

Metamodel loadModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return modelFromJson(os.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string historyCsv(std::span<const TrainRecord> records) {
  std::ostringstream os;
  os << "iteration,train_mse,val_mse,mu_t\n";
  for (const auto& r : records)
    os << r.iteration << ',' << csv::formatDouble(r.trainMse) << ','
       << csv::formatDouble(r.valMse) << ',' << csv::formatDouble(r.mu) << '\n';
  return os.str();
}

void writeHistoryCsv(const std::filesystem::path& path,
                     std::span<const TrainRecord> records) {
  csv::writeText(path, historyCsv(records));
}

}  // namespace vadelta
