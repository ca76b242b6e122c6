#include "vadelta/vadelta.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>

#include "vadelta/csv.hpp"
#include "vadelta/error.hpp"
#include "vadelta/experiment.hpp"
#include "vadelta/interpolation.hpp"
#include "vadelta/metamodel.hpp"
#include "vadelta/model_io.hpp"
#include "vadelta/version.hpp"

using namespace vadelta;

struct vd_config {
  ExperimentConfig cfg;
};

struct vd_portfolio {
  std::vector<VaContract> contracts;
  std::vector<McResult> results;  // empty until valued or estimated
};

struct vd_model {
  Metamodel model;
  std::vector<TrainRecord> history;
  std::size_t iterations = 0;
  StopReason stop = StopReason::None;
};

struct vd_report {
  ExperimentConfig cfg;
  std::optional<ComparisonReport> comparison;
  std::optional<SensitivityReport> sensitivity;
};

namespace {

thread_local std::string lastError;

vd_status fail(vd_status s, const char* msg) {
  lastError = msg;
  return s;
}

template <class Fn>
vd_status guarded(Fn&& fn) {
  try {
    fn();
    lastError.clear();
    return VD_OK;
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::InvalidArgument: return fail(VD_ERR_INVALID_ARGUMENT, e.what());
      case ErrorKind::Configuration: return fail(VD_ERR_CONFIG, e.what());
      case ErrorKind::Io: return fail(VD_ERR_IO, e.what());
      case ErrorKind::Numeric: return fail(VD_ERR_NUMERIC, e.what());
    }
    return fail(VD_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(VD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VD_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* name) {
  if (!p) throw InvalidArgument(std::string(name) + " is null");
}

char* dupString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ValuedPortfolio valuedOf(const vd_portfolio& p, const char* name) {
  if (p.results.size() != p.contracts.size())
    throw InvalidArgument(std::string(name) + " portfolio has no deltas");
  ValuedPortfolio v;
  v.contracts = p.contracts;
  v.deltas.reserve(p.results.size());
  for (const auto& r : p.results) v.deltas.push_back(r.delta);
  return v;
}

std::unique_ptr<Estimator> baselineFor(const ExperimentConfig& cfg, const std::string& method,
                                       const ValuedPortfolio& reps) {
  const auto ranges = AttributeRanges::fromSpace(cfg.inputSpace);
  auto number = [&](std::size_t prefix) {
    const std::string tail = method.substr(prefix);
    try {
      return csv::parseDouble(tail);
    } catch (const Error&) {
      throw InvalidArgument("bad parameter in method '" + method + "'");
    }
  };
  if (method == "kriging_spherical" || method == "kriging_exponential") {
    const auto kind = method == "kriging_spherical" ? VariogramKind::Spherical
                                                    : VariogramKind::Exponential;
    const auto model = fitVariogram(reps, kind, ranges, cfg.gamma);
    return std::make_unique<KrigingEstimator>(reps, model, ranges, cfg.gamma);
  }
  if (method.rfind("idw_p", 0) == 0)
    return std::make_unique<IdwEstimator>(reps, number(5), cfg.inputSpace.age.max(), cfg.gamma);
  if (method.rfind("rbf_eps", 0) == 0)
    return std::make_unique<RbfEstimator>(reps, number(7), ranges, cfg.gamma);
  throw InvalidArgument("unknown method '" + method + "'");
}

std::string markdownTable(const csv::Table& t) {
  std::ostringstream os;
  os << '|';
  for (const auto& h : t.header) os << ' ' << h << " |";
  os << "\n|";
  for (std::size_t i = 0; i < t.header.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& row : t.rows) {
    os << '|';
    for (const auto& f : row) os << ' ' << f << " |";
    os << '\n';
  }
  return os.str();
}

}  // namespace

extern "C" {

const char* vd_last_error(void) { return lastError.c_str(); }
const char* vd_version(void) { return kVersion; }
void vd_string_free(char* s) { std::free(s); }

// ---- configuration

vd_status vd_config_preset(const char* preset, vd_config** out) {
  return guarded([&] {
    require(out, "out");
    const std::string name = preset ? preset : "paper";
    auto c = std::make_unique<vd_config>();
    if (name == "paper") c->cfg = ExperimentConfig::paperScale();
    else if (name == "desk") c->cfg = ExperimentConfig::deskScale();
    else throw ConfigError("unknown preset '" + name + "'");
    *out = c.release();
  });
}

vd_status vd_config_load(const char* path, vd_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<vd_config>();
    c->cfg = loadConfig(path);
    *out = c.release();
  });
}

vd_status vd_config_parse(const char* json, vd_config** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    auto c = std::make_unique<vd_config>();
    c->cfg = configFromJson(json);
    *out = c.release();
  });
}

vd_status vd_config_set(vd_config* cfg, const char* assignment) {
  return guarded([&] {
    require(cfg, "config");
    require(assignment, "assignment");
    cfg->cfg = applyOverride(cfg->cfg, assignment);
  });
}

vd_status vd_config_to_json(const vd_config* cfg, char** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = dupString(configToJson(cfg->cfg));
  });
}

vd_status vd_config_output_dir(const vd_config* cfg, char** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = dupString(cfg->cfg.outputDir);
  });
}

void vd_config_free(vd_config* cfg) { delete cfg; }

// ---- portfolios

vd_status vd_portfolio_draw(const vd_config* cfg, const char* which, size_t draw,
                            vd_portfolio** out) {
  return guarded([&] {
    require(cfg, "config");
    require(which, "which");
    require(out, "out");
    auto p = std::make_unique<vd_portfolio>();
    p->contracts = drawPortfolio(cfg->cfg, parsePortfolioKind(which), draw);
    *out = p.release();
  });
}

vd_status vd_portfolio_load(const char* portfolioCsv, const char* resultsCsv,
                            vd_portfolio** out) {
  return guarded([&] {
    require(portfolioCsv, "portfolio path");
    require(out, "out");
    auto p = std::make_unique<vd_portfolio>();
    p->contracts = readPortfolioCsv(portfolioCsv);
    if (resultsCsv) {
      const auto results = readResultsCsv(resultsCsv);
      std::unordered_map<std::int64_t, const McResult*> byId;
      for (const auto& r : results) byId[r.id] = &r;
      for (const auto& c : p->contracts) {
        const auto it = byId.find(c.id);
        if (it == byId.end())
          throw InvalidArgument(std::string(resultsCsv) + ": no result for contract " +
                                std::to_string(c.id));
        p->results.push_back(*it->second);
      }
    }
    *out = p.release();
  });
}

vd_status vd_portfolio_save(const vd_portfolio* p, const char* path) {
  return guarded([&] {
    require(p, "portfolio");
    require(path, "path");
    writePortfolioCsv(path, p->contracts);
  });
}

vd_status vd_portfolio_save_results(const vd_portfolio* p, const char* path) {
  return guarded([&] {
    require(p, "portfolio");
    require(path, "path");
    if (p->results.size() != p->contracts.size())
      throw InvalidArgument("portfolio has no deltas");
    writeResultsCsv(path, p->results);
  });
}

size_t vd_portfolio_size(const vd_portfolio* p) { return p ? p->contracts.size() : 0; }

int vd_portfolio_has_deltas(const vd_portfolio* p) {
  return p && !p->contracts.empty() && p->results.size() == p->contracts.size();
}

vd_status vd_portfolio_delta(const vd_portfolio* p, size_t i, double* out) {
  return guarded([&] {
    require(p, "portfolio");
    require(out, "out");
    if (i >= p->results.size()) throw InvalidArgument("delta index out of range");
    *out = p->results[i].delta;
  });
}

vd_status vd_portfolio_total_delta(const vd_portfolio* p, double* out) {
  return guarded([&] {
    require(p, "portfolio");
    require(out, "out");
    if (p->results.size() != p->contracts.size()) throw InvalidArgument("portfolio has no deltas");
    double s = 0.0;
    for (const auto& r : p->results) s += r.delta;
    *out = s;
  });
}

void vd_portfolio_free(vd_portfolio* p) { delete p; }

vd_status vd_mc_value(const vd_config* cfg, vd_portfolio* p, double* seconds) {
  return guarded([&] {
    require(cfg, "config");
    require(p, "portfolio");
    const auto mortality = loadMortality(cfg->cfg);
    auto v = valuePortfolio(p->contracts, mortality, valuationConfig(cfg->cfg));
    p->results = std::move(v.results);
    if (seconds) *seconds = v.seconds;
  });
}

// ---- metamodel

vd_status vd_model_train(const vd_config* cfg, const vd_portfolio* reps,
                         const vd_portfolio* training, const vd_portfolio* validation,
                         vd_model** out) {
  return guarded([&] {
    require(cfg, "config");
    require(reps, "representatives");
    require(training, "training");
    require(validation, "validation");
    require(out, "out");
    auto res = train(valuedOf(*reps, "representative"), valuedOf(*training, "training"),
                     valuedOf(*validation, "validation"),
                     FeatureConfig::fromSpace(cfg->cfg.inputSpace), trainingConfig(cfg->cfg, 0));
    auto m = std::make_unique<vd_model>();
    m->model = std::move(res.model);
    m->history = std::move(res.state.records);
    m->iterations = res.state.iteration;
    m->stop = res.state.stopReason;
    *out = m.release();
  });
}

vd_status vd_model_load(const char* path, vd_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto m = std::make_unique<vd_model>();
    m->model = loadModel(path);
    *out = m.release();
  });
}

vd_status vd_model_save(const vd_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    saveModel(path, m->model);
  });
}

vd_status vd_model_save_history(const vd_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    writeHistoryCsv(path, m->history);
  });
}

size_t vd_model_iterations(const vd_model* m) { return m ? m->iterations : 0; }

const char* vd_model_stop_reason(const vd_model* m) {
  // toString returns views of string literals.
  return m ? toString(m->stop).data() : "none";
}

void vd_model_free(vd_model* m) { delete m; }

vd_status vd_estimate(const vd_config* cfg, const char* method, const vd_portfolio* reps,
                      const vd_model* model, const vd_portfolio* input, vd_portfolio** out,
                      double* total) {
  return guarded([&] {
    require(cfg, "config");
    require(method, "method");
    require(input, "input");
    require(out, "out");
    const std::string name = method;
    std::unique_ptr<Estimator> est;
    if (name == "nn") {
      require(model, "model");
      est = std::make_unique<MetamodelEstimator>(model->model);
    } else {
      require(reps, "representatives");
      est = baselineFor(cfg->cfg, name, valuedOf(*reps, "representative"));
    }
    const auto e = portfolioEstimate(*est, input->contracts, true);
    auto p = std::make_unique<vd_portfolio>();
    p->contracts = input->contracts;
    p->results.resize(p->contracts.size());
    for (std::size_t i = 0; i < p->contracts.size(); ++i) {
      p->results[i].id = p->contracts[i].id;
      p->results[i].delta = e.perPolicy[i];
    }
    if (total) *total = e.aggregate;
    *out = p.release();
  });
}

// ---- experiments

vd_status vd_run_comparison(const vd_config* cfg, vd_report** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    auto r = std::make_unique<vd_report>();
    r->cfg = cfg->cfg;
    r->comparison = runComparison(cfg->cfg);
    *out = r.release();
  });
}

vd_status vd_run_sensitivity(const vd_config* cfg, const char* vary, size_t realizations,
                             vd_report** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    const auto kind = vary ? parseSweepKind(vary) : cfg->cfg.sensitivity.vary;
    const auto count = realizations ? realizations : cfg->cfg.sensitivity.realizations;
    auto r = std::make_unique<vd_report>();
    r->cfg = cfg->cfg;
    r->sensitivity = runSensitivity(cfg->cfg, kind, count);
    *out = r.release();
  });
}

vd_status vd_report_emit(const vd_config* cfg, const vd_report* r, const char* dir) {
  return guarded([&] {
    require(cfg, "config");
    require(r, "report");
    const std::filesystem::path outDir = dir ? dir : cfg->cfg.outputDir;
    emitReports(cfg->cfg, r->comparison ? &*r->comparison : nullptr,
                r->sensitivity ? &*r->sensitivity : nullptr, outDir);
  });
}

vd_status vd_report_render(const char* dir, char** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    const std::filesystem::path d = dir;
    std::ostringstream os;
    bool any = false;
    const std::pair<const char*, const char*> sections[] = {
        {"comparison_summary.csv", "Relative error of the portfolio delta"},
        {"training.csv", "Network training"},
        {"sensitivity_summary.csv", "Sensitivity"},
        {"sensitivity_timing_summary.csv", "Sensitivity run time (s)"},
    };
    for (const auto& [file, title] : sections) {
      if (!std::filesystem::exists(d / file)) continue;
      const auto t = csv::readTable(d / file);
      os << (any ? "\n" : "") << "## " << title << "\n\n" << markdownTable(t);
      any = true;
    }
    if (!any) throw IoError("no reports found in " + d.string());
    *out = dupString(os.str());
  });
}

void vd_report_free(vd_report* r) { delete r; }

}  // extern "C"
