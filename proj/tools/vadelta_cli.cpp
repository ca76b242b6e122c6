// Command-line front end. Talks to the library only through vadelta.h.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vadelta/vadelta.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string stage;
  vd_status status;
  std::string message;
};

void check(vd_status s, const char* stage) {
  if (s != VD_OK) throw Failure{stage, s, vd_last_error()};
}

std::string takeString(char* s) {
  std::string out = s ? s : "";
  vd_string_free(s);
  return out;
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<vd_config, vd_config_free>;
using Portfolio = Handle<vd_portfolio, vd_portfolio_free>;
using Model = Handle<vd_model, vd_model_free>;
using Report = Handle<vd_report, vd_report_free>;

struct Common {
  std::string config;
  std::string preset = "paper";
  std::vector<std::string> sets;
  std::optional<long long> scenarios, seed;
  std::optional<double> rate, vol, bump;
  std::string output;
};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void buildConfig(const Common& o, Config& cfg) {
  if (!o.config.empty())
    check(vd_config_load(o.config.c_str(), cfg.out()), "config");
  else
    check(vd_config_preset(o.preset.c_str(), cfg.out()), "config");
  auto set = [&](const std::string& a) { check(vd_config_set(cfg.get(), a.c_str()), "config"); };
  if (const char* env = std::getenv("VADELTA_OUTPUT_DIR"); env && *env)
    set("output_dir=\"" + std::string(env) + "\"");
  if (o.scenarios) set("mc.scenarios=" + std::to_string(*o.scenarios));
  if (o.seed) set("seed=" + std::to_string(*o.seed));
  if (o.rate) set("mc.rate=" + number(*o.rate));
  if (o.vol) set("mc.volatility=" + number(*o.vol));
  if (o.bump) set("mc.bump=" + number(*o.bump));
  for (const auto& s : o.sets) set(s);
  if (!o.output.empty()) set("output_dir=\"" + o.output + "\"");
}

fs::path outputDir(const Config& cfg) {
  char* s = nullptr;
  check(vd_config_output_dir(cfg.get(), &s), "config");
  fs::path dir = takeString(s);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{"output", VD_ERR_IO, "cannot create " + dir.string() + ": " + ec.message()};
  return dir;
}

// A portfolio from CSV files, or drawn from the configuration and MC-valued.
void obtain(const Config& cfg, const std::string& csv, const std::string& results,
            const char* which, bool needDeltas, Portfolio& p) {
  if (!csv.empty()) {
    check(vd_portfolio_load(csv.c_str(), results.empty() ? nullptr : results.c_str(), p.out()),
          "load");
  } else {
    check(vd_portfolio_draw(cfg.get(), which, 0, p.out()), "generate");
  }
  if (needDeltas && !vd_portfolio_has_deltas(p.get()))
    check(vd_mc_value(cfg.get(), p.get(), nullptr), "mc-value");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delta estimation for variable annuity portfolios"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vd_version());

  Common o;
  auto addCommon = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--preset", o.preset, "paper or desk, used without --config")
        ->check(CLI::IsMember({"paper", "desk"}));
    sub->add_option("--set", o.sets, "Override a configuration key: dotted.key=value");
    sub->add_option("--scenarios", o.scenarios, "MC scenarios per contract");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--rate", o.rate, "Risk-free rate");
    sub->add_option("--vol", o.vol, "Fund volatility");
    sub->add_option("--bump", o.bump, "Relative account value bump");
    sub->add_option("-o,--output", o.output, "Output directory (overrides VADELTA_OUTPUT_DIR)");
  };

  auto* gen = app.add_subcommand("generate", "Draw a portfolio and write it as CSV");
  std::string which = "input", outFile;
  std::size_t draw = 0;
  gen->add_option("--which", which, "input, representatives, training or validation")
      ->check(CLI::IsMember({"input", "representatives", "training", "validation"}));
  gen->add_option("--draw", draw, "Realization index");
  gen->add_option("--out", outFile, "Portfolio CSV (default <output>/<which>.csv)");
  addCommon(gen);

  auto* mcv = app.add_subcommand("mc-value", "Value a portfolio by nested Monte Carlo");
  std::string portfolioCsv;
  mcv->add_option("--portfolio", portfolioCsv, "Portfolio CSV")->required()->check(CLI::ExistingFile);
  mcv->add_option("--out", outFile, "Results CSV (default <output>/mc_results.csv)");
  addCommon(mcv);

  auto* trn = app.add_subcommand("train", "Train the network metamodel");
  std::string repsCsv, repsResults, trainCsv, trainResults, valCsv, valResults, modelFile, historyFile;
  trn->add_option("--reps", repsCsv, "Representative portfolio CSV (default: drawn)");
  trn->add_option("--reps-results", repsResults, "MC results for --reps");
  trn->add_option("--training", trainCsv, "Training portfolio CSV (default: drawn)");
  trn->add_option("--training-results", trainResults, "MC results for --training");
  trn->add_option("--validation", valCsv, "Validation portfolio CSV (default: drawn)");
  trn->add_option("--validation-results", valResults, "MC results for --validation");
  trn->add_option("--model", modelFile, "Model file (default <output>/model.json)");
  trn->add_option("--history", historyFile, "History CSV (default <output>/history.csv)");
  addCommon(trn);

  auto* est = app.add_subcommand("estimate", "Estimate per-policy deltas");
  std::string method = "nn";
  est->add_option("--method", method,
                  "nn, kriging_spherical, kriging_exponential, idw_p<P> or rbf_eps<E>");
  est->add_option("--model", modelFile, "Model file for --method nn");
  est->add_option("--reps", repsCsv, "Representative portfolio CSV for baselines (default: drawn)");
  est->add_option("--reps-results", repsResults, "MC results for --reps");
  est->add_option("--portfolio", portfolioCsv, "Portfolio to estimate (default: drawn input)");
  est->add_option("--out", outFile, "Results CSV (default <output>/estimates.csv)");
  addCommon(est);

  auto* cmp = app.add_subcommand("compare", "Run the estimator comparison");
  addCommon(cmp);

  auto* sen = app.add_subcommand("sensitivity", "Run a sensitivity sweep");
  std::string vary;
  std::size_t realizations = 0;
  sen->add_option("--vary", vary, "representatives, training, validation or sizes")
      ->check(CLI::IsMember({"representatives", "training", "validation", "sizes"}));
  sen->add_option("--realizations", realizations, "Realizations per setting");
  addCommon(sen);

  auto* rep = app.add_subcommand("report", "Summarize the CSV reports of a run");
  std::string dir;
  rep->add_option("--dir", dir, "Report directory (default: output directory)");
  addCommon(rep);

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg;
    buildConfig(o, cfg);

    if (*gen) {
      Portfolio p;
      check(vd_portfolio_draw(cfg.get(), which.c_str(), draw, p.out()), "generate");
      const fs::path path = outFile.empty() ? outputDir(cfg) / (which + ".csv") : fs::path(outFile);
      check(vd_portfolio_save(p.get(), path.c_str()), "generate");
      std::printf("%zu contracts -> %s\n", vd_portfolio_size(p.get()), path.c_str());
    } else if (*mcv) {
      Portfolio p;
      check(vd_portfolio_load(portfolioCsv.c_str(), nullptr, p.out()), "load");
      double seconds = 0.0, total = 0.0;
      check(vd_mc_value(cfg.get(), p.get(), &seconds), "mc-value");
      check(vd_portfolio_total_delta(p.get(), &total), "mc-value");
      const fs::path path = outFile.empty() ? outputDir(cfg) / "mc_results.csv" : fs::path(outFile);
      check(vd_portfolio_save_results(p.get(), path.c_str()), "mc-value");
      std::printf("delta %.10g over %zu contracts in %.2fs -> %s\n", total,
                  vd_portfolio_size(p.get()), seconds, path.c_str());
    } else if (*trn) {
      Portfolio reps, training, validation;
      obtain(cfg, repsCsv, repsResults, "representatives", true, reps);
      obtain(cfg, trainCsv, trainResults, "training", true, training);
      obtain(cfg, valCsv, valResults, "validation", true, validation);
      Model m;
      check(vd_model_train(cfg.get(), reps.get(), training.get(), validation.get(), m.out()), "train");
      const fs::path mpath = modelFile.empty() ? outputDir(cfg) / "model.json" : fs::path(modelFile);
      const fs::path hpath = historyFile.empty() ? outputDir(cfg) / "history.csv" : fs::path(historyFile);
      check(vd_model_save(m.get(), mpath.c_str()), "train");
      check(vd_model_save_history(m.get(), hpath.c_str()), "train");
      std::printf("%zu iterations (%s) -> %s\n", vd_model_iterations(m.get()),
                  vd_model_stop_reason(m.get()), mpath.c_str());
    } else if (*est) {
      Model m;
      Portfolio reps, input, out;
      if (method == "nn") {
        if (modelFile.empty()) throw Failure{"estimate", VD_ERR_INVALID_ARGUMENT, "--model is required for nn"};
        check(vd_model_load(modelFile.c_str(), m.out()), "load");
      } else {
        obtain(cfg, repsCsv, repsResults, "representatives", true, reps);
      }
      obtain(cfg, portfolioCsv, "", "input", false, input);
      double total = 0.0;
      check(vd_estimate(cfg.get(), method.c_str(), reps.get(), m.get(), input.get(), out.out(), &total),
            "estimate");
      const fs::path path = outFile.empty() ? outputDir(cfg) / "estimates.csv" : fs::path(outFile);
      check(vd_portfolio_save_results(out.get(), path.c_str()), "estimate");
      std::printf("delta %.10g over %zu contracts -> %s\n", total, vd_portfolio_size(out.get()),
                  path.c_str());
    } else if (*cmp) {
      Report r;
      check(vd_run_comparison(cfg.get(), r.out()), "compare");
      const fs::path d = outputDir(cfg);
      check(vd_report_emit(cfg.get(), r.get(), d.c_str()), "report");
      char* text = nullptr;
      check(vd_report_render(d.c_str(), &text), "report");
      std::fputs(takeString(text).c_str(), stdout);
    } else if (*sen) {
      Report r;
      check(vd_run_sensitivity(cfg.get(), vary.empty() ? nullptr : vary.c_str(), realizations,
                               r.out()),
            "sensitivity");
      const fs::path d = outputDir(cfg);
      check(vd_report_emit(cfg.get(), r.get(), d.c_str()), "report");
      std::printf("sensitivity reports -> %s\n", d.c_str());
    } else if (*rep) {
      const fs::path d = dir.empty() ? outputDir(cfg) : fs::path(dir);
      char* text = nullptr;
      check(vd_report_render(d.c_str(), &text), "report");
      std::fputs(takeString(text).c_str(), stdout);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "vadelta: [%s] %s\n", f.stage.c_str(), f.message.c_str());
    return static_cast<int>(f.status);
  }
  return 0;
}
