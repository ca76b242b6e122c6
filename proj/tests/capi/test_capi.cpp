#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "vadelta/vadelta.h"

namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "preset": "desk",
  "sizes": {"input": 200, "representatives": 12, "training": 20, "validation": 25},
  "mc": {"scenarios": 64},
  "replications": 1,
  "train": {"max_iterations": 200}
})";

vd_config* tiny() {
  vd_config* c = nullptr;
  REQUIRE(vd_config_parse(kTiny, &c) == VD_OK);
  return c;
}

}  // namespace

TEST_CASE("errors map to status codes and messages") {
  vd_config* c = nullptr;
  CHECK(vd_config_parse("{\"mc\": {\"scenarios\": 0}}", &c) == VD_ERR_CONFIG);
  CHECK(c == nullptr);
  CHECK(std::string(vd_last_error()).find("scenario") != std::string::npos);
  CHECK(vd_config_load("/nonexistent/config.json", &c) == VD_ERR_IO);
  CHECK(vd_config_preset("desk", nullptr) == VD_ERR_INVALID_ARGUMENT);
  CHECK(vd_config_preset("desk", &c) == VD_OK);
  CHECK(std::string(vd_last_error()).empty());
  CHECK(vd_config_set(c, "no_equals_sign") == VD_ERR_CONFIG);
  vd_config_free(c);
  vd_config_free(nullptr);
  CHECK(std::string(vd_version()).size() > 0);
}

TEST_CASE("configuration text and overrides") {
  vd_config* c = tiny();
  REQUIRE(vd_config_set(c, "output_dir=elsewhere") == VD_OK);
  char* dir = nullptr;
  REQUIRE(vd_config_output_dir(c, &dir) == VD_OK);
  CHECK(std::string(dir) == "elsewhere");
  vd_string_free(dir);
  char* json = nullptr;
  REQUIRE(vd_config_to_json(c, &json) == VD_OK);
  vd_config* again = nullptr;
  CHECK(vd_config_parse(json, &again) == VD_OK);
  vd_string_free(json);
  vd_config_free(again);
  vd_config_free(c);
}

TEST_CASE("draw, value, train and estimate") {
  vd_config* c = tiny();
  vd_portfolio *reps = nullptr, *training = nullptr, *validation = nullptr, *input = nullptr;
  REQUIRE(vd_portfolio_draw(c, "representatives", 0, &reps) == VD_OK);
  REQUIRE(vd_portfolio_draw(c, "training", 0, &training) == VD_OK);
  REQUIRE(vd_portfolio_draw(c, "validation", 0, &validation) == VD_OK);
  REQUIRE(vd_portfolio_draw(c, "input", 0, &input) == VD_OK);
  CHECK(vd_portfolio_draw(c, "nonsense", 0, &input) == VD_ERR_INVALID_ARGUMENT);
  CHECK(vd_portfolio_size(reps) == 12);
  CHECK(vd_portfolio_size(input) == 200);
  CHECK_FALSE(vd_portfolio_has_deltas(reps));

  vd_model* m = nullptr;
  CHECK(vd_model_train(c, reps, training, validation, &m) == VD_ERR_INVALID_ARGUMENT);
  CHECK(m == nullptr);

  double seconds = -1.0;
  for (auto* p : {reps, training, validation}) REQUIRE(vd_mc_value(c, p, &seconds) == VD_OK);
  CHECK(seconds >= 0.0);
  CHECK(vd_portfolio_has_deltas(reps));
  double d = 0.0;
  CHECK(vd_portfolio_delta(reps, 0, &d) == VD_OK);
  CHECK(std::isfinite(d));
  CHECK(vd_portfolio_delta(reps, 12, &d) == VD_ERR_INVALID_ARGUMENT);

  REQUIRE(vd_model_train(c, reps, training, validation, &m) == VD_OK);
  CHECK(vd_model_iterations(m) <= 200);
  CHECK(std::string(vd_model_stop_reason(m)).size() > 0);

  const auto dir = fs::temp_directory_path() / "vadelta_capi";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto model = (dir / "model.json").string();
  REQUIRE(vd_model_save(m, model.c_str()) == VD_OK);
  REQUIRE(vd_model_save_history(m, (dir / "history.csv").c_str()) == VD_OK);
  vd_model* loaded = nullptr;
  REQUIRE(vd_model_load(model.c_str(), &loaded) == VD_OK);

  vd_portfolio *a = nullptr, *b = nullptr;
  double ta = 0.0, tb = 0.0;
  REQUIRE(vd_estimate(c, "nn", nullptr, m, input, &a, &ta) == VD_OK);
  REQUIRE(vd_estimate(c, "nn", nullptr, loaded, input, &b, &tb) == VD_OK);
  CHECK(ta == tb);
  CHECK(vd_portfolio_size(a) == 200);
  double sum = 0.0;
  REQUIRE(vd_portfolio_total_delta(a, &sum) == VD_OK);
  CHECK(sum == doctest::Approx(ta).epsilon(1e-9));
  vd_portfolio_free(a);
  vd_portfolio_free(b);

  for (const char* method : {"kriging_spherical", "kriging_exponential", "idw_p1", "idw_p100", "rbf_eps1"}) {
    INFO(method);
    vd_portfolio* e = nullptr;
    double t = 0.0;
    CHECK(vd_estimate(c, method, reps, nullptr, input, &e, &t) == VD_OK);
    CHECK(std::isfinite(t));
    vd_portfolio_free(e);
  }
  vd_portfolio* e = nullptr;
  CHECK(vd_estimate(c, "idw_pX", reps, nullptr, input, &e, nullptr) == VD_ERR_INVALID_ARGUMENT);
  CHECK(vd_estimate(c, "splines", reps, nullptr, input, &e, nullptr) == VD_ERR_INVALID_ARGUMENT);
  CHECK(vd_estimate(c, "nn", reps, nullptr, input, &e, nullptr) == VD_ERR_INVALID_ARGUMENT);

  // Portfolio and results files round trip through the loader.
  const auto pcsv = (dir / "reps.csv").string(), rcsv = (dir / "reps_results.csv").string();
  REQUIRE(vd_portfolio_save(reps, pcsv.c_str()) == VD_OK);
  REQUIRE(vd_portfolio_save_results(reps, rcsv.c_str()) == VD_OK);
  vd_portfolio* back = nullptr;
  REQUIRE(vd_portfolio_load(pcsv.c_str(), rcsv.c_str(), &back) == VD_OK);
  double x = 0.0, y = 0.0;
  vd_portfolio_total_delta(reps, &x);
  vd_portfolio_total_delta(back, &y);
  CHECK(x == y);
  vd_portfolio_free(back);
  CHECK(vd_portfolio_save_results(input, rcsv.c_str()) == VD_ERR_INVALID_ARGUMENT);

  vd_model_free(m);
  vd_model_free(loaded);
  for (auto* p : {reps, training, validation, input}) vd_portfolio_free(p);
  vd_config_free(c);
  fs::remove_all(dir);
}

TEST_CASE("comparison, sensitivity and rendering") {
  vd_config* c = tiny();
  const auto dir = fs::temp_directory_path() / "vadelta_capi_reports";
  fs::remove_all(dir);
  vd_report* r = nullptr;
  REQUIRE(vd_run_comparison(c, &r) == VD_OK);
  REQUIRE(vd_report_emit(c, r, dir.c_str()) == VD_OK);
  vd_report_free(r);
  REQUIRE(vd_run_sensitivity(c, "training", 2, &r) == VD_OK);
  REQUIRE(vd_report_emit(c, r, dir.c_str()) == VD_OK);
  vd_report_free(r);
  CHECK(vd_run_sensitivity(c, "weather", 2, &r) == VD_ERR_CONFIG);

  char* text = nullptr;
  REQUIRE(vd_report_render(dir.c_str(), &text) == VD_OK);
  const std::string md = text;
  vd_string_free(text);
  CHECK(md.find("| nn |") != std::string::npos);
  CHECK(md.find("training,") == std::string::npos);
  CHECK(md.find("| training |") != std::string::npos);
  CHECK(vd_report_render("/nonexistent/dir", &text) == VD_ERR_IO);
  vd_config_free(c);
  fs::remove_all(dir);
}
