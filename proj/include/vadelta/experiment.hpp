#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vadelta/mc_engine.hpp"
#include "vadelta/mortality.hpp"
#include "vadelta/portfolio.hpp"
#include "vadelta/training.hpp"

namespace vadelta {

/// One estimator in a comparison run.
///   name: mc | nn | kriging | idw | rbf
struct MethodSpec {
  std::string name = "nn";
  std::string variogram = "spherical";  // kriging only
  double power = 1.0;                   // idw only
  double epsilon = 1.0;                 // rbf only

  /// Stable display label, e.g. "idw_p1" or "kriging_spherical".
  std::string label() const;
};

enum class SweepKind { Representatives, Training, Validation, Sizes };
std::string_view toString(SweepKind k) noexcept;
SweepKind parseSweepKind(std::string_view s);

struct SensitivityConfig {
  SweepKind vary = SweepKind::Validation;
  std::size_t realizations = 5;
  /// Multiplies the (r, t, v) triples of the size sweep.
  double sizeFactor = 1.0;
};

struct ExperimentConfig {
  GenerationSpace inputSpace = GenerationSpace::inputSpace();
  GenerationSpace representativeGrid = GenerationSpace::representativeGrid();
  GenerationSpace trainingGrid = GenerationSpace::trainingGrid();
  std::size_t inputSize = 100000;
  std::size_t representativeCount = 300;
  std::size_t trainingSize = 200;
  std::size_t validationSize = 250;
  McConfig mc;
  TrainConfig train;
  std::vector<MethodSpec> methods;
  double gamma = 1.0;  // categorical weight in both distances
  std::size_t replications = 6;
  std::string outputDir = "results";
  std::string mortalityFile;  // empty: built-in Gompertz-Makeham table
  std::string cacheDir;       // empty: ground truth is not cached
  std::uint64_t seed = 2024;
  SensitivityConfig sensitivity;

  /// Reference experiment sizes: N = 100000, n = 300, 10000 scenarios.
  static ExperimentConfig paperScale();
  /// N = 10000, n = 100, 1000 scenarios, 3 replications.
  static ExperimentConfig deskScale();

  /// Throws ConfigError on empty method lists, zero sizes or bad spaces.
  void validate() const;
};

/// JSON form of the configuration. Parsing starts from the preset named by
/// the optional "preset" key ("paper" or "desk", default "paper") and
/// applies the given keys on top.
std::string configToJson(const ExperimentConfig& cfg);
ExperimentConfig configFromJson(const std::string& text);
ExperimentConfig loadConfig(const std::filesystem::path& path);
/// Applies "dotted.key=value" to the JSON form; the value is parsed as JSON
/// when possible and taken as a string otherwise.
ExperimentConfig applyOverride(const ExperimentConfig& cfg, const std::string& assignment);

enum class PortfolioKind { Input, Representatives, Training, Validation };
std::string_view toString(PortfolioKind k) noexcept;
PortfolioKind parsePortfolioKind(std::string_view s);

/// Contracts of one experiment portfolio. `draw` selects an independent
/// realization (the input portfolio has only one); `count` 0 means the
/// configured size. Validation contracts keep their input-portfolio ids.
std::vector<VaContract> drawPortfolio(const ExperimentConfig& cfg, PortfolioKind kind,
                                      std::size_t draw = 0, std::size_t count = 0);
/// MC settings with the seed derived from the master seed.
McConfig valuationConfig(const ExperimentConfig& cfg);
/// Training settings for a replication.
TrainConfig trainingConfig(const ExperimentConfig& cfg, std::size_t replication);

/// Content hash of everything that determines the ground truth.
std::string groundTruthKey(const ExperimentConfig& cfg, const MortalityTable& mortality);

MortalityTable loadMortality(const ExperimentConfig& cfg);

struct MethodOutcome {
  std::string method;
  std::size_t replication = 0;
  double estimate = 0.0;
  double truth = 0.0;
  double relError = 0.0;           // (estimate - truth) / |truth|
  double setupSeconds = 0.0;       // fitting / training
  double portfolioSeconds = 0.0;   // setup + portfolio-mode estimation
  double perPolicySeconds = 0.0;   // setup + per-policy estimation
};

struct ReplicationDetail {
  std::size_t replication = 0;
  double representativeMcSeconds = 0.0;
  std::vector<TrainRecord> history;
  std::size_t iterations = 0;
  StopReason stopReason = StopReason::None;
};

struct ScatterPoint {
  std::int64_t id = 0;
  double mcDelta = 0.0;
  double nnDelta = 0.0;
};

struct ComparisonReport {
  double truth = 0.0;
  double groundTruthSeconds = 0.0;
  bool groundTruthCached = false;
  std::vector<MethodOutcome> rows;
  std::vector<ReplicationDetail> replications;
  std::vector<ScatterPoint> scatter;  // validation portfolio, replication 0
};

/// Fixed inputs shared by the comparison and sensitivity runs.
struct ExperimentData {
  std::vector<VaContract> input;
  std::vector<McResult> groundTruth;
  double truth = 0.0;
  double groundTruthSeconds = 0.0;
  bool cached = false;
  MortalityTable mortality;
};

/// Generates the input portfolio and values it by MC, reusing the cache
/// when configured.
ExperimentData prepareExperiment(const ExperimentConfig& cfg);

ComparisonReport runComparison(const ExperimentConfig& cfg);
ComparisonReport runComparison(const ExperimentConfig& cfg, const ExperimentData& data);

struct SensitivityRow {
  SweepKind sweep = SweepKind::Validation;
  std::size_t reps = 0, training = 0, validation = 0;
  std::size_t realization = 0;
  double estimate = 0.0;
  double relError = 0.0;
  double seconds = 0.0;  // training + estimation
  std::size_t iterations = 0;
  StopReason stopReason = StopReason::None;
};

struct SensitivitySummary {
  SweepKind sweep = SweepKind::Validation;
  std::size_t reps = 0, training = 0, validation = 0;
  std::size_t count = 0;
  double errMean = 0.0, errStd = 0.0;
  double timeMean = 0.0, timeStd = 0.0;
};

struct SensitivityReport {
  double truth = 0.0;
  std::vector<SensitivityRow> rows;
  std::vector<SensitivitySummary> summary;
};

/// Sample mean and standard deviation (0 for a single value).
std::pair<double, double> meanStd(const std::vector<double>& v);

SensitivityReport runSensitivity(const ExperimentConfig& cfg, SweepKind vary,
                                 std::size_t realizations);
SensitivityReport runSensitivity(const ExperimentConfig& cfg, const ExperimentData& data,
                                 SweepKind vary, std::size_t realizations);

/// Comparison: comparison.csv, comparison_summary.csv, timings.csv,
/// scatter.csv, training.csv and history_rep<k>.csv. Sensitivity:
/// sensitivity.csv, sensitivity_summary.csv, sensitivity_timings.csv and
/// sensitivity_timing_summary.csv. Only the groups given are written (both
/// null: every file, header-only); manifest.json is updated in place. Only
/// the timing files and the manifest timestamp vary between identical runs.
void emitReports(const ExperimentConfig& cfg, const ComparisonReport* comparison,
                 const SensitivityReport* sensitivity,
                 const std::filesystem::path& outDir);

}  // namespace vadelta
