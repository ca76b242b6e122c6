#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "vadelta/metamodel.hpp"
#include "vadelta/training.hpp"

namespace vadelta {

inline constexpr int kModelSchemaVersion = 1;

/// JSON text with schema version, feature configuration, representatives and
/// their deltas, weights, biases, normalization constant and seed.
std::string modelToJson(const Metamodel& model);
Metamodel modelFromJson(const std::string& text);

void saveModel(const std::filesystem::path& path, const Metamodel& model);
Metamodel loadModel(const std::filesystem::path& path);

// History CSV: iteration,train_mse,val_mse,mu_t
std::string historyCsv(std::span<const TrainRecord> records);
void writeHistoryCsv(const std::filesystem::path& path,
                     std::span<const TrainRecord> records);

}  // namespace vadelta
