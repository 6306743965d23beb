#pragma once

#include "flowbench/data/scaler.hpp"
#include "flowbench/flow/flow_model.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace flowbench {

inline constexpr int kModelFormatVersion = 1;

/// A fitted flow together with the preprocessing needed to score raw rows.
struct ModelBundle {
  FlowModel model;
  ScalerState scaler;
  double train_nll_mean = 0.0;  // reference for the typicality test
  nlohmann::json provenance = nlohmann::json::object();
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json bundle_to_json(const ModelBundle& b);
ModelBundle bundle_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ModelBundle& b);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace flowbench
