#pragma once

// Model definition files, format "levyheat-model/1".

#include <json.hpp>

#include <string>

#include "levyheat/model.hpp"

namespace levyheat {

inline constexpr const char* kModelFormat = "levyheat-model/1";

// Throws ConfigError naming the offending field path (e.g. "psi1.beta").
LevyModel model_from_json(const nlohmann::json& doc);
LevyModel load_model(const std::string& path);
nlohmann::json model_to_json(const LevyModel& model);

}  // namespace levyheat
