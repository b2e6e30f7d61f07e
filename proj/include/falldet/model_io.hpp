#pragma once

#include <filesystem>

#include <json.hpp>

#include "falldet/classifiers.hpp"

namespace falldet::model_io {

/// Serialize any fitted model to a tagged JSON document:
///   { "format": "falldet-model", "schema_version": 1, "kind": ...,
///     "seed": ..., "hyperparameters": {...}, "parameters": {...} }
/// All numeric state round-trips exactly, so a reloaded model predicts
/// bit-identically.
nlohmann::json to_json(const classifiers::Model& model);

classifiers::Model model_from_json(const nlohmann::json& doc);

void save_model(const std::filesystem::path& path,
                const classifiers::Model& model);

classifiers::Model load_model(const std::filesystem::path& path);

}  // namespace falldet::model_io
