#pragma once

#include <filesystem>

#include "json.hpp"
#include "permreg/core.hpp"
#include "permreg/data.hpp"
#include "permreg/metrics.hpp"

namespace permreg {

/// Version tag written into every model document.
inline constexpr int kModelFormat = 1;

// Model document:
//   {"format": 1, "n_items": n, "mu": x, "terms": [{"items": [..], "beta": x}, ...]}
// Item lists are 1-based. Doubles are written in shortest round-trip form.

nlohmann::json model_to_json(const Model& model);
/// Throws Malformed, InvalidConstraint, ItemOutOfRange or DuplicateConstraint.
Model model_from_json(const nlohmann::json& doc);

Model load_model(const std::filesystem::path& path);
void save_model(const Model& model, const std::filesystem::path& path);

nlohmann::json constraint_to_json(const Constraint& c);
Constraint constraint_from_json(const nlohmann::json& doc, std::size_t n_items);

nlohmann::json metrics_to_json(const MetricsReport& report);

nlohmann::json hyperparams_to_json(const Hyperparams& hp);
/// Throws Malformed; range checks are left to Hyperparams::validate.
Hyperparams hyperparams_from_json(const nlohmann::json& doc);

// Planted spec document mirrors PlantedSpec:
//   {"n_items", "m_rows", "mu0", "planted": [{"items", "coefficient"}], "noise_sd", "seed"}
nlohmann::json planted_spec_to_json(const PlantedSpec& spec);
PlantedSpec planted_spec_from_json(const nlohmann::json& doc);

/// Throws IoError or Malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace permreg
