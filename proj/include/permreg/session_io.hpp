#pragma once

#include <string>

#include "json.hpp"
#include "permreg/session.hpp"

namespace permreg {

/// What a client sees of a session: the current iteration's constraint
/// tree with coefficients scaled for display, the validation error
/// history and the best-model pointer.
///
/// normalized_beta = beta / max |beta| over active nodes, in [-1, 1];
/// inactive nodes contribute nothing and report 0.
nlohmann::json session_view(const Session& session, const std::string& session_id);

/// Self-describing record of a whole session: hyperparameters, every
/// iteration (action, tree, model, validation MAE), the action log and the
/// final test metrics when finalized.
nlohmann::json session_export(const Session& session, const std::string& session_id);

nlohmann::json action_to_json(const Action& action);
nlohmann::json forest_to_json(const ConstraintForest& forest);

}  // namespace permreg
