#include "permreg/session_io.hpp"

#include <algorithm>
#include <cmath>

#include "permreg/model_io.hpp"

namespace permreg {

using nlohmann::json;

json action_to_json(const Action& action) {
  json out{{"kind", std::string(to_string(action.kind))}};
  if (action.node) out["node_id"] = *action.node;
  if (action.source) out["source_index"] = *action.source;
  return out;
}

json forest_to_json(const ConstraintForest& forest) {
  json nodes = json::array();
  for (const auto& [id, node] : forest.nodes()) {
    nodes.push_back({{"id", id},
                     {"items", constraint_to_json(node.constraint)},
                     {"parent_id", node.parent ? json(*node.parent) : json(nullptr)},
                     {"children", node.children},
                     {"active", node.active},
                     {"beta", node.beta}});
  }
  return nodes;
}

json session_view(const Session& session, const std::string& session_id) {
  const Iteration& it = session.current();
  double scale = 0.0;
  for (const auto& [id, node] : it.forest.nodes()) {
    if (node.active) scale = std::max(scale, std::abs(node.beta));
  }
  json nodes = json::array();
  for (const auto& [id, node] : it.forest.nodes()) {
    const double normalized = (node.active && scale > 0.0) ? node.beta / scale : 0.0;
    nodes.push_back({{"id", id},
                     {"items", constraint_to_json(node.constraint)},
                     {"parent_id", node.parent ? json(*node.parent) : json(nullptr)},
                     {"active", node.active},
                     {"beta", node.beta},
                     {"normalized_beta", normalized}});
  }
  json history = json::array();
  for (const auto& h : session.history()) history.push_back(h.val_mae);

  json view{{"session_id", session_id},
            {"n_items", session.n_items()},
            {"hyperparams", hyperparams_to_json(session.hyperparams())},
            {"iteration_index", it.index},
            {"action", action_to_json(it.action)},
            {"mu", it.model.mu},
            {"nodes", nodes},
            {"val_mae", it.val_mae},
            {"val_mae_history", history},
            {"best_index", session.best_index()},
            {"finalized", session.finalized()}};
  view["test_metrics"] = session.test_metrics() ? metrics_to_json(*session.test_metrics()) : json(nullptr);
  return view;
}

json session_export(const Session& session, const std::string& session_id) {
  json iterations = json::array();
  for (const auto& it : session.history()) {
    iterations.push_back({{"index", it.index},
                          {"action", action_to_json(it.action)},
                          {"hyperparams", hyperparams_to_json(it.hyperparams)},
                          {"nodes", forest_to_json(it.forest)},
                          {"model", model_to_json(it.model)},
                          {"val_mae", it.val_mae}});
  }
  json log = json::array();
  for (const auto& entry : session.action_log()) {
    json e{{"seq", entry.seq}, {"action", action_to_json(entry.action)}, {"unix_ms", entry.unix_ms}};
    e["error"] = entry.error ? json(std::string(to_string(*entry.error))) : json(nullptr);
    log.push_back(std::move(e));
  }
  json doc{{"format", 1},
           {"kind", "permreg-session"},
           {"session_id", session_id},
           {"n_items", session.n_items()},
           {"sizes",
            {{"train", session.train().size()},
             {"validation", session.validation().size()},
             {"test", session.test().size()}}},
           {"hyperparams", hyperparams_to_json(session.hyperparams())},
           {"iterations", iterations},
           {"best_index", session.best_index()},
           {"finalized", session.finalized()},
           {"action_log", log}};
  doc["test_metrics"] = session.test_metrics() ? metrics_to_json(*session.test_metrics()) : json(nullptr);
  return doc;
}

}  // namespace permreg
