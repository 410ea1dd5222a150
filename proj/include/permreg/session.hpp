#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "permreg/core.hpp"
#include "permreg/featurize.hpp"
#include "permreg/metrics.hpp"

namespace permreg {

using NodeId = std::int64_t;

/// What a node's surroundings looked like when it was deactivated by an
/// expand. Collapse restores the node's coefficient only if the surrounding
/// active model and learning rate are still exactly this; otherwise it
/// refits.
struct DeactivationContext {
  std::vector<std::pair<NodeId, double>> active_terms;
  double learning_rate = 0.0;

  bool operator==(const DeactivationContext&) const = default;
};

struct ConstraintNode {
  NodeId id = 0;
  Constraint constraint;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;
  bool active = true;
  double beta = 0.0;  // inactive nodes keep their last value but contribute 0
  std::optional<DeactivationContext> stash;

  bool operator==(const ConstraintNode&) const = default;
};

/// The session's constraint hierarchy. Nodes are keyed by id; ids are
/// assigned monotonically and never reused within a session.
class ConstraintForest {
 public:
  explicit ConstraintForest(NodeId first_id = 1) : next_id_(first_id) {}

  const std::map<NodeId, ConstraintNode>& nodes() const noexcept { return nodes_; }
  NodeId next_id() const noexcept { return next_id_; }

  /// Throws UnknownNode.
  const ConstraintNode& at(NodeId id) const;
  ConstraintNode& at(NodeId id);

  NodeId add(Constraint c, std::optional<NodeId> parent, double beta);
  /// Inserts a parentless active node under an existing id.
  void adopt_root(NodeId id, Constraint c, double beta);
  /// Makes sure new ids start at `next` or later.
  void reserve_ids(NodeId next) noexcept { next_id_ = std::max(next_id_, next); }
  bool contains(const Constraint& c) const;
  /// Removes every descendant of `id` (not `id` itself).
  void remove_descendants(NodeId id);

  /// Active (id, beta) pairs by ascending id, optionally skipping one node.
  std::vector<std::pair<NodeId, double>> active_terms(std::optional<NodeId> skip = {}) const;

  /// mu plus the active nodes with their coefficients, by ascending id.
  Model to_model(std::size_t n_items, double mu) const;

  bool operator==(const ConstraintForest&) const = default;

 private:
  std::map<NodeId, ConstraintNode> nodes_;
  NodeId next_id_ = 1;
};

enum class ActionKind { Init, Expand, Collapse, Simplify, Restart, Revert, Finalize };

std::string_view to_string(ActionKind kind) noexcept;

struct Action {
  ActionKind kind = ActionKind::Init;
  std::optional<NodeId> node;
  std::optional<std::size_t> source;

  bool operator==(const Action&) const = default;
};

struct Iteration {
  std::size_t index = 0;
  Action action;
  Hyperparams hyperparams;
  ConstraintForest forest;
  Model model;
  double val_mae = 0.0;
};

/// One attempted action, successful or not, with wall-clock time.
struct ActionLogEntry {
  std::size_t seq = 0;
  Action action;
  std::optional<ErrorCode> error;
  std::int64_t unix_ms = 0;
};

/// Interactive refinement of a constraint model. Every successful action
/// appends a self-contained Iteration; failed actions leave the state
/// untouched. Not thread-safe: callers serialize mutations per session.
class Session {
 public:
  /// Throws IncompatibleDatasets or InvalidHyperparams.
  Session(Dataset train, Dataset validation, Dataset test, Hyperparams hp);

  // Mutating actions. All throw AlreadyFinalized after finalize().
  /// Throws UnknownNode, NodeInactive, SaturatedConstraint, NoViableCandidate.
  const Iteration& expand(NodeId node);
  /// Throws UnknownNode, NodeActive.
  const Iteration& collapse(NodeId node);
  /// Throws EmptyModel.
  const Iteration& simplify();
  /// Throws InvalidHyperparams.
  const Iteration& restart(const Hyperparams& hp);
  /// Throws IndexOutOfRange.
  const Iteration& revert(std::size_t source_index);
  /// Scores the best iteration's model on the test split.
  const MetricsReport& finalize();

  const std::vector<Iteration>& history() const noexcept { return history_; }
  const Iteration& current() const noexcept { return history_.back(); }
  std::size_t best_index() const noexcept { return best_index_; }
  bool finalized() const noexcept { return finalized_; }
  const std::optional<MetricsReport>& test_metrics() const noexcept { return test_metrics_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  const std::vector<ActionLogEntry>& action_log() const noexcept { return log_; }
  std::size_t n_items() const noexcept { return train_.n_items(); }
  double mu() const noexcept { return mu_; }

  const Dataset& train() const noexcept { return train_; }
  const Dataset& validation() const noexcept { return validation_; }
  const Dataset& test() const noexcept { return test_; }

  /// Validation MAE of a model, as recorded in iterations.
  double validation_mae(const Model& model) const;

 private:
  ConstraintForest initial_forest(NodeId first_id) const;
  const Iteration& append(Action action, ConstraintForest forest);
  const Iteration& append_copy(Action action, const Iteration& source);
  void require_open() const;
  template <class F>
  const Iteration& logged(Action action, F&& body);

  Dataset train_;
  Dataset validation_;
  Dataset test_;
  FeatureIndex train_index_;
  FeatureIndex validation_index_;
  Hyperparams hp_;
  double mu_;
  std::vector<Iteration> history_;
  std::size_t best_index_ = 0;
  NodeId next_node_id_ = 1;  // session-wide, so reverted branches never reuse ids
  bool finalized_ = false;
  std::optional<MetricsReport> test_metrics_;
  std::vector<ActionLogEntry> log_;
};

}  // namespace permreg
