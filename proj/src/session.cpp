#include "permreg/session.hpp"

#include <algorithm>
#include <cmath>

#include "permreg/boost.hpp"

namespace permreg {

const ConstraintNode& ConstraintForest::at(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, "no node " + std::to_string(id));
  return it->second;
}

ConstraintNode& ConstraintForest::at(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, "no node " + std::to_string(id));
  return it->second;
}

NodeId ConstraintForest::add(Constraint c, std::optional<NodeId> parent, double beta) {
  const NodeId id = next_id_++;
  nodes_.emplace(id, ConstraintNode{id, std::move(c), parent, {}, true, beta, std::nullopt});
  if (parent) at(*parent).children.push_back(id);
  return id;
}

void ConstraintForest::adopt_root(NodeId id, Constraint c, double beta) {
  nodes_.emplace(id, ConstraintNode{id, std::move(c), std::nullopt, {}, true, beta, std::nullopt});
  next_id_ = std::max(next_id_, id + 1);
}

bool ConstraintForest::contains(const Constraint& c) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const auto& kv) { return kv.second.constraint == c; });
}

void ConstraintForest::remove_descendants(NodeId id) {
  std::vector<NodeId> pending = at(id).children;
  at(id).children.clear();
  while (!pending.empty()) {
    const NodeId next = pending.back();
    pending.pop_back();
    auto it = nodes_.find(next);
    if (it == nodes_.end()) continue;
    pending.insert(pending.end(), it->second.children.begin(), it->second.children.end());
    nodes_.erase(it);
  }
}

std::vector<std::pair<NodeId, double>> ConstraintForest::active_terms(
    std::optional<NodeId> skip) const {
  std::vector<std::pair<NodeId, double>> out;
  for (const auto& [id, node] : nodes_) {
    if (node.active && id != skip) out.emplace_back(id, node.beta);
  }
  return out;
}

Model ConstraintForest::to_model(std::size_t n_items, double mu) const {
  Model model{n_items, mu, {}};
  for (const auto& [id, node] : nodes_) {
    if (node.active) model.add_term(node.constraint, node.beta);
  }
  return model;
}

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::Init: return "init";
    case ActionKind::Expand: return "expand";
    case ActionKind::Collapse: return "collapse";
    case ActionKind::Simplify: return "simplify";
    case ActionKind::Restart: return "restart";
    case ActionKind::Revert: return "revert";
    case ActionKind::Finalize: return "finalize";
  }
  return "unknown";
}

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Session::Session(Dataset train, Dataset validation, Dataset test, Hyperparams hp)
    : train_(std::move(train)),
      validation_(std::move(validation)),
      test_(std::move(test)),
      train_index_(train_),
      validation_index_(validation_),
      hp_(hp),
      mu_(train_.mean_target()) {
  if (validation_.n_items() != train_.n_items() || test_.n_items() != train_.n_items()) {
    throw Error(ErrorCode::IncompatibleDatasets, "train, validation and test item counts differ");
  }
  hp_.validate();
  logged(Action{ActionKind::Init, {}, {}}, [&] { return &append({ActionKind::Init, {}, {}}, initial_forest(1)); });
}

template <class F>
const Iteration& Session::logged(Action action, F&& body) {
  ActionLogEntry entry{log_.size(), action, std::nullopt, now_ms()};
  try {
    const Iteration* it = body();
    log_.push_back(std::move(entry));
    return *it;
  } catch (const Error& e) {
    entry.error = e.code();
    log_.push_back(std::move(entry));
    throw;
  }
}

void Session::require_open() const {
  if (finalized_) throw Error(ErrorCode::AlreadyFinalized, "session is finalized");
}

double Session::validation_mae(const Model& model) const {
  const auto pred = predict_all(model, validation_, validation_index_);
  return mae(validation_.targets(), pred);
}

ConstraintForest Session::initial_forest(NodeId first_id) const {
  const Model base{n_items(), mu_, {}};
  const Residuals delta = residuals(base, train_, train_index_);
  const auto pairs = all_pairs(n_items());
  const auto selected =
      select_top_l(pairs, train_index_, delta, static_cast<std::size_t>(hp_.l));
  std::vector<Constraint> chosen;
  for (const auto& s : selected) chosen.push_back(s.constraint);
  const Model fitted = fit_sequential(base, chosen, train_, train_index_, hp_.learning_rate);

  ConstraintForest forest(first_id);
  for (const auto& term : fitted.terms) forest.add(term.constraint, std::nullopt, term.beta);
  return forest;
}

const Iteration& Session::append(Action action, ConstraintForest forest) {
  Iteration it;
  it.index = history_.size();
  it.action = action;
  it.hyperparams = hp_;
  it.model = forest.to_model(n_items(), mu_);
  it.val_mae = validation_mae(it.model);
  it.forest = std::move(forest);
  next_node_id_ = std::max(next_node_id_, it.forest.next_id());
  history_.push_back(std::move(it));
  if (history_.back().val_mae < history_[best_index_].val_mae) best_index_ = history_.size() - 1;
  return history_.back();
}

const Iteration& Session::append_copy(Action action, const Iteration& source) {
  Iteration it = source;
  it.forest.reserve_ids(next_node_id_);
  it.index = history_.size();
  it.action = action;
  it.hyperparams = hp_;
  history_.push_back(std::move(it));
  if (history_.back().val_mae < history_[best_index_].val_mae) best_index_ = history_.size() - 1;
  return history_.back();
}

const Iteration& Session::expand(NodeId node_id) {
  const Action action{ActionKind::Expand, node_id, {}};
  return logged(action, [&] {
    require_open();
    ConstraintForest forest = current().forest;
    ConstraintNode& node = forest.at(node_id);
    if (!node.active) throw Error(ErrorCode::NodeInactive, "node " + std::to_string(node_id) + " is inactive");
    const Constraint parent = node.constraint;
    auto children = generate_children(n_items(), parent);

    node.stash = DeactivationContext{forest.active_terms(node_id), hp_.learning_rate};
    node.active = false;

    std::erase_if(children, [&](const Constraint& c) { return forest.contains(c); });
    if (children.empty()) {
      throw Error(ErrorCode::NoViableCandidate, "every child of " + parent.to_string() + " is already in the tree");
    }
    const Model base = forest.to_model(n_items(), mu_);
    const Residuals delta = residuals(base, train_, train_index_);
    const auto selected = select_top_l(children, train_index_, delta, static_cast<std::size_t>(hp_.l));
    std::vector<Constraint> chosen;
    for (const auto& s : selected) chosen.push_back(s.constraint);
    const Model fitted = fit_sequential(base, chosen, train_, train_index_, hp_.learning_rate);
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      forest.add(chosen[k], node_id, fitted.terms[base.terms.size() + k].beta);
    }
    return &append(action, std::move(forest));
  });
}

const Iteration& Session::collapse(NodeId node_id) {
  const Action action{ActionKind::Collapse, node_id, {}};
  return logged(action, [&] {
    require_open();
    ConstraintForest forest = current().forest;
    if (forest.at(node_id).active) {
      throw Error(ErrorCode::NodeActive, "node " + std::to_string(node_id) + " is active");
    }
    forest.remove_descendants(node_id);
    ConstraintNode& node = forest.at(node_id);
    const DeactivationContext now{forest.active_terms(), hp_.learning_rate};
    if (!node.stash || !(*node.stash == now)) {
      const Residuals delta = residuals(forest.to_model(n_items(), mu_), train_, train_index_);
      node.beta = fit_coefficient(train_index_.support(node.constraint), delta, hp_.learning_rate);
    }
    node.stash.reset();
    node.active = true;
    return &append(action, std::move(forest));
  });
}

const Iteration& Session::simplify() {
  const Action action{ActionKind::Simplify, {}, {}};
  return logged(action, [&] {
    require_open();
    const ConstraintForest& old = current().forest;
    std::vector<const ConstraintNode*> active;
    for (const auto& [id, node] : old.nodes()) {
      if (node.active) active.push_back(&node);
    }
    if (active.empty()) throw Error(ErrorCode::EmptyModel, "no active constraints to keep");
    std::stable_sort(active.begin(), active.end(), [](const ConstraintNode* a, const ConstraintNode* b) {
      return std::abs(a->beta) > std::abs(b->beta);
    });
    active.resize(std::min(active.size(), static_cast<std::size_t>(hp_.l)));

    std::vector<Constraint> order;
    for (const auto* node : active) order.push_back(node->constraint);
    const Model fitted = fit_sequential(Model{n_items(), mu_, {}}, order, train_, train_index_, hp_.learning_rate);

    // Kept nodes retain their ids and become parentless roots.
    ConstraintForest forest(next_node_id_);
    std::vector<std::size_t> by_id(active.size());
    for (std::size_t k = 0; k < by_id.size(); ++k) by_id[k] = k;
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t a, std::size_t b) { return active[a]->id < active[b]->id; });
    for (std::size_t k : by_id) forest.adopt_root(active[k]->id, order[k], fitted.terms[k].beta);
    return &append(action, std::move(forest));
  });
}

const Iteration& Session::restart(const Hyperparams& hp) {
  const Action action{ActionKind::Restart, {}, {}};
  return logged(action, [&] {
    require_open();
    hp.validate();
    const Hyperparams previous = hp_;
    hp_ = hp;
    try {
      return &append(action, initial_forest(next_node_id_));
    } catch (...) {
      hp_ = previous;
      throw;
    }
  });
}

const Iteration& Session::revert(std::size_t source_index) {
  const Action action{ActionKind::Revert, {}, source_index};
  return logged(action, [&] {
    require_open();
    if (source_index >= history_.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "no iteration " + std::to_string(source_index));
    }
    const Iteration source = history_[source_index];
    return &append_copy(action, source);
  });
}

const MetricsReport& Session::finalize() {
  const Action action{ActionKind::Finalize, {}, {}};
  logged(action, [&]() -> const Iteration* {
    require_open();
    test_metrics_ = evaluate(history_[best_index_].model, test_);
    finalized_ = true;
    return &history_[best_index_];
  });
  return *test_metrics_;
}

}  // namespace permreg
