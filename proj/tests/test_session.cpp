#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"
#include "permreg/boost.hpp"
#include "permreg/session.hpp"
#include "permreg/session_io.hpp"

using namespace permreg;
using doctest::Approx;
using fixtures::code_of;

namespace {

Session four_row_session(int l) {
  return Session(fixtures::four_rows(), fixtures::four_rows(), fixtures::four_rows(), Hyperparams{l, 1.0});
}

Session random_session(std::uint64_t seed, std::size_t n, int l, double lr) {
  Rng rng(seed);
  return Session(fixtures::random_dataset(rng, n, 120), fixtures::random_dataset(rng, n, 40),
                 fixtures::random_dataset(rng, n, 40), Hyperparams{l, lr});
}

// Structural invariants every iteration must satisfy.
void check_coherent(const Session& s) {
  std::size_t best = 0;
  for (std::size_t k = 0; k < s.history().size(); ++k) {
    const Iteration& it = s.history()[k];
    CHECK(it.index == k);
    CHECK(it.model == it.forest.to_model(s.n_items(), s.mu()));
    CHECK(it.val_mae == s.validation_mae(it.model));
    if (it.val_mae < s.history()[best].val_mae) best = k;
    ConstraintSet seen;
    for (const auto& [id, node] : it.forest.nodes()) {
      CHECK(id == node.id);
      CHECK(id < it.forest.next_id());
      CHECK(seen.insert(node.constraint).second);
      if (node.parent) {
        const auto& parent = it.forest.at(*node.parent);
        CHECK(std::count(parent.children.begin(), parent.children.end(), id) == 1);
        CHECK_FALSE(parent.active);
      }
      for (NodeId child : node.children) CHECK(it.forest.at(child).parent == id);
    }
  }
  CHECK(s.best_index() == best);
}

}  // namespace

TEST_CASE("session init: top pair at the training mean") {
  Session s = four_row_session(1);
  REQUIRE(s.history().size() == 1);
  const Iteration& it = s.current();
  CHECK(it.action.kind == ActionKind::Init);
  REQUIRE(it.forest.nodes().size() == 1);
  const ConstraintNode& root = it.forest.at(1);
  CHECK(root.constraint == Constraint({2, 3}));
  CHECK(root.beta == Approx(0.35).epsilon(1e-12));
  CHECK(root.active);
  CHECK(s.mu() == Approx(0.6).epsilon(1e-15));
  check_coherent(s);
}

TEST_CASE("expand replaces a node with its best children") {
  Session s = four_row_session(2);
  // init picks (2,3) then (3,2)
  REQUIRE(s.current().forest.nodes().size() == 2);
  CHECK(s.current().forest.at(2).constraint == Constraint({3, 2}));
  CHECK(s.current().forest.at(2).beta == Approx(-0.35).epsilon(1e-12));

  const Iteration& it = s.expand(1);
  const auto& f = it.forest;
  CHECK_FALSE(f.at(1).active);
  REQUIRE(f.at(1).children.size() == 2);
  // (1,2,3) scores 0.4 on row 0, (2,1,3) 0.3 on row 2, (2,3,1) is never fulfilled
  CHECK(f.at(3).constraint == Constraint({1, 2, 3}));
  CHECK(f.at(3).beta == Approx(0.4).epsilon(1e-12));
  CHECK(f.at(4).constraint == Constraint({2, 1, 3}));
  CHECK(f.at(4).beta == Approx(0.3).epsilon(1e-12));
  CHECK(f.at(3).parent == NodeId{1});
  check_coherent(s);
}

TEST_CASE("expand then collapse restores the coefficient exactly") {
  Session s = random_session(1, 5, 4, 0.7);
  std::vector<NodeId> ids;
  for (const auto& kv : s.current().forest.nodes()) ids.push_back(kv.first);
  for (NodeId id : ids) {
    Session t = s;
    const double before = t.current().forest.at(id).beta;
    const Model model_before = t.current().model;
    t.expand(id);
    t.collapse(id);
    CHECK(t.current().forest.at(id).beta == before);
    CHECK(t.current().forest.at(id).children.empty());
    CHECK(t.current().model == model_before);
  }
}

TEST_CASE("collapse refits when the surroundings changed") {
  Session s = random_session(2, 5, 3, 1.0);
  s.expand(1);
  const NodeId child = s.current().forest.at(1).children.front();
  s.expand(2);
  s.collapse(1);  // node 2 is now inactive: context differs
  const auto& f = s.current().forest;
  Model others = f.to_model(s.n_items(), s.mu());
  std::erase_if(others.terms, [&](const Term& t) { return t.constraint == f.at(1).constraint; });
  const Residuals d = residuals(others, s.train());
  CHECK(f.at(1).beta ==
        Approx(fit_coefficient(support_vector(s.train(), f.at(1).constraint), d, 1.0)).epsilon(1e-12));
  CHECK_FALSE(f.nodes().contains(child));
  check_coherent(s);
}

TEST_CASE("action errors leave the session unchanged") {
  Session s = four_row_session(2);
  CHECK(code_of([&] { s.expand(99); }) == ErrorCode::UnknownNode);
  CHECK(code_of([&] { s.collapse(1); }) == ErrorCode::NodeActive);
  s.expand(1);
  CHECK(code_of([&] { s.expand(1); }) == ErrorCode::NodeInactive);
  CHECK(code_of([&] { s.collapse(3); }) == ErrorCode::NodeActive);
  // (1,2,3) holds every item
  CHECK(code_of([&] { s.expand(3); }) == ErrorCode::SaturatedConstraint);
  CHECK(code_of([&] { s.revert(17); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { s.restart(Hyperparams{0, 1.0}); }) == ErrorCode::InvalidHyperparams);
  CHECK(s.hyperparams().l == 2);
  CHECK(s.history().size() == 2);

  const auto& log = s.action_log();
  REQUIRE(log.size() == 9);
  CHECK(log[0].action.kind == ActionKind::Init);
  CHECK(log[1].error == ErrorCode::UnknownNode);
  CHECK_FALSE(log[3].error.has_value());
  for (std::size_t k = 0; k < log.size(); ++k) {
    CHECK(log[k].seq == k);
    CHECK(log[k].unix_ms > 0);
  }
  check_coherent(s);
}

TEST_CASE("revert appends a copy of an earlier iteration") {
  Session s = four_row_session(2);
  s.expand(1);
  s.expand(2);
  const Iteration& it = s.revert(0);
  CHECK(it.index == 3);
  CHECK(it.action.kind == ActionKind::Revert);
  CHECK(it.action.source == std::size_t{0});
  CHECK(it.forest.nodes() == s.history()[0].forest.nodes());
  CHECK(it.model == s.history()[0].model);
  CHECK(it.val_mae == s.history()[0].val_mae);
  // earlier entries are untouched
  CHECK_FALSE(s.history()[2].forest.at(2).active);
  // ids are never reused, even on a branch restored from before they existed
  const Iteration& branched = s.expand(1);
  CHECK(branched.forest.at(1).children.front() == 7);
  check_coherent(s);
}

TEST_CASE("simplify keeps the l largest coefficients as roots") {
  Session s = random_session(3, 5, 3, 1.0);
  s.expand(1);
  s.expand(2);
  s.restart(Hyperparams{2, 1.0});
  s.revert(2);
  const ConstraintForest before = s.current().forest;
  std::vector<const ConstraintNode*> active;
  for (const auto& [id, node] : before.nodes()) {
    if (node.active) active.push_back(&node);
  }
  std::stable_sort(active.begin(), active.end(),
                   [](auto* a, auto* b) { return std::abs(a->beta) > std::abs(b->beta); });
  active.resize(2);

  const Iteration& it = s.simplify();
  REQUIRE(it.forest.nodes().size() == 2);
  std::vector<Constraint> order;
  for (const auto* node : active) {
    const auto& kept = it.forest.at(node->id);
    CHECK(kept.constraint == node->constraint);
    CHECK_FALSE(kept.parent.has_value());
    CHECK(kept.active);
    order.push_back(node->constraint);
  }
  const Model refit = fit_sequential(Model{s.n_items(), s.mu(), {}}, order, s.train(), 1.0);
  for (std::size_t k = 0; k < 2; ++k) CHECK(it.forest.at(active[k]->id).beta == refit.terms[k].beta);
  CHECK(it.forest.next_id() == before.next_id());
  check_coherent(s);
}

TEST_CASE("restart rebuilds from the training mean with new hyperparameters") {
  Session s = four_row_session(1);
  s.expand(1);
  const Iteration& it = s.restart(Hyperparams{2, 0.5});
  CHECK(s.hyperparams().l == 2);
  CHECK(it.hyperparams.learning_rate == 0.5);
  REQUIRE(it.forest.nodes().size() == 2);
  const auto& first = it.forest.nodes().begin()->second;
  CHECK(first.id == 3);  // after root 1 and its single child 2
  CHECK(first.constraint == Constraint({2, 3}));
  CHECK(first.beta == Approx(0.175).epsilon(1e-12));
  check_coherent(s);
}

TEST_CASE("finalize scores the best iteration on the test split and locks the session") {
  Session s = random_session(4, 5, 3, 1.0);
  s.expand(1);
  s.expand(2);
  const MetricsReport rep = s.finalize();
  CHECK(s.finalized());
  CHECK(rep == evaluate(s.history()[s.best_index()].model, s.test()));
  CHECK(code_of([&] { s.expand(3); }) == ErrorCode::AlreadyFinalized);
  CHECK(code_of([&] { s.finalize(); }) == ErrorCode::AlreadyFinalized);
  CHECK(s.action_log().back().error == ErrorCode::AlreadyFinalized);
}

TEST_CASE("session rejects mismatched datasets and bad hyperparameters") {
  const Dataset three = fixtures::four_rows();
  const Dataset two = fixtures::make_dataset(2, {{1, 2}}, {1.0});
  CHECK(code_of([&] { Session(three, two, three, Hyperparams{}); }) == ErrorCode::IncompatibleDatasets);
  CHECK(code_of([&] { Session(three, three, three, Hyperparams{21, 1.0}); }) == ErrorCode::InvalidHyperparams);
}

TEST_CASE("session view") {
  Session s = four_row_session(2);
  s.expand(1);
  const auto view = session_view(s, "s-1");
  CHECK(view.at("session_id") == "s-1");
  CHECK(view.at("iteration_index") == 1);
  CHECK(view.at("action").at("kind") == "expand");
  CHECK(view.at("val_mae_history").size() == 2);
  double max_abs = 0.0;
  for (const auto& node : view.at("nodes")) {
    const double nb = node.at("normalized_beta").get<double>();
    CHECK(std::abs(nb) <= 1.0);
    if (!node.at("active").get<bool>()) CHECK(nb == 0.0);
    max_abs = std::max(max_abs, std::abs(nb));
  }
  CHECK(max_abs == 1.0);
  CHECK(view.at("test_metrics").is_null());

  const auto doc = session_export(s, "s-1");
  CHECK(doc.at("kind") == "permreg-session");
  CHECK(doc.at("iterations").size() == 2);
  CHECK(doc.at("action_log").size() == 2);
}

TEST_CASE("random action sequences keep the session coherent") {
  Rng rng(5);
  for (int trial = 0; trial < 15; ++trial) {
    Session s = random_session(100 + trial, 4 + rng.below(2), 1 + static_cast<int>(rng.below(4)), 0.5);
    for (int step = 0; step < 12; ++step) {
      const auto& nodes = s.current().forest.nodes();
      auto pick = nodes.begin();
      std::advance(pick, static_cast<long>(rng.below(nodes.size())));
      const NodeId id = pick->first;
      try {
        switch (rng.below(5)) {
          case 0: s.expand(id); break;
          case 1: s.collapse(id); break;
          case 2: s.simplify(); break;
          case 3: s.revert(rng.below(s.history().size())); break;
          default: s.restart(Hyperparams{1 + static_cast<int>(rng.below(4)), 0.5}); break;
        }
      } catch (const Error&) {
      }
    }
    check_coherent(s);
  }
}

TEST_CASE("expand picks the top children by brute-force score") {
  PlantedSpec spec;
  spec.n_items = 4;
  spec.m_rows = 200;
  spec.planted = {{Constraint({2, 4}), 1.0}, {Constraint({1, 2, 4}), 0.3}, {Constraint({3, 4}), -0.2}};
  spec.noise_sd = 0.05;
  spec.seed = 12;
  const Dataset ds = generate_planted(spec);
  Session s(ds, ds, ds, Hyperparams{1, 1.0});
  // a pair and its reverse tie on centered residuals; either may win
  const Constraint root = s.current().forest.at(1).constraint;
  REQUIRE((root == Constraint({2, 4}) || root == Constraint({4, 2})));

  // with the only root deactivated the model is mu alone
  std::vector<double> delta;
  for (const auto& r : ds.rows()) delta.push_back(r.target - s.mu());
  std::vector<std::pair<double, Constraint>> scored;
  for (const auto& c : generate_children(4, root)) {
    scored.emplace_back(std::abs(oracle::signed_sum(oracle::support(ds, c), delta)), c);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  s.restart(Hyperparams{2, 1.0});
  s.revert(0);
  const Iteration& it = s.expand(1);
  const auto& kids = it.forest.at(1).children;
  REQUIRE(kids.size() == 2);
  CHECK(it.forest.at(kids[0]).constraint == scored[0].second);
  CHECK(it.forest.at(kids[1]).constraint == scored[1].second);
}
