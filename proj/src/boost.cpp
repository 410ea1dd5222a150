#include "permreg/boost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "permreg/kernels.hpp"

namespace permreg {
namespace {

void check_length(const SupportVector& z, std::span<const double> delta) {
  if (z.rows != delta.size()) {
    throw Error(ErrorCode::LengthMismatch, "support covers " + std::to_string(z.rows) +
                                               " rows, residuals " + std::to_string(delta.size()));
  }
}

// Rounding slack for the prune test. The bound and a descendant's tau are
// summed over nested supports in different orders, so the computed values can
// disagree by a few ulps of the residual mass.
double prune_slack(const kernels::PosNeg& mass, std::size_t rows) {
  return 8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(rows + 4) *
         (mass.positive + mass.negative);
}

struct Candidate {
  Constraint constraint;
  SupportVector support;
};

}  // namespace

double predict(const Model& model, const Permutation& perm) {
  double y = model.mu;
  for (const auto& term : model.terms) {
    if (fulfills(perm, term.constraint)) y += term.beta;
  }
  return y;
}

std::vector<double> predict_all(const Model& model, const Dataset& dataset,
                                const FeatureIndex& index) {
  std::vector<double> pred(dataset.size(), model.mu);
  const auto& k = kernels::active();
  for (const auto& term : model.terms) {
    k.masked_add(index.support(term.constraint).bits, term.beta, pred);
  }
  return pred;
}

std::vector<double> predict_all(const Model& model, const Dataset& dataset) {
  return predict_all(model, dataset, FeatureIndex(dataset));
}

Residuals residuals(const Model& model, const Dataset& dataset, const FeatureIndex& index) {
  Residuals delta = predict_all(model, dataset, index);
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = dataset[i].target - delta[i];
  return delta;
}

Residuals residuals(const Model& model, const Dataset& dataset) {
  return residuals(model, dataset, FeatureIndex(dataset));
}

GradientScore gradient_score(const SupportVector& z, std::span<const double> delta) {
  check_length(z, delta);
  const double s = kernels::active().masked_sum(z.bits, delta);
  return {s, std::abs(s)};
}

std::vector<ScoredConstraint> select_top_l(std::span<const Constraint> candidates,
                                           const FeatureIndex& index,
                                           std::span<const double> delta, std::size_t l) {
  if (l == 0) throw Error(ErrorCode::InvalidHyperparams, "l must be at least 1");
  std::vector<ScoredConstraint> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) {
    const SupportVector z = index.support(c);
    if (z.count == 0) continue;
    const GradientScore g = gradient_score(z, delta);
    scored.push_back({c, g.signed_sum, g.tau});
  }
  if (scored.empty()) {
    throw Error(ErrorCode::NoViableCandidate, "every candidate has empty support");
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredConstraint& a, const ScoredConstraint& b) { return a.tau > b.tau; });
  if (scored.size() > l) scored.erase(scored.begin() + static_cast<std::ptrdiff_t>(l), scored.end());
  return scored;
}

std::vector<ScoredConstraint> select_top_l(std::span<const Constraint> candidates,
                                           const Dataset& dataset, std::span<const double> delta,
                                           std::size_t l) {
  return select_top_l(candidates, FeatureIndex(dataset), delta, l);
}

std::vector<Constraint> generate_children(std::size_t n, const Constraint& parent) {
  if (parent.size() >= n) {
    throw Error(ErrorCode::SaturatedConstraint, parent.to_string() + " already holds every item");
  }
  std::vector<Constraint> children;
  children.reserve((n - parent.size()) * (parent.size() + 1));
  const auto items = parent.items();
  for (Item c = 1; c <= static_cast<Item>(n); ++c) {
    if (parent.contains(c)) continue;
    for (std::size_t at = 0; at <= items.size(); ++at) {
      std::vector<Item> child;
      child.reserve(items.size() + 1);
      child.insert(child.end(), items.begin(), items.begin() + static_cast<std::ptrdiff_t>(at));
      child.push_back(c);
      child.insert(child.end(), items.begin() + static_cast<std::ptrdiff_t>(at), items.end());
      children.emplace_back(std::move(child));
    }
  }
  return children;
}

double fit_coefficient(const SupportVector& z, std::span<const double> delta, double learning_rate) {
  check_length(z, delta);
  if (z.count == 0) return 0.0;
  const double s = kernels::active().masked_sum(z.bits, delta);
  return learning_rate * (s / static_cast<double>(z.count));
}

Model fit_sequential(Model model, std::span<const Constraint> new_constraints,
                     const Dataset& dataset, const FeatureIndex& index, double learning_rate) {
  if (new_constraints.empty()) return model;
  const auto& k = kernels::active();
  std::vector<double> pred = predict_all(model, dataset, index);
  Residuals delta(pred.size());
  for (const auto& c : new_constraints) {
    if (model.contains(c)) {
      throw Error(ErrorCode::DuplicateConstraint, "model already holds " + c.to_string());
    }
    for (std::size_t i = 0; i < pred.size(); ++i) delta[i] = dataset[i].target - pred[i];
    const SupportVector z = index.support(c);
    const double beta = fit_coefficient(z, delta, learning_rate);
    model.add_term(c, beta);
    k.masked_add(z.bits, beta, pred);
  }
  return model;
}

Model fit_sequential(Model model, std::span<const Constraint> new_constraints,
                     const Dataset& dataset, double learning_rate) {
  return fit_sequential(std::move(model), new_constraints, dataset, FeatureIndex(dataset),
                        learning_rate);
}

double upper_bound(const SupportVector& z, std::span<const double> delta) {
  check_length(z, delta);
  const kernels::PosNeg mass = kernels::active().masked_pos_neg(z.bits, delta);
  return std::max(mass.positive, mass.negative);
}

ScoredConstraint search_best_constraint(const FeatureIndex& index, std::span<const double> delta,
                                        std::size_t max_len, const ConstraintSet& exclude,
                                        SearchStats* stats) {
  if (max_len < 2) throw Error(ErrorCode::InvalidHyperparams, "max_len must be at least 2");
  if (index.rows() != delta.size()) {
    throw Error(ErrorCode::LengthMismatch, "residuals do not match dataset size");
  }
  const std::size_t n = index.n_items();
  max_len = std::min(max_len, n);
  const auto& k = kernels::active();

  std::optional<ScoredConstraint> best;
  SearchStats local;

  auto consider = [&](const Candidate& cand) {
    ++local.visited;
    if (cand.support.count == 0 || exclude.contains(cand.constraint)) return;
    const double s = k.masked_sum(cand.support.bits, delta);
    const double tau = std::abs(s);
    if (tau <= 0.0) return;
    if (!best || tau > best->tau ||
        (tau == best->tau && canonical_less(cand.constraint, best->constraint))) {
      best = ScoredConstraint{cand.constraint, s, tau};
    }
  };

  std::vector<Candidate> level;
  for (auto& c : all_pairs(n)) {
    SupportVector z = index.support(c);
    level.push_back({std::move(c), std::move(z)});
  }
  for (const auto& cand : level) consider(cand);

  for (std::size_t len = 2; len < max_len && !level.empty(); ++len) {
    const double incumbent = best ? best->tau : 0.0;
    std::vector<Candidate> next;
    ConstraintSet seen;
    for (const auto& parent : level) {
      if (parent.support.count == 0) {
        ++local.pruned;
        continue;
      }
      const kernels::PosNeg mass = k.masked_pos_neg(parent.support.bits, delta);
      const double bound = std::max(mass.positive, mass.negative);
      if (bound + prune_slack(mass, index.rows()) <= incumbent) {
        ++local.pruned;
        continue;
      }
      const auto items = parent.constraint.items();
      for (Item c = 1; c <= static_cast<Item>(n); ++c) {
        if (parent.constraint.contains(c)) continue;
        for (std::size_t at = 0; at <= items.size(); ++at) {
          std::vector<Item> child_items(items.begin(), items.end());
          child_items.insert(child_items.begin() + static_cast<std::ptrdiff_t>(at), c);
          Constraint child(std::move(child_items));
          if (!seen.insert(child).second) continue;
          SupportVector z = index.child_support(parent.support, parent.constraint, c, at);
          next.push_back({std::move(child), std::move(z)});
        }
      }
    }
    for (const auto& cand : next) consider(cand);
    level = std::move(next);
  }

  if (stats) *stats = local;
  if (!best) throw Error(ErrorCode::NoViableCandidate, "no constraint has a nonzero gradient");
  return *best;
}

ScoredConstraint search_best_constraint(const Dataset& dataset, std::span<const double> delta,
                                        std::size_t max_len) {
  return search_best_constraint(FeatureIndex(dataset), delta, max_len);
}

Model fit_auto(const Dataset& dataset, const AutoFitOptions& options) {
  if (options.l < 1) throw Error(ErrorCode::InvalidHyperparams, "l must be at least 1");
  if (!(options.learning_rate >= Hyperparams::kMinLearningRate &&
        options.learning_rate <= Hyperparams::kMaxLearningRate)) {
    throw Error(ErrorCode::InvalidHyperparams, "learning_rate must lie in [1e-6, 1]");
  }
  const std::size_t max_len = options.max_len == 0 ? dataset.n_items() : options.max_len;
  if (max_len < 2) throw Error(ErrorCode::InvalidHyperparams, "max_len must be at least 2");

  const FeatureIndex index(dataset);
  const auto& k = kernels::active();
  Model model{dataset.n_items(), dataset.mean_target(), {}};
  std::vector<double> pred(dataset.size(), model.mu);
  Residuals delta(dataset.size());
  ConstraintSet used;

  for (std::size_t step = 0; step < options.l; ++step) {
    for (std::size_t i = 0; i < pred.size(); ++i) delta[i] = dataset[i].target - pred[i];
    std::optional<ScoredConstraint> found;
    try {
      found = search_best_constraint(index, delta, max_len, used);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoViableCandidate) break;
      throw;
    }
    const SupportVector z = index.support(found->constraint);
    const double beta = fit_coefficient(z, delta, options.learning_rate);
    used.insert(found->constraint);
    model.add_term(found->constraint, beta);
    k.masked_add(z.bits, beta, pred);
  }
  return model;
}

}  // namespace permreg
