#pragma once

#include <cstddef>
#include <optional>
#include <unordered_set>
#include <vector>

#include "permreg/core.hpp"
#include "permreg/featurize.hpp"

namespace permreg {

/// delta_i = y_i - prediction_i, one entry per dataset row.
using Residuals = std::vector<double>;

using ConstraintSet = std::unordered_set<Constraint, ConstraintHash>;

struct GradientScore {
  double signed_sum = 0.0;
  double tau = 0.0;  // |signed_sum|
};

struct ScoredConstraint {
  Constraint constraint;
  double signed_sum;
  double tau;
};

/// Throws ItemOutOfRange.
double predict(const Model& model, const Permutation& perm);

/// Predictions for every row, accumulated in term order as `predict` does.
std::vector<double> predict_all(const Model& model, const Dataset& dataset, const FeatureIndex& index);
std::vector<double> predict_all(const Model& model, const Dataset& dataset);

Residuals residuals(const Model& model, const Dataset& dataset, const FeatureIndex& index);
Residuals residuals(const Model& model, const Dataset& dataset);

/// Throws LengthMismatch.
GradientScore gradient_score(const SupportVector& z, std::span<const double> delta);

/// Scores every candidate and returns up to `l` of them by descending tau,
/// ties to the lower candidate index. Candidates with empty support are
/// dropped. Throws NoViableCandidate when nothing remains.
std::vector<ScoredConstraint> select_top_l(std::span<const Constraint> candidates,
                                           const FeatureIndex& index,
                                           std::span<const double> delta, std::size_t l);
std::vector<ScoredConstraint> select_top_l(std::span<const Constraint> candidates,
                                           const Dataset& dataset, std::span<const double> delta,
                                           std::size_t l);

/// Every insertion of one item missing from `parent`, outer loop over items
/// ascending, inner loop over insertion slots left to right.
/// Throws SaturatedConstraint when parent already holds all n items.
std::vector<Constraint> generate_children(std::size_t n, const Constraint& parent);

/// learning_rate times the mean residual over the support; 0 for an empty
/// support. For learning_rate 1 this is the squared-error line search step.
double fit_coefficient(const SupportVector& z, std::span<const double> delta, double learning_rate);

/// Appends the constraints one after another, each fitted on the residuals
/// of the model built so far. Throws DuplicateConstraint.
Model fit_sequential(Model model, std::span<const Constraint> new_constraints,
                     const Dataset& dataset, const FeatureIndex& index, double learning_rate);
Model fit_sequential(Model model, std::span<const Constraint> new_constraints,
                     const Dataset& dataset, double learning_rate);

/// max(positive residual mass, negative residual mass) over the support.
/// Any constraint whose support is a subset scores tau at most this.
double upper_bound(const SupportVector& z, std::span<const double> delta);

struct SearchStats {
  std::size_t visited = 0;
  std::size_t pruned = 0;
};

/// Best-first-by-level search over constraints of length 2..max_len for the
/// largest tau. Children of a node are only generated while its upper bound
/// can still beat the incumbent. Ties go to the canonically smaller
/// constraint (shorter, then lexicographic). Constraints in `exclude` are
/// traversed but never returned. Throws NoViableCandidate when no constraint
/// has tau > 0.
ScoredConstraint search_best_constraint(const FeatureIndex& index, std::span<const double> delta,
                                        std::size_t max_len, const ConstraintSet& exclude = {},
                                        SearchStats* stats = nullptr);
ScoredConstraint search_best_constraint(const Dataset& dataset, std::span<const double> delta,
                                        std::size_t max_len);

struct AutoFitOptions {
  std::size_t l = 10;
  double learning_rate = 1.0;
  std::size_t max_len = 0;  // 0 means n_items
};

/// mu = training mean, then up to l boosting steps. Stops early when no
/// constraint has a nonzero gradient. Throws InvalidHyperparams.
Model fit_auto(const Dataset& dataset, const AutoFitOptions& options);

}  // namespace permreg
