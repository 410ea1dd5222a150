#include "permreg/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace permreg {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::WrongLength: return "WrongLength";
    case ErrorCode::DuplicateItem: return "DuplicateItem";
    case ErrorCode::OutOfRangeItem: return "OutOfRangeItem";
    case ErrorCode::ItemOutOfRange: return "ItemOutOfRange";
    case ErrorCode::InvalidConstraint: return "InvalidConstraint";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IncompatibleDatasets: return "IncompatibleDatasets";
    case ErrorCode::InvalidHyperparams: return "InvalidHyperparams";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::NoViableCandidate: return "NoViableCandidate";
    case ErrorCode::SaturatedConstraint: return "SaturatedConstraint";
    case ErrorCode::DuplicateConstraint: return "DuplicateConstraint";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::NodeInactive: return "NodeInactive";
    case ErrorCode::NodeActive: return "NodeActive";
    case ErrorCode::EmptyModel: return "EmptyModel";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::AlreadyFinalized: return "AlreadyFinalized";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::NonFiniteTarget: return "NonFiniteTarget";
    case ErrorCode::InsufficientRows: return "InsufficientRows";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::TooManySessions: return "TooManySessions";
    case ErrorCode::TooManyRows: return "TooManyRows";
  }
  return "Unknown";
}

Permutation::Permutation(std::vector<Item> items, std::size_t n)
    : items_(std::move(items)), positions_(n, -1) {
  if (items_.size() != n) {
    throw Error(ErrorCode::WrongLength, "permutation has " + std::to_string(items_.size()) +
                                            " items, expected " + std::to_string(n));
  }
  for (std::size_t k = 0; k < items_.size(); ++k) {
    const Item item = items_[k];
    if (item < 1 || static_cast<std::size_t>(item) > n) {
      throw Error(ErrorCode::OutOfRangeItem,
                  "item " + std::to_string(item) + " outside 1.." + std::to_string(n));
    }
    if (positions_[item - 1] != -1) {
      throw Error(ErrorCode::DuplicateItem, "item " + std::to_string(item) + " repeated");
    }
    positions_[item - 1] = static_cast<std::int32_t>(k);
  }
}

Permutation validate_permutation(std::vector<Item> items, std::size_t n) {
  return Permutation(std::move(items), n);
}

Constraint::Constraint(std::vector<Item> items) : items_(std::move(items)) {
  if (items_.size() < 2) {
    throw Error(ErrorCode::InvalidConstraint, "constraint needs at least two items");
  }
  std::vector<Item> sorted = items_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::InvalidConstraint, "constraint " + to_string() + " repeats an item");
  }
}

Constraint Constraint::checked(std::vector<Item> items, std::size_t n) {
  Constraint c(std::move(items));
  if (c.size() > n) {
    throw Error(ErrorCode::InvalidConstraint, "constraint longer than item set");
  }
  for (Item item : c.items_) {
    if (item < 1 || static_cast<std::size_t>(item) > n) {
      throw Error(ErrorCode::ItemOutOfRange,
                  "constraint item " + std::to_string(item) + " outside 1.." + std::to_string(n));
    }
  }
  return c;
}

bool Constraint::contains(Item item) const noexcept {
  return std::find(items_.begin(), items_.end(), item) != items_.end();
}

std::string Constraint::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(items_[i]);
  }
  return out + ")";
}

bool canonical_less(const Constraint& a, const Constraint& b) noexcept {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.items().begin(), a.items().end(), b.items().begin(),
                                      b.items().end());
}

std::size_t ConstraintHash::operator()(const Constraint& c) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (Item item : c.items()) {
    h ^= static_cast<std::size_t>(item);
    h *= 0x100000001b3ULL;
  }
  return h;
}

Dataset::Dataset(std::size_t n_items, std::vector<Row> rows)
    : n_items_(n_items), rows_(std::move(rows)) {
  if (rows_.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].perm.size() != n_items_) {
      throw Error(ErrorCode::WrongLength, "row " + std::to_string(i) + " has wrong item count");
    }
    if (!std::isfinite(rows_[i].target)) {
      throw Error(ErrorCode::NonFiniteTarget, "row " + std::to_string(i) + " target not finite");
    }
  }
}

std::vector<double> Dataset::targets() const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(row.target);
  return out;
}

double Dataset::mean_target() const {
  double sum = 0.0;
  for (const auto& row : rows_) sum += row.target;
  return sum / static_cast<double>(rows_.size());
}

bool Model::contains(const Constraint& c) const {
  return std::any_of(terms.begin(), terms.end(),
                     [&](const Term& t) { return t.constraint == c; });
}

void Model::add_term(Constraint c, double beta) {
  if (contains(c)) {
    throw Error(ErrorCode::DuplicateConstraint, "model already holds " + c.to_string());
  }
  terms.push_back({std::move(c), beta});
}

void Hyperparams::validate() const {
  if (l < kMinL || l > kMaxL) {
    throw Error(ErrorCode::InvalidHyperparams,
                "l must be an integer in [1, 20], got " + std::to_string(l));
  }
  if (!(learning_rate >= kMinLearningRate && learning_rate <= kMaxLearningRate)) {
    throw Error(ErrorCode::InvalidHyperparams, "learning_rate must lie in [1e-6, 1]");
  }
}

std::vector<Constraint> all_pairs(std::size_t n) {
  std::vector<Constraint> out;
  out.reserve(n * (n > 0 ? n - 1 : 0));
  for (Item a = 1; a <= static_cast<Item>(n); ++a) {
    for (Item b = 1; b <= static_cast<Item>(n); ++b) {
      if (a != b) out.emplace_back(std::vector<Item>{a, b});
    }
  }
  return out;
}

}  // namespace permreg
