#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace permreg {

/// Machine-readable failure kinds. The server maps these onto HTTP status
/// codes and echoes the name in error bodies.
enum class ErrorCode {
  WrongLength,
  DuplicateItem,
  OutOfRangeItem,
  ItemOutOfRange,
  InvalidConstraint,
  EmptyDataset,
  IncompatibleDatasets,
  InvalidHyperparams,
  LengthMismatch,
  Empty,
  NoViableCandidate,
  SaturatedConstraint,
  DuplicateConstraint,
  UnknownNode,
  NodeInactive,
  NodeActive,
  EmptyModel,
  IndexOutOfRange,
  AlreadyFinalized,
  Malformed,
  NonFiniteTarget,
  InsufficientRows,
  InvalidSpec,
  IoError,
  UnknownSession,
  UnknownDataset,
  TooManySessions,
  TooManyRows,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using Item = std::int32_t;

/// A total order of the items 1..n. `items()[k]` is the item placed at
/// position k (0-based position, 1-based item id). The inverse map is kept
/// alongside so fulfillment tests are O(|constraint|).
class Permutation {
 public:
  /// Throws WrongLength, DuplicateItem or OutOfRangeItem.
  Permutation(std::vector<Item> items, std::size_t n);

  std::size_t size() const noexcept { return items_.size(); }
  std::span<const Item> items() const noexcept { return items_; }

  /// Position of `item` (1-based id); caller guarantees 1 <= item <= n.
  std::int32_t position(Item item) const noexcept { return positions_[item - 1]; }

  bool operator==(const Permutation& other) const { return items_ == other.items_; }

 private:
  std::vector<Item> items_;
  std::vector<std::int32_t> positions_;
};

Permutation validate_permutation(std::vector<Item> items, std::size_t n);

/// An ordered subset of distinct items, length >= 2. Equality is
/// order-sensitive.
class Constraint {
 public:
  /// Throws InvalidConstraint on repeats or length < 2.
  explicit Constraint(std::vector<Item> items);

  /// Also checks every item is in 1..n (ItemOutOfRange) and length <= n.
  static Constraint checked(std::vector<Item> items, std::size_t n);

  std::size_t size() const noexcept { return items_.size(); }
  std::span<const Item> items() const noexcept { return items_; }
  Item operator[](std::size_t i) const noexcept { return items_[i]; }
  bool contains(Item item) const noexcept;

  bool operator==(const Constraint& other) const = default;

  std::string to_string() const;

 private:
  std::vector<Item> items_;
};

/// Canonical enumeration order: shorter first, then lexicographic by items.
/// All tie-breaking between equally scored constraints uses this order.
bool canonical_less(const Constraint& a, const Constraint& b) noexcept;

struct ConstraintHash {
  std::size_t operator()(const Constraint& c) const noexcept;
};

struct Row {
  Permutation perm;
  double target;
};

class Dataset {
 public:
  /// Throws EmptyDataset, WrongLength or NonFiniteTarget.
  Dataset(std::size_t n_items, std::vector<Row> rows);

  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t size() const noexcept { return rows_.size(); }
  std::span<const Row> rows() const noexcept { return rows_; }
  const Row& operator[](std::size_t i) const noexcept { return rows_[i]; }

  std::vector<double> targets() const;
  double mean_target() const;

 private:
  std::size_t n_items_;
  std::vector<Row> rows_;
};

struct Term {
  Constraint constraint;
  double beta;

  bool operator==(const Term&) const = default;
};

/// mu + sum of beta over fulfilled constraints.
struct Model {
  std::size_t n_items = 0;
  double mu = 0.0;
  std::vector<Term> terms;

  bool contains(const Constraint& c) const;
  /// Throws DuplicateConstraint.
  void add_term(Constraint c, double beta);

  bool operator==(const Model&) const = default;
};

struct Hyperparams {
  int l = 5;
  double learning_rate = 1.0;

  static constexpr int kMinL = 1;
  static constexpr int kMaxL = 20;
  static constexpr double kMinLearningRate = 1e-6;
  static constexpr double kMaxLearningRate = 1.0;

  /// Throws InvalidHyperparams.
  void validate() const;

  bool operator==(const Hyperparams&) const = default;
};

/// All n(n-1) ordered pairs, lexicographic.
std::vector<Constraint> all_pairs(std::size_t n);

}  // namespace permreg
