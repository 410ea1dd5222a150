#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "permreg/core.hpp"

namespace permreg {

/// Indicator of the dataset rows fulfilling a constraint, packed 64 rows per
/// word. `count` is the number of set bits.
struct SupportVector {
  std::size_t rows = 0;
  std::vector<std::uint64_t> bits;
  std::size_t count = 0;

  static SupportVector empty(std::size_t rows);
  static SupportVector full(std::size_t rows);

  bool test(std::size_t row) const noexcept { return (bits[row >> 6] >> (row & 63)) & 1U; }
  void set(std::size_t row) noexcept;
  /// Every set bit of *this is also set in `other`.
  bool subset_of(const SupportVector& other) const noexcept;

  bool operator==(const SupportVector&) const = default;
};

/// True iff the items of `c` occur in `perm` in the same relative order.
/// Throws ItemOutOfRange when `c` names an item outside perm's range.
bool fulfills(const Permutation& perm, const Constraint& c);

/// Row-by-row evaluation through `fulfills`.
SupportVector support_vector(const Dataset& dataset, const Constraint& c);

/// Column-major view of a dataset for batch feature evaluation.
///
/// Holds, for every item, the position it takes in each row, and the
/// precedence mask of every ordered item pair (a, b): bit i set iff a comes
/// before b in row i. A constraint (c1, ..., ck) is fulfilled exactly when
/// each consecutive pair is in order, so its support is the AND of k-1 pair
/// masks, and inserting an item into a parent costs two ANDs.
class FeatureIndex {
 public:
  explicit FeatureIndex(const Dataset& dataset);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t n_items() const noexcept { return n_; }

  std::span<const std::uint64_t> pair_mask(Item before, Item after) const noexcept;

  /// Throws ItemOutOfRange.
  SupportVector support(const Constraint& c) const;

  /// Support of `parent` with `item` inserted at index `at` (0..parent.size()),
  /// given the parent's support.
  SupportVector child_support(const SupportVector& parent_support, const Constraint& parent,
                              Item item, std::size_t at) const;

 private:
  void check_items(const Constraint& c) const;

  std::size_t rows_;
  std::size_t n_;
  std::size_t words_;
  std::vector<std::uint64_t> pair_masks_;  // (a-1)*n + (b-1) blocks of words_
};

/// Column j equals support_vector(dataset, cs[j]).
std::vector<SupportVector> feature_matrix(const Dataset& dataset, std::span<const Constraint> cs);

}  // namespace permreg
