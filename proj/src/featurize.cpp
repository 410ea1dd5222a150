#include "permreg/featurize.hpp"

#include <bit>

#include "permreg/kernels.hpp"

namespace permreg {

SupportVector SupportVector::empty(std::size_t rows) {
  return SupportVector{rows, std::vector<std::uint64_t>(kernels::words_for(rows), 0), 0};
}

SupportVector SupportVector::full(std::size_t rows) {
  SupportVector sv{rows, std::vector<std::uint64_t>(kernels::words_for(rows), ~std::uint64_t{0}),
                   rows};
  if (rows % 64 != 0) sv.bits.back() = (std::uint64_t{1} << (rows % 64)) - 1;
  return sv;
}

void SupportVector::set(std::size_t row) noexcept {
  const std::uint64_t bit = std::uint64_t{1} << (row & 63);
  if (!(bits[row >> 6] & bit)) {
    bits[row >> 6] |= bit;
    ++count;
  }
}

bool SupportVector::subset_of(const SupportVector& other) const noexcept {
  for (std::size_t w = 0; w < bits.size(); ++w) {
    if (bits[w] & ~other.bits[w]) return false;
  }
  return true;
}

bool fulfills(const Permutation& perm, const Constraint& c) {
  const auto n = static_cast<Item>(perm.size());
  std::int32_t last = -1;
  bool ordered = true;
  for (Item item : c.items()) {
    if (item < 1 || item > n) {
      throw Error(ErrorCode::ItemOutOfRange,
                  "constraint item " + std::to_string(item) + " outside 1.." + std::to_string(n));
    }
    const std::int32_t pos = perm.position(item);
    if (pos <= last) ordered = false;
    last = pos;
  }
  return ordered;
}

SupportVector support_vector(const Dataset& dataset, const Constraint& c) {
  SupportVector sv = SupportVector::empty(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (fulfills(dataset[i].perm, c)) sv.set(i);
  }
  return sv;
}

FeatureIndex::FeatureIndex(const Dataset& dataset)
    : rows_(dataset.size()), n_(dataset.n_items()), words_(kernels::words_for(rows_)) {
  std::vector<std::vector<std::int32_t>> columns(n_, std::vector<std::int32_t>(rows_));
  for (std::size_t i = 0; i < rows_; ++i) {
    const Permutation& perm = dataset[i].perm;
    for (std::size_t item = 1; item <= n_; ++item) {
      columns[item - 1][i] = perm.position(static_cast<Item>(item));
    }
  }
  const auto& k = kernels::active();
  pair_masks_.assign(n_ * n_ * words_, 0);
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t b = 0; b < n_; ++b) {
      if (a == b) continue;
      k.precedes_mask(columns[a], columns[b],
                      std::span<std::uint64_t>(pair_masks_.data() + (a * n_ + b) * words_, words_));
    }
  }
}

std::span<const std::uint64_t> FeatureIndex::pair_mask(Item before, Item after) const noexcept {
  const std::size_t block = static_cast<std::size_t>(before - 1) * n_ + static_cast<std::size_t>(after - 1);
  return {pair_masks_.data() + block * words_, words_};
}

void FeatureIndex::check_items(const Constraint& c) const {
  for (Item item : c.items()) {
    if (item < 1 || static_cast<std::size_t>(item) > n_) {
      throw Error(ErrorCode::ItemOutOfRange,
                  "constraint item " + std::to_string(item) + " outside 1.." + std::to_string(n_));
    }
  }
}

SupportVector FeatureIndex::support(const Constraint& c) const {
  check_items(c);
  const auto& k = kernels::active();
  SupportVector sv{rows_, std::vector<std::uint64_t>(words_), 0};
  auto first = pair_mask(c[0], c[1]);
  std::copy(first.begin(), first.end(), sv.bits.begin());
  sv.count = 0;
  for (auto w : sv.bits) sv.count += static_cast<std::size_t>(std::popcount(w));
  for (std::size_t j = 2; j < c.size(); ++j) {
    sv.count = k.and_count(sv.bits, pair_mask(c[j - 1], c[j]), sv.bits);
  }
  return sv;
}

SupportVector FeatureIndex::child_support(const SupportVector& parent_support,
                                          const Constraint& parent, Item item,
                                          std::size_t at) const {
  const auto& k = kernels::active();
  SupportVector sv{rows_, parent_support.bits, parent_support.count};
  if (at > 0) sv.count = k.and_count(sv.bits, pair_mask(parent[at - 1], item), sv.bits);
  if (at < parent.size()) sv.count = k.and_count(sv.bits, pair_mask(item, parent[at]), sv.bits);
  return sv;
}

std::vector<SupportVector> feature_matrix(const Dataset& dataset, std::span<const Constraint> cs) {
  std::vector<SupportVector> out;
  if (cs.empty()) return out;
  const FeatureIndex index(dataset);
  out.reserve(cs.size());
  for (const auto& c : cs) out.push_back(index.support(c));
  return out;
}

}  // namespace permreg
