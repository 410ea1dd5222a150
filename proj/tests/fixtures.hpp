#pragma once

#include <vector>

#include "doctest.h"

#include "permreg/core.hpp"
#include "permreg/data.hpp"

namespace fixtures {

using namespace permreg;

inline Dataset make_dataset(std::size_t n, const std::vector<std::vector<Item>>& perms,
                            const std::vector<double>& targets) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < perms.size(); ++i) rows.push_back({Permutation(perms[i], n), targets[i]});
  return Dataset(n, std::move(rows));
}

/// The four-row, three-item dataset used throughout the examples:
/// rows [1,2,3], [3,2,1], [2,1,3], [1,3,2] with targets 1.0, 0.0, 0.9, 0.5.
inline Dataset four_rows() {
  return make_dataset(3, {{1, 2, 3}, {3, 2, 1}, {2, 1, 3}, {1, 3, 2}}, {1.0, 0.0, 0.9, 0.5});
}

inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t m) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < m; ++i) {
    rows.push_back({Permutation(random_permutation(n, rng), n), 2.0 * rng.uniform() - 1.0});
  }
  return Dataset(n, std::move(rows));
}

inline std::vector<double> random_residuals(Rng& rng, std::size_t m) {
  std::vector<double> d(m);
  for (auto& v : d) v = 2.0 * rng.uniform() - 1.0;
  return d;
}

/// Runs `fn`, which must throw permreg::Error, and returns its code.
template <class F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a permreg::Error");
  return ErrorCode::Malformed;
}

}  // namespace fixtures
