#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "permreg/core.hpp"

namespace permreg {

/// Portable seeded stream. Uses the standard-specified mt19937_64 engine but
/// none of the implementation-defined <random> distributions, so the same
/// seed yields the same data on every platform. See docs/FORMATS.md.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, bound), rejection sampled. bound > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; the spare value is cached.
  double normal();

  /// Independent sub-seed keyed by (seed, stream) through splitmix64.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Uniformly random permutation of 1..n by Fisher-Yates.
std::vector<Item> random_permutation(std::size_t n, Rng& rng);

// CSV: header `pos_1,...,pos_n,target`, then one row per permutation with n
// 1-based item ids and the target. LF line endings, no quoting.

/// Throws Malformed (with line number), DuplicateItem, WrongLength,
/// OutOfRangeItem, NonFiniteTarget, EmptyDataset or IoError.
Dataset parse_csv(std::istream& in);
Dataset parse_csv_string(const std::string& text);
Dataset load_csv(const std::filesystem::path& path);

void write_csv(const Dataset& dataset, std::ostream& out);
std::string to_csv_string(const Dataset& dataset);
/// Throws IoError.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Shortest decimal that reads back to the same double.
std::string format_double(double value);

struct SplitSpec {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  std::uint64_t seed = 0;
};

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Seeded shuffle, then contiguous train/validation/test blocks; leftover
/// rows are dropped. Throws InvalidSpec or InsufficientRows.
Splits split(const Dataset& dataset, const SplitSpec& spec);

struct PlantedTerm {
  Constraint constraint;
  double coefficient;
};

struct PlantedSpec {
  std::size_t n_items = 0;
  std::size_t m_rows = 0;
  double mu0 = 0.0;
  std::vector<PlantedTerm> planted;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  /// Throws InvalidSpec.
  void validate() const;
};

/// m_rows uniform permutations; target = mu0 + planted effects + N(0, noise_sd).
Dataset generate_planted(const PlantedSpec& spec);

}  // namespace permreg
