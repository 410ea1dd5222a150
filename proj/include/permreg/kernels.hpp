#pragma once

// Data-parallel inner loops of the engine.
//
// Every kernel exists as a scalar reference and, where the CPU supports it,
// an AVX2 variant. Both produce bit-identical results: the reductions in the
// scalar reference accumulate into four strided lanes and combine them as
// (l0 + l1) + (l2 + l3), followed by the sequential tail, which is exactly
// the order the vector code uses.
//
// Bit masks are packed little-endian into 64-bit words: row i lives in word
// i / 64, bit i % 64. Bits past the row count are always zero.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace permreg::kernels {

struct PosNeg {
  double positive = 0.0;  // sum of values > 0 over set bits
  double negative = 0.0;  // sum of -values over set bits with values < 0
};

struct KernelTable {
  std::string_view name;
  /// sum of values[i] over set bits i
  double (*masked_sum)(std::span<const std::uint64_t> bits, std::span<const double> values);
  PosNeg (*masked_pos_neg)(std::span<const std::uint64_t> bits, std::span<const double> values);
  /// values[i] += delta over set bits i
  void (*masked_add)(std::span<const std::uint64_t> bits, double delta, std::span<double> values);
  /// bit i = before[i] < after[i]
  void (*precedes_mask)(std::span<const std::int32_t> before, std::span<const std::int32_t> after,
                        std::span<std::uint64_t> out);
  /// out = a & b, returns popcount of out
  std::size_t (*and_count)(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                           std::span<std::uint64_t> out);
};

const KernelTable& scalar_kernels() noexcept;
/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels() noexcept;

/// The table used by the engine. Picks AVX2 when available unless the
/// environment variable PERMREG_KERNELS is set to "scalar".
const KernelTable& active() noexcept;

inline std::size_t words_for(std::size_t rows) noexcept { return (rows + 63) / 64; }

}  // namespace permreg::kernels
