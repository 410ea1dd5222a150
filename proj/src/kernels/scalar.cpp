#include "permreg/kernels.hpp"

#include <bit>

namespace permreg::kernels {
namespace {

inline bool bit_at(std::span<const std::uint64_t> bits, std::size_t i) noexcept {
  return (bits[i >> 6] >> (i & 63)) & 1U;
}

double masked_sum(std::span<const std::uint64_t> bits, std::span<const double> values) {
  const std::size_t m = values.size();
  const std::size_t body = m - m % 4;
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < body; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      lane[j] += bit_at(bits, i + j) ? values[i + j] : 0.0;
    }
  }
  double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = body; i < m; ++i) {
    if (bit_at(bits, i)) sum += values[i];
  }
  return sum;
}

PosNeg masked_pos_neg(std::span<const std::uint64_t> bits, std::span<const double> values) {
  const std::size_t m = values.size();
  const std::size_t body = m - m % 4;
  double pos[4] = {0.0, 0.0, 0.0, 0.0};
  double neg[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < body; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double v = bit_at(bits, i + j) ? values[i + j] : 0.0;
      pos[j] += v > 0.0 ? v : 0.0;
      neg[j] += v < 0.0 ? 0.0 - v : 0.0;
    }
  }
  PosNeg out{(pos[0] + pos[1]) + (pos[2] + pos[3]), (neg[0] + neg[1]) + (neg[2] + neg[3])};
  for (std::size_t i = body; i < m; ++i) {
    if (!bit_at(bits, i)) continue;
    if (values[i] > 0.0) out.positive += values[i];
    if (values[i] < 0.0) out.negative += 0.0 - values[i];
  }
  return out;
}

void masked_add(std::span<const std::uint64_t> bits, double delta, std::span<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (bit_at(bits, i)) values[i] += delta;
  }
}

void precedes_mask(std::span<const std::int32_t> before, std::span<const std::int32_t> after,
                   std::span<std::uint64_t> out) {
  for (auto& w : out) w = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i] < after[i]) out[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
}

std::size_t and_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                      std::span<std::uint64_t> out) {
  std::size_t count = 0;
  for (std::size_t w = 0; w < out.size(); ++w) {
    out[w] = a[w] & b[w];
    count += static_cast<std::size_t>(std::popcount(out[w]));
  }
  return count;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{"scalar", masked_sum, masked_pos_neg, masked_add,
                                 precedes_mask, and_count};
  return table;
}

}  // namespace permreg::kernels
