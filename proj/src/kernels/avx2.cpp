#include "permreg/kernels.hpp"

#include <immintrin.h>

#include <bit>

namespace permreg::kernels {
namespace {

// Expands the low four bits of `nibble` into an all-ones/all-zeros lane mask.
inline __m256d lane_mask(std::uint64_t nibble) noexcept {
  const __m256i select = _mm256_set_epi64x(8, 4, 2, 1);
  const __m256i spread = _mm256_set1_epi64x(static_cast<long long>(nibble));
  return _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(spread, select), select));
}

inline double reduce(__m256d acc) noexcept {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

inline bool bit_at(std::span<const std::uint64_t> bits, std::size_t i) noexcept {
  return (bits[i >> 6] >> (i & 63)) & 1U;
}

double masked_sum(std::span<const std::uint64_t> bits, std::span<const double> values) {
  const std::size_t m = values.size();
  const std::size_t body = m - m % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d mask = lane_mask(bits[i >> 6] >> (i & 63));
    acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_loadu_pd(values.data() + i), mask));
  }
  double sum = reduce(acc);
  for (std::size_t i = body; i < m; ++i) {
    if (bit_at(bits, i)) sum += values[i];
  }
  return sum;
}

PosNeg masked_pos_neg(std::span<const std::uint64_t> bits, std::span<const double> values) {
  const std::size_t m = values.size();
  const std::size_t body = m - m % 4;
  const __m256d zero = _mm256_setzero_pd();
  __m256d pos = zero;
  __m256d neg = zero;
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d mask = lane_mask(bits[i >> 6] >> (i & 63));
    const __m256d v = _mm256_and_pd(_mm256_loadu_pd(values.data() + i), mask);
    // max_pd returns its second operand on equal zeros, so -0.0 maps to +0.0
    pos = _mm256_add_pd(pos, _mm256_max_pd(v, zero));
    neg = _mm256_add_pd(neg, _mm256_max_pd(_mm256_sub_pd(zero, v), zero));
  }
  PosNeg out{reduce(pos), reduce(neg)};
  for (std::size_t i = body; i < m; ++i) {
    if (!bit_at(bits, i)) continue;
    if (values[i] > 0.0) out.positive += values[i];
    if (values[i] < 0.0) out.negative += 0.0 - values[i];
  }
  return out;
}

void masked_add(std::span<const std::uint64_t> bits, double delta, std::span<double> values) {
  const std::size_t m = values.size();
  const std::size_t body = m - m % 4;
  const __m256d step = _mm256_set1_pd(delta);
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d mask = lane_mask(bits[i >> 6] >> (i & 63));
    const __m256d v = _mm256_loadu_pd(values.data() + i);
    _mm256_storeu_pd(values.data() + i, _mm256_blendv_pd(v, _mm256_add_pd(v, step), mask));
  }
  for (std::size_t i = body; i < m; ++i) {
    if (bit_at(bits, i)) values[i] += delta;
  }
}

void precedes_mask(std::span<const std::int32_t> before, std::span<const std::int32_t> after,
                   std::span<std::uint64_t> out) {
  const std::size_t m = before.size();
  const std::size_t body = m - m % 8;
  for (auto& w : out) w = 0;
  for (std::size_t i = 0; i < body; i += 8) {
    const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(before.data() + i));
    const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(after.data() + i));
    const auto lanes =
        static_cast<std::uint64_t>(_mm256_movemask_ps(_mm256_castsi256_ps(_mm256_cmpgt_epi32(b, a))));
    out[i >> 6] |= lanes << (i & 63);
  }
  for (std::size_t i = body; i < m; ++i) {
    if (before[i] < after[i]) out[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
}

std::size_t and_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                      std::span<std::uint64_t> out) {
  const std::size_t n = out.size();
  const std::size_t body = n - n % 4;
  std::size_t count = 0;
  for (std::size_t w = 0; w < body; w += 4) {
    const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.data() + w));
    const __m256i y = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b.data() + w));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out.data() + w), _mm256_and_si256(x, y));
    count += static_cast<std::size_t>(_mm_popcnt_u64(out[w]) + _mm_popcnt_u64(out[w + 1]) +
                                      _mm_popcnt_u64(out[w + 2]) + _mm_popcnt_u64(out[w + 3]));
  }
  for (std::size_t w = body; w < n; ++w) {
    out[w] = a[w] & b[w];
    count += static_cast<std::size_t>(std::popcount(out[w]));
  }
  return count;
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static const KernelTable table{"avx2", masked_sum, masked_pos_neg, masked_add,
                                 precedes_mask, and_count};
  return table;
}

}  // namespace permreg::kernels
