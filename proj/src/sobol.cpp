#include "dimdecomp/sobol.hpp"

#include <bit>

#include "dimdecomp/error.hpp"
#include "dimdecomp/rng.hpp"
#include "sobol_table.hpp"

namespace dimdecomp {

namespace {

std::uint32_t reverse_bits(std::uint32_t x) {
  x = ((x >> 1) & 0x55555555U) | ((x & 0x55555555U) << 1);
  x = ((x >> 2) & 0x33333333U) | ((x & 0x33333333U) << 2);
  x = ((x >> 4) & 0x0F0F0F0FU) | ((x & 0x0F0F0F0FU) << 4);
  x = ((x >> 8) & 0x00FF00FFU) | ((x & 0x00FF00FFU) << 8);
  return (x >> 16) | (x << 16);
}

// Laine-Karras style permutation: each output bit depends only on the input
// bits below it, so on bit-reversed input it acts as a nested scramble.
std::uint32_t lk_permute(std::uint32_t x, std::uint32_t seed) {
  x += seed;
  x ^= x * 0x6c50b47cU;
  x ^= x * 0xb82f1e52U;
  x ^= x * 0xc7afe638U;
  x ^= x * 0x8d22f6e6U;
  return x;
}

}  // namespace

std::uint32_t owen_scramble(std::uint32_t x, std::uint32_t seed) {
  return reverse_bits(lk_permute(reverse_bits(x), seed));
}

SobolSequence::SobolSequence(std::size_t dimension) : dimension_(dimension) {
  if (dimension < 1 || dimension > kMaxDimension)
    throw InvalidArgument("Sobol sequence supports 1 to 64 dimensions");
  directions_.resize(dimension);
  for (std::size_t d = 0; d < dimension; ++d) {
    auto& v = directions_[d];
    const auto& entry = detail::kSobolTable[d];
    const int degree = std::bit_width(entry.poly) - 1;
    std::array<std::uint32_t, kBits> m{};
    if (degree == 0) {
      m.fill(1);
    } else {
      for (int j = 0; j < degree; ++j) m[j] = entry.m[j];
      for (int j = degree; j < kBits; ++j) {
        std::uint32_t next = m[j - degree];
        std::uint32_t pow2 = 1;
        for (int k = 0; k < degree; ++k) {
          pow2 <<= 1;
          if ((entry.poly >> (degree - 1 - k)) & 1U) next ^= pow2 * m[j - k - 1];
        }
        m[j] = next;
      }
    }
    for (int j = 0; j < kBits; ++j) v[j] = m[j] << (kBits - 1 - j);
  }
}

void SobolSequence::integer_point(std::uint64_t index, std::span<std::uint32_t> out) const {
  if (out.size() != dimension_) throw InvalidArgument("Sobol point: output size mismatch");
  if (index >> kBits) throw InvalidArgument("Sobol index exceeds 2^32");
  const std::uint64_t gray = index ^ (index >> 1);
  for (std::size_t d = 0; d < dimension_; ++d) {
    std::uint32_t x = 0;
    std::uint64_t g = gray;
    for (int j = 0; g != 0; ++j, g >>= 1)
      if (g & 1U) x ^= directions_[d][j];
    out[d] = x;
  }
}

void SobolSequence::point(std::uint64_t index, std::span<double> out) const {
  std::array<std::uint32_t, kMaxDimension> buf{};
  integer_point(index, std::span(buf.data(), dimension_));
  for (std::size_t d = 0; d < dimension_; ++d) out[d] = static_cast<double>(buf[d]) * 0x1.0p-32;
}

void SobolSequence::scrambled_point(std::uint64_t index, std::uint64_t seed, std::span<double> out) const {
  std::array<std::uint32_t, kMaxDimension> buf{};
  integer_point(index, std::span(buf.data(), dimension_));
  for (std::size_t d = 0; d < dimension_; ++d) {
    const auto dim_seed = static_cast<std::uint32_t>(rng::bits(seed, 0x5EED0000ULL + d, 0));
    out[d] = (static_cast<double>(owen_scramble(buf[d], dim_seed)) + 0.5) * 0x1.0p-32;
  }
}

}  // namespace dimdecomp
