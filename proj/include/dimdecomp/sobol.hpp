#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dimdecomp {

/// Sobol' low-discrepancy sequence in up to 64 dimensions (32-bit resolution),
/// enumerated in Gray-code order. With scrambling, each (seed, dimension) pair
/// gets an independent nested uniform (Owen) scramble.
class SobolSequence {
 public:
  static constexpr std::size_t kMaxDimension = 64;
  static constexpr int kBits = 32;

  explicit SobolSequence(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }

  /// Unscrambled integer coordinates of point `index`.
  void integer_point(std::uint64_t index, std::span<std::uint32_t> out) const;
  /// Unscrambled point in [0,1).
  void point(std::uint64_t index, std::span<double> out) const;
  /// Owen-scrambled point in (0,1).
  void scrambled_point(std::uint64_t index, std::uint64_t seed, std::span<double> out) const;

 private:
  std::size_t dimension_;
  std::vector<std::array<std::uint32_t, kBits>> directions_;
};

/// Hash-based nested uniform scramble of a 32-bit fixed-point coordinate.
std::uint32_t owen_scramble(std::uint32_t x, std::uint32_t seed);

}  // namespace dimdecomp
