#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dimdecomp {

/// Subset of {0,...,N-1} stored as a 64-bit mask. Indices are zero-based in code;
/// text output uses the one-based convention {1,...,N}.
class IndexSubset {
 public:
  static constexpr std::size_t kMaxDimension = 64;

  constexpr IndexSubset() = default;
  constexpr explicit IndexSubset(std::uint64_t mask) : mask_(mask) {}

  static IndexSubset of(std::initializer_list<std::size_t> indices);
  static IndexSubset full(std::size_t n);
  static constexpr IndexSubset single(std::size_t i) { return IndexSubset(std::uint64_t{1} << i); }

  constexpr std::uint64_t mask() const { return mask_; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(mask_)); }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr bool contains(std::size_t i) const { return (mask_ >> i) & 1U; }
  constexpr bool is_subset_of(IndexSubset other) const { return (mask_ & ~other.mask_) == 0; }
  constexpr bool is_proper_subset_of(IndexSubset other) const {
    return is_subset_of(other) && mask_ != other.mask_;
  }

  /// Ascending member indices.
  std::vector<std::size_t> indices() const;
  /// Complement within {0,...,n-1}.
  IndexSubset complement(std::size_t n) const;
  IndexSubset with(std::size_t i) const { return IndexSubset(mask_ | (std::uint64_t{1} << i)); }
  IndexSubset without(std::size_t i) const { return IndexSubset(mask_ & ~(std::uint64_t{1} << i)); }

  /// One-based text form, e.g. "{1,3}"; the empty set prints as "{}".
  std::string to_string() const;

  friend constexpr bool operator==(IndexSubset a, IndexSubset b) = default;

 private:
  std::uint64_t mask_ = 0;
};

/// Canonical order: by cardinality, then lexicographic on ascending indices.
bool canonical_less(IndexSubset a, IndexSubset b);

/// All subsets of {0,...,n-1} with cardinality in [min_size, max_size], canonical order.
std::vector<IndexSubset> subsets_up_to(std::size_t n, std::size_t max_size, std::size_t min_size = 0);

/// All subsets of `u` (including the empty set and `u` itself), canonical order.
std::vector<IndexSubset> subsets_of(IndexSubset u);

struct IndexSubsetHash {
  std::size_t operator()(IndexSubset s) const noexcept { return std::hash<std::uint64_t>{}(s.mask()); }
};

}  // namespace dimdecomp
