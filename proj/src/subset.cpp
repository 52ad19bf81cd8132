#include "dimdecomp/subset.hpp"

#include <algorithm>

#include "dimdecomp/error.hpp"

namespace dimdecomp {

IndexSubset IndexSubset::of(std::initializer_list<std::size_t> indices) {
  std::uint64_t mask = 0;
  for (auto i : indices) {
    if (i >= kMaxDimension) throw InvalidArgument("subset index out of range: " + std::to_string(i));
    mask |= std::uint64_t{1} << i;
  }
  return IndexSubset(mask);
}

IndexSubset IndexSubset::full(std::size_t n) {
  if (n > kMaxDimension) throw InvalidArgument("dimension exceeds 64: " + std::to_string(n));
  return IndexSubset(n == kMaxDimension ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
}

std::vector<std::size_t> IndexSubset::indices() const {
  std::vector<std::size_t> out;
  out.reserve(size());
  for (std::uint64_t m = mask_; m != 0; m &= m - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
  return out;
}

IndexSubset IndexSubset::complement(std::size_t n) const { return IndexSubset(full(n).mask() & ~mask_); }

std::string IndexSubset::to_string() const {
  std::string s = "{";
  bool first = true;
  for (auto i : indices()) {
    if (!first) s += ",";
    s += std::to_string(i + 1);
    first = false;
  }
  return s + "}";
}

bool canonical_less(IndexSubset a, IndexSubset b) {
  if (a.size() != b.size()) return a.size() < b.size();
  // Same cardinality: compare ascending index lists lexicographically.
  std::uint64_t x = a.mask();
  std::uint64_t y = b.mask();
  while (x != 0 && y != 0) {
    const int i = std::countr_zero(x);
    const int j = std::countr_zero(y);
    if (i != j) return i < j;
    x &= x - 1;
    y &= y - 1;
  }
  return false;
}

namespace {

void combinations(std::size_t n, std::size_t k, std::size_t start, std::uint64_t acc,
                  std::vector<IndexSubset>& out) {
  if (k == 0) {
    out.emplace_back(acc);
    return;
  }
  for (std::size_t i = start; i + k <= n; ++i) combinations(n, k - 1, i + 1, acc | (std::uint64_t{1} << i), out);
}

}  // namespace

std::vector<IndexSubset> subsets_up_to(std::size_t n, std::size_t max_size, std::size_t min_size) {
  if (n > IndexSubset::kMaxDimension) throw InvalidArgument("dimension exceeds 64");
  std::vector<IndexSubset> out;
  for (std::size_t k = min_size; k <= std::min(max_size, n); ++k) combinations(n, k, 0, 0, out);
  return out;
}

std::vector<IndexSubset> subsets_of(IndexSubset u) {
  std::vector<IndexSubset> out;
  // Enumerate submasks, then sort canonically.
  const std::uint64_t m = u.mask();
  for (std::uint64_t s = m;; s = (s - 1) & m) {
    out.emplace_back(s);
    if (s == 0) break;
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

}  // namespace dimdecomp
