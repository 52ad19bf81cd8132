#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dimdecomp::detail {

struct SobolDimension {
  std::uint32_t poly;
  std::vector<std::uint32_t> m;
};

inline constexpr std::size_t kSobolTableDimensions = 64;
extern const std::array<SobolDimension, kSobolTableDimensions> kSobolTable;

}  // namespace dimdecomp::detail
