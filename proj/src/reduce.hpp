#pragma once

#include <cstddef>
#include <span>

namespace cdl::detail {

// Pairwise (tree) summation with a fixed split rule: the result depends
// only on the input order, never on scheduling.
inline double tree_sum(std::span<const double> v) {
  constexpr std::size_t kLeaf = 128;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return tree_sum(v.first(half)) + tree_sum(v.subspan(half));
}

}  // namespace cdl::detail
