#ifndef MINVINE_RANKS_HPP
#define MINVINE_RANKS_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace minvine {

/// rank / (N + 1) with average ranks for ties; values strictly inside (0,1).
inline std::vector<double> uniform_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> out(n);
  const double denom = static_cast<double>(n) + 1.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    // 1-based ranks i+1..j+1 share their mean
    const double r = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t m = i; m <= j; ++m) out[idx[m]] = r / denom;
    i = j + 1;
  }
  return out;
}

}  // namespace minvine

#endif  // MINVINE_RANKS_HPP
