#pragma once

// Outlier scores: how often each observation sat in the median block.

#include <cstddef>
#include <vector>

#include "mom/errors.hpp"
#include "mom/solver.hpp"

namespace mom {

struct OutlierScores {
  std::vector<std::size_t> counts;
  std::size_t iterations_counted = 0;
  std::size_t burn_in = 0;
};

// Counts median-block memberships over the updates after the first `burn_in`.
inline OutlierScores outlier_scores(const FitResult& result, std::size_t burn_in) {
  if (result.median_block_history.empty()) {
    throw ArgumentError("outlier_scores: fit was run without a recorded trace");
  }
  const std::size_t iters = result.median_block_history.size();
  if (burn_in >= iters) throw ArgumentError("outlier_scores: burn_in must be smaller than the number of iterations");
  const std::size_t n = result.n_observations;
  OutlierScores s;
  s.counts.assign(n, 0);
  s.burn_in = burn_in;
  for (std::size_t k = burn_in; k < iters; ++k) {
    for (auto i : result.median_block_history[k].members) {
      if (i >= n) throw ArgumentError("outlier_scores: trace index exceeds the dataset size");
      ++s.counts[i];
    }
    ++s.iterations_counted;
  }
  return s;
}

inline std::size_t default_burn_in(std::size_t iterations) { return iterations / 5; }

}  // namespace mom
