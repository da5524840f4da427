#pragma once

// Median-of-means over a partition of {0, ..., N-1} into K equal blocks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mom/dataset.hpp"
#include "mom/errors.hpp"
#include "mom/losses.hpp"
#include "mom/rng.hpp"

namespace mom {

enum class PartitionStrategy { Contiguous, Shuffled };

// K disjoint blocks of floor(N/K) indices each; the N mod K leftover indices
// belong to no block. Indices inside a block are kept in ascending order so
// that block sums do not depend on how the block was drawn.
struct BlockPartition {
  std::vector<IndexList> blocks;
  std::size_t n = 0;
  std::size_t k = 0;

  std::size_t block_size() const noexcept { return k == 0 ? 0 : n / k; }
};

inline BlockPartition partition(std::size_t n, std::size_t k, std::uint64_t seed,
                                PartitionStrategy strategy = PartitionStrategy::Shuffled) {
  if (k == 0) throw ArgumentError("partition: block count must be at least 1");
  if (k > n) throw ArgumentError("partition: block count exceeds the number of observations");
  BlockPartition p{{}, n, k};
  const std::size_t size = n / k;
  p.blocks.resize(k);
  for (auto& b : p.blocks) b.reserve(size);
  if (strategy == PartitionStrategy::Contiguous || k == 1) {
    for (std::size_t b = 0; b < k; ++b) {
      for (std::size_t i = b * size; i < (b + 1) * size; ++i) p.blocks[b].push_back(i);
    }
    return p;
  }
  IndexList order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  // Position j of the permutation goes to block j / size; scanning indices in
  // increasing order then fills every block already sorted.
  constexpr std::size_t kDropped = static_cast<std::size_t>(-1);
  IndexList owner(n, kDropped);
  for (std::size_t j = 0; j < k * size; ++j) owner[order[j]] = j / size;
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] != kDropped) p.blocks[owner[i]].push_back(i);
  }
  return p;
}

struct MomValue {
  double value = 0.0;
  std::size_t median_block = 0;
};

// Which order statistic of the K block means is reported. Lower is rank
// ceil(K/2), Upper is rank floor(K/2) + 1; they coincide for odd K.
enum class MedianRank { Lower, Upper };

inline double block_mean(std::span<const double> values, const IndexList& block) {
  double s = 0.0;
  for (auto i : block) s += values[i];
  return s / static_cast<double>(block.size());
}

inline std::vector<double> block_means(std::span<const double> values, const BlockPartition& p) {
  std::vector<double> means(p.k);
  for (std::size_t b = 0; b < p.k; ++b) means[b] = block_mean(values, p.blocks[b]);
  return means;
}

// Median of precomputed block means, lowest block index among ties.
inline MomValue median_of_block_means(const std::vector<double>& means, MedianRank rank = MedianRank::Lower) {
  const std::size_t k = means.size();
  if (k == 0) throw ArgumentError("mom: no blocks");
  if (k == 1) return {means[0], 0};
  std::vector<double> sorted(means);
  const std::size_t pos = rank == MedianRank::Lower ? (k + 1) / 2 - 1 : k / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(pos), sorted.end());
  const double med = sorted[pos];
  for (std::size_t b = 0; b < k; ++b) {
    if (means[b] == med) return {med, b};
  }
  return {med, 0};  // unreachable: med is one of the means
}

inline MomValue mom(std::span<const double> values, const BlockPartition& p, MedianRank rank = MedianRank::Lower) {
  if (values.size() != p.n) throw ArgumentError("mom: value count does not match the partition");
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("mom: non-finite value");
  }
  return median_of_block_means(block_means(values, p), rank);
}

inline MomValue mom(const Vector& values, const BlockPartition& p, MedianRank rank = MedianRank::Lower) {
  return mom(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), p, rank);
}

// Per-observation loss differences l(<X_i,t>, Y_i) - l(<X_i,t2>, Y_i).
inline Vector loss_increments(const Dataset& data, const Vector& t, const Vector& t2, const LossSpec& loss) {
  if (static_cast<std::size_t>(t.size()) != data.d() || static_cast<std::size_t>(t2.size()) != data.d()) {
    throw ArgumentError("mom_increment: parameter dimension does not match the design");
  }
  const Vector u = data.x * t;
  const Vector u2 = data.x * t2;
  Vector inc(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    inc[i] = loss.value(u[i], data.y[i]) - loss.value(u2[i], data.y[i]);
  }
  return inc;
}

inline MomValue mom_increment(const Dataset& data, const Vector& t, const Vector& t2, const LossSpec& loss,
                              const BlockPartition& p, MedianRank rank = MedianRank::Lower) {
  if (p.n != data.n()) throw ArgumentError("mom_increment: partition does not match the dataset size");
  return mom(loss_increments(data, t, t2, loss), p, rank);
}

}  // namespace mom
