#pragma once

// Cardinality-bounded maximum edge weight clique on a layer's edge graph.
//
// Keeping a set K of channels scores W(K) = sum_{i in K} sum_{j in K, j != i} a_ij,
// i.e. every edge is counted twice; the single-count edge sum is W(K) / 2.
//
// Three solvers:
//   exact_mewcp               exhaustive enumeration, a test oracle (n <= 24)
//   single_prune_closed_form  optimal removal of one node: the argmin edge sum
//   ehgp                      greedy: repeatedly drop the node with the least
//                             active edge sum, O(n^2) overall

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sirfp/types.hpp"

namespace sirfp {

inline constexpr std::uint32_t kExactSolverMaxNodes = 24;

struct CliqueSolution {
  std::vector<ChannelIndex> kept;  // ascending
  double objective = 0.0;          // double-sum W(K)
  RemovalTrace removal_trace;      // greedy only; empty for exact
};

/// sum_{j in active, j != i} a_ij. Throws IndexOutOfRange if i or an active
/// index is outside the graph or i is not active.
double edge_sum(const EdgeWeightMatrix& m, std::span<const ChannelIndex> active, ChannelIndex i);

/// Double-sum objective W(K) recomputed from scratch in index order.
double clique_objective(const EdgeWeightMatrix& m, std::span<const ChannelIndex> kept);

/// Enumerates every subset of size `keep`; ties go to the lexicographically
/// smallest kept set. Throws TooLarge (n > 24), BadCardinality.
CliqueSolution exact_mewcp(const EdgeWeightMatrix& m, std::uint32_t keep);

/// argmin_k of the full edge sum, lowest index on ties. Throws TooSmall (n < 2).
ChannelIndex single_prune_closed_form(const EdgeWeightMatrix& m);

/// Snapshot handed to a greedy observer after every removal.
struct GreedyStep {
  std::uint32_t iteration = 0;        // 0-based removal number
  ChannelIndex removed = 0;
  double removed_score = 0.0;
  std::span<const double> sums;       // maintained sums, indexed by node
  std::span<const std::uint8_t> active;  // 1 for surviving nodes
};

using GreedyObserver = std::function<void(const GreedyStep&)>;

/// Removes `num_to_prune` nodes greedily. After each removal the surviving
/// sums are updated by s_i -= a_ik. Ties (within a relative 1e-12) go to the
/// lowest index. Throws BadCardinality unless num_to_prune <= n - 1.
CliqueSolution ehgp(const EdgeWeightMatrix& m, std::uint32_t num_to_prune,
                    const GreedyObserver& observer = {});

/// ehgp down to a single survivor: the full removal order with the score of
/// each channel at removal. The survivor is kept[0]. Throws TooSmall (n < 2).
CliqueSolution importance_trace(const EdgeWeightMatrix& m, const GreedyObserver& observer = {});

/// True when a and b differ by no more than 1e-12 relative to max(1, |a|, |b|).
bool scores_tie(double a, double b) noexcept;

}  // namespace sirfp
