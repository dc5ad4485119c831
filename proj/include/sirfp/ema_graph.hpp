#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "sirfp/redundancy.hpp"
#include "sirfp/types.hpp"

namespace sirfp {

/// All-zero n x n graph with update_count 0. Throws InvalidAlpha unless
/// 0 < alpha < 1, TooSmall for n == 0.
EdgeWeightMatrix ema_init(std::uint32_t n, double alpha = kDefaultAlpha, std::string layer_id = {});

/// One EMA step with edge target 1 - r_ij:
///   first update   a_ij = 1 - r_ij
///   afterwards     a_ij = alpha * a_ij + (1 - alpha) * (1 - r_ij)
/// Only the upper triangle is computed and mirrored, so symmetry is exact.
/// Throws ShapeMismatch when sizes differ.
EdgeWeightMatrix ema_update(const EdgeWeightMatrix& m, const RedundancyMatrix& r);

/// Sub-graph on `keep` (ascending, distinct local indices); history and
/// update count carry over.
EdgeWeightMatrix ema_shrink(const EdgeWeightMatrix& m, std::span<const std::uint32_t> keep);

}  // namespace sirfp
