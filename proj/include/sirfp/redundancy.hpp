#pragma once

// Pairwise spatial redundancy between the channels of one layer.
//
// Each channel map is turned into a probability score map and compared with
// every other channel. The default metric is
//
//     r_ij = ln 2 - JS(F_i, F_j)
//          = ln 2 - 1/2 KL(F_i || M) - 1/2 KL(F_j || M),   M = (F_i + F_j) / 2
//
// so r lies in [0, ln 2]: ln 2 for identical maps, 0 for disjoint support.
// All divergences are in nats.

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "sirfp/types.hpp"

namespace sirfp {

inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kDefaultEpsilon = 1e-8;

class ProbabilityMap {
 public:
  /// Throws ShapeMismatch if values.size() != height*width, NonFiniteInput if
  /// any value is negative/non-finite or the sum is not 1 within 1e-9.
  ProbabilityMap(std::uint32_t height, std::uint32_t width, std::vector<double> values);

  std::uint32_t height() const noexcept { return height_; }
  std::uint32_t width() const noexcept { return width_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::uint32_t height_;
  std::uint32_t width_;
  std::vector<double> values_;
};

/// A resampled single-channel map.
struct SpatialMap {
  std::uint32_t height = 1;
  std::uint32_t width = 1;
  std::vector<double> values;
};

/// out[p] = (max(in[p], 0) + eps) / sum_q (max(in[q], 0) + eps).
/// An all-zero (or all-negative) map becomes uniform.
ProbabilityMap normalize_to_distribution(std::span<const double> channel_map,
                                         std::uint32_t height, std::uint32_t width,
                                         double epsilon = kDefaultEpsilon);

/// sum over p > 0 of p ln(p / q). Throws ShapeMismatch, UnsupportedSupport.
double kl_divergence(const ProbabilityMap& p, const ProbabilityMap& q);

/// ln 2 minus the Jensen-Shannon divergence. Bitwise symmetric in its
/// arguments and clamped into [0, ln 2].
double js_redundancy(const ProbabilityMap& fi, const ProbabilityMap& fj);

/// Alternative metrics on probability maps, mapped into [0, ln 2]:
///   kl   ln 2 * exp(-1/2 (KL(fi || fj') + KL(fj || fi')))  with eps-smoothed fj', fi'
///   dice ln 2 * sum_p min(fi, fj)
/// Metric::Js forwards to js_redundancy. Metric::Dot is rejected here because
/// it works on raw maps; use dot_redundancy.
double variant_redundancy(const ProbabilityMap& fi, const ProbabilityMap& fj, Metric metric);

/// Inner product of raw flattened maps. Unbounded, either sign.
double dot_redundancy(std::span<const double> raw_i, std::span<const double> raw_j);

/// Average pooling for Half/Quarter (adaptive windows, at least 1x1),
/// nearest-neighbour for Double, global mean for Pooled.
SpatialMap resample(std::span<const double> channel_map, std::uint32_t height,
                    std::uint32_t width, ResolutionScale scale);

struct RedundancyMatrix {
  std::uint32_t n = 0;
  Metric metric = Metric::Js;
  std::vector<double> values;  // n*n, row-major, symmetric

  double operator()(std::uint32_t i, std::uint32_t j) const noexcept {
    return values[std::size_t{i} * n + j];
  }
};

/// Redundancy over every unordered channel pair of `fm`; the diagonal holds
/// the metric's self value (ln 2 for js/kl/dice, |f|^2 for dot).
RedundancyMatrix pairwise_redundancy(const FeatureMapSet& fm, Metric metric = Metric::Js,
                                     ResolutionScale scale = ResolutionScale::Full,
                                     double epsilon = kDefaultEpsilon);

}  // namespace sirfp
