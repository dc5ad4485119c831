#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sirfp {

using ChannelIndex = std::uint32_t;

/// One layer's per-channel spatial activations for a single (batch-averaged)
/// step. Layout is channel-major, then row-major within a channel.
class FeatureMapSet {
 public:
  /// Throws LengthMismatch when data.size() != C*H*W or any dimension is 0,
  /// NonFiniteValue on NaN/Inf.
  FeatureMapSet(std::string layer_id, std::uint32_t channels, std::uint32_t height,
                std::uint32_t width, std::vector<double> data);

  const std::string& layer_id() const noexcept { return layer_id_; }
  std::uint32_t channels() const noexcept { return channels_; }
  std::uint32_t height() const noexcept { return height_; }
  std::uint32_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return std::size_t{height_} * width_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> channel(std::uint32_t c) const;

  friend bool operator==(const FeatureMapSet&, const FeatureMapSet&) = default;

 private:
  std::string layer_id_;
  std::uint32_t channels_;
  std::uint32_t height_;
  std::uint32_t width_;
  std::vector<double> data_;
};

/// Symmetric, zero-diagonal edge-weight graph over the channels of one layer,
/// accumulated by exponential moving average. Entry (i, j) is the weight a_ij
/// of the edge between channels i and j.
class EdgeWeightMatrix {
 public:
  /// Validates symmetry (exact), zero diagonal, finiteness and alpha in (0,1).
  EdgeWeightMatrix(std::string layer_id, std::uint32_t n, std::vector<double> weights,
                   std::uint64_t update_count, double alpha);

  const std::string& layer_id() const noexcept { return layer_id_; }
  std::uint32_t size() const noexcept { return n_; }
  std::uint64_t update_count() const noexcept { return update_count_; }
  double alpha() const noexcept { return alpha_; }

  double operator()(std::uint32_t i, std::uint32_t j) const noexcept {
    return weights_[std::size_t{i} * n_ + j];
  }
  std::span<const double> row(std::uint32_t i) const noexcept {
    return std::span<const double>(weights_).subspan(std::size_t{i} * n_, n_);
  }
  std::span<const double> weights() const noexcept { return weights_; }

  friend bool operator==(const EdgeWeightMatrix&, const EdgeWeightMatrix&) = default;

 private:
  std::string layer_id_;
  std::uint32_t n_;
  std::vector<double> weights_;
  std::uint64_t update_count_;
  double alpha_;
};

/// One greedy removal: the channel and its active edge sum s_k when removed.
struct TraceEntry {
  ChannelIndex index = 0;
  double score = 0.0;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

using RemovalTrace = std::vector<TraceEntry>;

/// Per-layer keep/prune mask. `kept` is the retained clique; `removal_trace`
/// lists every pruned channel in the order it was removed.
class PruneDecision {
 public:
  /// kept/pruned are sorted on construction. Throws IndexOutOfRange,
  /// OverlapDetected, IncompleteCover or TraceMismatch.
  PruneDecision(std::string layer_id, std::uint32_t channels, std::vector<ChannelIndex> kept,
                std::vector<ChannelIndex> pruned, RemovalTrace removal_trace);

  const std::string& layer_id() const noexcept { return layer_id_; }
  std::uint32_t channels() const noexcept { return channels_; }
  const std::vector<ChannelIndex>& kept() const noexcept { return kept_; }
  const std::vector<ChannelIndex>& pruned() const noexcept { return pruned_; }
  const RemovalTrace& removal_trace() const noexcept { return trace_; }

  friend bool operator==(const PruneDecision&, const PruneDecision&) = default;

 private:
  std::string layer_id_;
  std::uint32_t channels_;
  std::vector<ChannelIndex> kept_;
  std::vector<ChannelIndex> pruned_;
  RemovalTrace trace_;
};

enum class Metric { Js, Kl, Dice, Dot };

std::string_view to_string(Metric m) noexcept;
Metric parse_metric(std::string_view text);

/// Spatial resolution the redundancy metric sees, relative to the layer output.
enum class ResolutionScale { Full, Half, Quarter, Pooled, Double };

std::string_view to_string(ResolutionScale s) noexcept;
/// Accepts canonical names (full, half, quarter, pooled, double) and the
/// numeric spellings 1, 1/2, 1/4, 2.
ResolutionScale parse_resolution(std::string_view text);

inline constexpr double kDefaultAlpha = 0.99;
inline constexpr double kDefaultMaxChannelSparsity = 0.9;

/// Progressive pruning schedule. stage_targets are cumulative FLOPs-reduction
/// fractions measured against the original network.
struct PruningPlan {
  std::vector<double> stage_targets;
  double alpha = kDefaultAlpha;
  double max_channel_sparsity = kDefaultMaxChannelSparsity;
  Metric metric = Metric::Js;
  ResolutionScale resolution_scale = ResolutionScale::Full;

  std::size_t t_step() const noexcept { return stage_targets.size(); }

  /// Throws InvalidPlan: at least one stage, targets in [0,1) strictly
  /// increasing, max sparsity in (0,1]; InvalidAlpha for alpha outside (0,1).
  void validate() const;

  friend bool operator==(const PruningPlan&, const PruningPlan&) = default;
};

}  // namespace sirfp
