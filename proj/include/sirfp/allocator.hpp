#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sirfp/mewcp.hpp"
#include "sirfp/topology.hpp"
#include "sirfp/types.hpp"

namespace sirfp {

/// Multiply-accumulate cost of a topology.
///
/// A layer costs out_c * in_c * k_h * k_w * out_h * out_w at full width.
/// Pruning scales that by (kept_out / out_c) * (kept_in / in_c), where kept_in
/// is the keep count of the coupling group feeding the layer (full width for
/// network inputs).
class FlopsModel {
 public:
  explicit FlopsModel(const LayerTopology& topology);

  const LayerTopology& topology() const noexcept { return topology_; }
  double base_flops(std::size_t layer) const { return base_.at(layer); }
  double total_base() const noexcept { return total_base_; }

  /// keep_counts is aligned with topology().layers(). Throws CountOutOfRange
  /// for counts outside [1, out_channels] or coupled layers that disagree.
  double total_flops(std::span<const std::uint32_t> keep_counts) const;

  /// Same, with one keep count per coupling group.
  double total_flops_by_group(std::span<const std::uint32_t> group_counts) const;

  /// FLOPs removed by dropping a single output channel of group g while every
  /// layer is at full width. Upper bound on any later single-channel step.
  double channel_share(std::size_t group) const;

 private:
  LayerTopology topology_;
  std::vector<double> base_;
  double total_base_ = 0.0;
};

double total_flops(const LayerTopology& topology, std::span<const std::uint32_t> keep_counts);

/// Greedy removal order over the channels of one layer that are still alive.
/// Channels of the layer that appear neither in `order` nor as `survivor`
/// were pruned earlier and stay pruned.
struct ImportanceTrace {
  std::string layer_id;
  std::uint32_t channels = 0;  // original width
  RemovalTrace order;          // original channel indices, removal order
  ChannelIndex survivor = 0;
};

/// Builds a trace from importance_trace() output on a (possibly shrunk) graph
/// whose node i is original channel alive[i].
ImportanceTrace to_importance_trace(std::string layer_id, std::uint32_t channels,
                                    const CliqueSolution& full_trace,
                                    std::span<const ChannelIndex> alive);

struct LayerAllocation {
  std::string layer_id;
  std::uint32_t channels = 0;
  std::uint32_t keep_count = 0;
  std::vector<ChannelIndex> kept;  // ascending
  RemovalTrace newly_pruned;       // this call's removals, in cut order
};

struct Allocation {
  std::vector<LayerAllocation> layers;  // aligned with the topology
  double base_flops = 0.0;
  double flops = 0.0;
  double achieved_reduction = 0.0;
  std::size_t cut = 0;  // number of channels pruned by this call
};

/// Global threshold allocation.
///
/// Each layer's trace is read in removal order with key = running maximum of
/// s_k, so a layer always prunes a prefix of its trace. Coupled layers sum
/// their member keys per channel. All prunable channels are merged in key
/// order (ties: layer group, then trace position) and the cut position is the
/// smallest one whose network FLOPs reduction, relative to the full topology,
/// reaches `target_reduction` (tolerance 1e-12). Layers stop contributing
/// channels once they hit ceil((1 - max_sparsity) * C) kept (at least 1); the
/// sweep then continues over the others.
///
/// Throws InvalidArgument (missing/unknown/duplicate traces, inconsistent
/// alive sets), CountOutOfRange, Infeasible.
Allocation threshold_allocate(const LayerTopology& topology, std::span<const ImportanceTrace> traces,
                              double target_reduction, double max_sparsity);

/// Minimum channels a layer of width `channels` keeps under `max_sparsity`.
std::uint32_t min_kept_channels(std::uint32_t channels, double max_sparsity);

/// Cumulative reduction target of a stage. Throws StageOutOfRange.
double plan_stage_target(const PruningPlan& plan, std::size_t stage);

}  // namespace sirfp
