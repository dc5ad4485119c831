#pragma once

// Progressive prune pipeline at desk scale.
//
// For every stage of the plan:
//   1. stream steps_per_stage synthetic feature batches through the
//      redundancy metric into each prunable layer's EMA edge graph,
//   2. run the greedy down to one survivor per layer (importance trace),
//   3. allocate per-layer keep counts against the stage's cumulative target,
//   4. drop pruned rows/columns from the edge graphs and carry them over.
//
// Streaming between stages stands in for fine-tuning; there are no weights
// to train. Layers are processed in parallel with results in fixed slots, so
// the report does not depend on the thread count.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sirfp/synthetic.hpp"
#include "sirfp/types.hpp"

namespace sirfp {

struct LayerStageReport {
  std::string layer_id;
  std::uint32_t keep_count = 0;
  double objective = 0.0;  // W(K) of the kept clique on the stage's graph

  friend bool operator==(const LayerStageReport&, const LayerStageReport&) = default;
};

struct StageReport {
  std::size_t stage = 0;
  double target = 0.0;
  double achieved_reduction = 0.0;
  double flops = 0.0;
  std::vector<LayerStageReport> layers;  // topology order
  double wall_clock_ms = 0.0;            // not serialized unless asked for

  friend bool operator==(const StageReport&, const StageReport&) = default;
};

/// Edge graph a layer's final decision was made on, with the original index of
/// each node.
struct DecisionGraph {
  std::vector<ChannelIndex> alive;
  EdgeWeightMatrix graph;
};

struct RunReport {
  std::uint64_t seed = 0;
  PruningPlan plan;
  LayerTopology topology;
  double base_flops = 0.0;
  std::vector<StageReport> stages;
  std::vector<PruneDecision> masks;  // topology order, every layer
  std::vector<DecisionGraph> final_graphs;  // prunable layers; not serialized
};

struct PipelineOptions {
  unsigned threads = 1;
  std::function<void(std::string_view)> log;  // progress lines, optional
};

/// Throws InvalidPlan/InvalidAlpha, InvalidArgument (spec), Infeasible.
RunReport run_pipeline(const SyntheticNetSpec& spec, const PruningPlan& plan,
                       const PipelineOptions& options = {});

/// One EMA step on an external feature dump: the metric is evaluated on
/// `fm` and folded into `graph`. Throws ShapeMismatch if channel counts or
/// layer ids differ.
EdgeWeightMatrix accumulate_features(const EdgeWeightMatrix& graph, const FeatureMapSet& fm,
                                     Metric metric, ResolutionScale scale);

/// Keep counts per layer recovered from a report's masks.
std::vector<std::uint32_t> keep_counts_from_masks(const RunReport& report);

/// Report document (JSON). Wall-clock times are only written when asked for,
/// so default output is byte-stable for a fixed seed.
std::string write_report(const RunReport& report, bool include_timings = false);
RunReport read_report(std::string_view text);

/// Human-readable summary table.
std::string format_report(const RunReport& report);

}  // namespace sirfp
