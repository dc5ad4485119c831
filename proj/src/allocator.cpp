#include "sirfp/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "sirfp/error.hpp"

namespace sirfp {
namespace {

constexpr double kReductionTolerance = 1e-12;

// One coupling group's view of the cut.
struct GroupCut {
  std::uint32_t alive = 0;
  std::vector<ChannelIndex> order;  // removal order over alive channels
  std::vector<double> keys;         // nondecreasing along order
  std::size_t limit = 0;            // how many of order may be cut
};

struct MergedEntry {
  double key;
  std::size_t group;
  std::size_t position;
};

void validate_trace(const ImportanceTrace& t, std::uint32_t width) {
  if (t.channels != width) {
    fail(Errc::InvalidArgument, "trace for '" + t.layer_id + "' covers " +
                                    std::to_string(t.channels) + " channels, layer has " +
                                    std::to_string(width));
  }
  std::vector<std::uint8_t> seen(width, 0);
  auto mark = [&](ChannelIndex c) {
    if (c >= width || seen[c]++) {
      fail(Errc::InvalidArgument, "trace for '" + t.layer_id + "' lists channel " +
                                      std::to_string(c) + " twice or out of range");
    }
  };
  for (const auto& e : t.order) mark(e.index);
  mark(t.survivor);
}

}  // namespace

FlopsModel::FlopsModel(const LayerTopology& topology) : topology_(topology) {
  for (const auto& l : topology_.layers()) {
    const double f = static_cast<double>(l.out_channels) * l.in_channels * l.kernel_h * l.kernel_w *
                     l.out_h * l.out_w;
    base_.push_back(f);
    total_base_ += f;
  }
}

double FlopsModel::total_flops_by_group(std::span<const std::uint32_t> group_counts) const {
  if (group_counts.size() != topology_.group_count()) {
    fail(Errc::CountOutOfRange, "expected one keep count per coupling group");
  }
  for (std::size_t g = 0; g < group_counts.size(); ++g) {
    if (group_counts[g] < 1 || group_counts[g] > topology_.group_channels(g)) {
      fail(Errc::CountOutOfRange, "keep count " + std::to_string(group_counts[g]) + " for '" +
                                      topology_.layers()[topology_.group(g).front()].id + "'");
    }
  }
  double total = 0.0;
  const auto& layers = topology_.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const double out = group_counts[topology_.group_of(l)];
    const auto in_group = topology_.input_group(l);
    const double in = in_group ? group_counts[*in_group] : layers[l].in_channels;
    total += base_[l] * (out * in) / (static_cast<double>(layers[l].out_channels) * layers[l].in_channels);
  }
  return total;
}

double FlopsModel::total_flops(std::span<const std::uint32_t> keep_counts) const {
  const auto& layers = topology_.layers();
  if (keep_counts.size() != layers.size()) {
    fail(Errc::CountOutOfRange, "expected one keep count per layer");
  }
  std::vector<std::uint32_t> groups(topology_.group_count(), 0);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (keep_counts[l] < 1 || keep_counts[l] > layers[l].out_channels) {
      fail(Errc::CountOutOfRange, "keep count " + std::to_string(keep_counts[l]) + " for '" +
                                      layers[l].id + "'");
    }
    auto& g = groups[topology_.group_of(l)];
    if (g != 0 && g != keep_counts[l]) {
      fail(Errc::CountOutOfRange, "coupled layer '" + layers[l].id + "' disagrees with its group");
    }
    g = keep_counts[l];
  }
  return total_flops_by_group(groups);
}

double FlopsModel::channel_share(std::size_t group) const {
  double share = 0.0;
  const auto& layers = topology_.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (topology_.group_of(l) == group) share += base_[l] / layers[l].out_channels;
    if (topology_.input_group(l) == group) share += base_[l] / layers[l].in_channels;
  }
  return share;
}

double total_flops(const LayerTopology& topology, std::span<const std::uint32_t> keep_counts) {
  return FlopsModel(topology).total_flops(keep_counts);
}

ImportanceTrace to_importance_trace(std::string layer_id, std::uint32_t channels,
                                    const CliqueSolution& full_trace,
                                    std::span<const ChannelIndex> alive) {
  if (full_trace.kept.size() != 1 || full_trace.removal_trace.size() + 1 != alive.size()) {
    fail(Errc::InvalidArgument, "expected a full removal trace over " + std::to_string(alive.size()) +
                                    " alive channels");
  }
  auto original = [&](ChannelIndex local) {
    if (local >= alive.size()) fail(Errc::IndexOutOfRange, "local channel " + std::to_string(local));
    return alive[local];
  };
  ImportanceTrace t;
  t.layer_id = std::move(layer_id);
  t.channels = channels;
  t.survivor = original(full_trace.kept.front());
  for (const auto& e : full_trace.removal_trace) t.order.push_back({original(e.index), e.score});
  return t;
}

std::uint32_t min_kept_channels(std::uint32_t channels, double max_sparsity) {
  const double floor_keep = std::ceil((1.0 - max_sparsity) * channels - 1e-9);
  return std::clamp<std::uint32_t>(static_cast<std::uint32_t>(std::max(0.0, floor_keep)), 1, channels);
}

Allocation threshold_allocate(const LayerTopology& topology, std::span<const ImportanceTrace> traces,
                              double target_reduction, double max_sparsity) {
  if (!(target_reduction >= 0.0 && target_reduction < 1.0)) {
    fail(Errc::InvalidArgument, "target reduction must lie in [0,1)");
  }
  if (!(max_sparsity > 0.0 && max_sparsity <= 1.0)) {
    fail(Errc::InvalidArgument, "max sparsity must lie in (0,1]");
  }
  const auto& layers = topology.layers();

  std::vector<const ImportanceTrace*> by_layer(layers.size(), nullptr);
  for (const auto& t : traces) {
    const auto l = topology.find(t.layer_id);
    if (!l) fail(Errc::InvalidArgument, "trace for unknown layer '" + t.layer_id + "'");
    if (!topology.group_prunable(topology.group_of(*l))) {
      fail(Errc::InvalidArgument, "trace given for non-prunable layer '" + t.layer_id + "'");
    }
    if (by_layer[*l]) fail(Errc::InvalidArgument, "duplicate trace for '" + t.layer_id + "'");
    validate_trace(t, layers[*l].out_channels);
    by_layer[*l] = &t;
  }

  // Raw member score of each channel, for reporting the mask trace.
  std::vector<std::vector<double>> raw_score(layers.size());
  std::vector<GroupCut> cuts(topology.group_count());
  std::vector<std::uint32_t> counts(topology.group_count());
  for (std::size_t g = 0; g < topology.group_count(); ++g) {
    const std::uint32_t width = topology.group_channels(g);
    counts[g] = width;
    if (!topology.group_prunable(g)) continue;

    const auto& members = topology.group(g);
    for (auto l : members) {
      if (!by_layer[l]) fail(Errc::InvalidArgument, "no trace for prunable layer '" + layers[l].id + "'");
    }
    const ImportanceTrace& lead = *by_layer[members.front()];
    std::vector<std::uint8_t> alive(width, 0);
    for (const auto& e : lead.order) alive[e.index] = 1;
    alive[lead.survivor] = 1;

    std::vector<double> key(width, 0.0);
    for (auto l : members) {
      const ImportanceTrace& t = *by_layer[l];
      std::vector<std::uint8_t> member_alive(width, 0);
      raw_score[l].assign(width, 0.0);
      double running = -std::numeric_limits<double>::infinity();
      for (const auto& e : t.order) {
        member_alive[e.index] = 1;
        running = std::max(running, e.score);
        key[e.index] += running;
        raw_score[l][e.index] = e.score;
      }
      member_alive[t.survivor] = 1;
      key[t.survivor] = std::numeric_limits<double>::infinity();
      if (member_alive != alive) {
        fail(Errc::InvalidArgument, "coupled layers '" + lead.layer_id + "' and '" + t.layer_id +
                                        "' disagree on which channels are alive");
      }
    }

    GroupCut& cut = cuts[g];
    cut.alive = static_cast<std::uint32_t>(lead.order.size() + 1);
    for (const auto& e : lead.order) cut.order.push_back(e.index);
    std::stable_sort(cut.order.begin(), cut.order.end(),
                     [&](ChannelIndex a, ChannelIndex b) { return key[a] < key[b]; });
    double running = -std::numeric_limits<double>::infinity();
    for (auto c : cut.order) {
      running = std::max(running, key[c]);
      cut.keys.push_back(running);
    }
    counts[g] = cut.alive;

    const std::uint32_t already_pruned = width - cut.alive;
    const std::uint32_t max_pruned = width - min_kept_channels(width, max_sparsity);
    cut.limit = max_pruned > already_pruned
                    ? std::min<std::size_t>(max_pruned - already_pruned, cut.order.size())
                    : 0;
  }

  std::vector<MergedEntry> merged;
  for (std::size_t g = 0; g < cuts.size(); ++g) {
    for (std::size_t p = 0; p < cuts[g].limit; ++p) merged.push_back({cuts[g].keys[p], g, p});
  }
  std::sort(merged.begin(), merged.end(), [](const MergedEntry& a, const MergedEntry& b) {
    return std::tie(a.key, a.group, a.position) < std::tie(b.key, b.group, b.position);
  });

  const FlopsModel model(topology);
  auto counts_at = [&](std::size_t cut) {
    auto c = counts;
    for (std::size_t k = 0; k < cut; ++k) --c[merged[k].group];
    return c;
  };
  auto reduction_at = [&](std::size_t cut) {
    return 1.0 - model.total_flops_by_group(counts_at(cut)) / model.total_base();
  };
  auto feasible = [&](std::size_t cut) {
    return reduction_at(cut) >= target_reduction - kReductionTolerance;
  };

  if (!feasible(merged.size())) {
    fail(Errc::Infeasible, "target reduction " + std::to_string(target_reduction) +
                               " unreachable; at most " + std::to_string(reduction_at(merged.size())) +
                               " with max sparsity " + std::to_string(max_sparsity));
  }
  // Smallest feasible cut; reduction is monotone in the cut position.
  std::size_t lo = 0;
  std::size_t hi = merged.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }

  Allocation out;
  out.cut = lo;
  out.base_flops = model.total_base();
  const auto final_counts = counts_at(lo);
  out.flops = model.total_flops_by_group(final_counts);
  out.achieved_reduction = 1.0 - out.flops / out.base_flops;

  std::vector<std::size_t> taken(cuts.size(), 0);
  for (std::size_t k = 0; k < lo; ++k) ++taken[merged[k].group];

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t g = topology.group_of(l);
    LayerAllocation a;
    a.layer_id = layers[l].id;
    a.channels = layers[l].out_channels;
    a.keep_count = final_counts[g];
    if (!topology.group_prunable(g)) {
      for (std::uint32_t c = 0; c < a.channels; ++c) a.kept.push_back(c);
    } else {
      std::vector<std::uint8_t> gone(a.channels, 0);
      for (std::size_t p = 0; p < taken[g]; ++p) {
        const ChannelIndex c = cuts[g].order[p];
        gone[c] = 1;
        a.newly_pruned.push_back({c, raw_score[l][c]});
      }
      // Members share one alive set, so read it from the group, not the member.
      for (auto c : cuts[g].order) {
        if (!gone[c]) a.kept.push_back(c);
      }
      a.kept.push_back(by_layer[topology.group(g).front()]->survivor);
      std::sort(a.kept.begin(), a.kept.end());
    }
    out.layers.push_back(std::move(a));
  }
  return out;
}

double plan_stage_target(const PruningPlan& plan, std::size_t stage) {
  if (stage >= plan.stage_targets.size()) {
    fail(Errc::StageOutOfRange, "stage " + std::to_string(stage) + " of " +
                                    std::to_string(plan.stage_targets.size()));
  }
  return plan.stage_targets[stage];
}

}  // namespace sirfp
