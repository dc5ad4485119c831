#include "sirfp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <optional>
#include <sstream>

#include "json_io.hpp"
#include "sirfp/allocator.hpp"
#include "sirfp/ema_graph.hpp"
#include "sirfp/error.hpp"
#include "sirfp/mewcp.hpp"
#include "sirfp/parallel.hpp"
#include "sirfp/redundancy.hpp"

namespace sirfp {
namespace {

struct LayerState {
  std::size_t layer = 0;  // topology index
  std::vector<ChannelIndex> alive;
  std::optional<EdgeWeightMatrix> graph;
  RemovalTrace history;
  std::optional<ImportanceTrace> trace;
};

std::vector<ChannelIndex> local_positions(std::span<const ChannelIndex> alive,
                                          std::span<const ChannelIndex> kept) {
  std::vector<ChannelIndex> local;
  local.reserve(kept.size());
  for (auto c : kept) {
    const auto it = std::lower_bound(alive.begin(), alive.end(), c);
    if (it == alive.end() || *it != c) fail(Errc::InvalidArgument, "kept channel was already pruned");
    local.push_back(static_cast<ChannelIndex>(it - alive.begin()));
  }
  return local;
}

}  // namespace

EdgeWeightMatrix accumulate_features(const EdgeWeightMatrix& graph, const FeatureMapSet& fm,
                                     Metric metric, ResolutionScale scale) {
  if (fm.channels() != graph.size()) {
    fail(Errc::ShapeMismatch, "dump for '" + fm.layer_id() + "' has " +
                                  std::to_string(fm.channels()) + " channels, graph has " +
                                  std::to_string(graph.size()));
  }
  if (!graph.layer_id().empty() && fm.layer_id() != graph.layer_id()) {
    fail(Errc::ShapeMismatch, "dump layer '" + fm.layer_id() + "' does not match graph '" +
                                  graph.layer_id() + "'");
  }
  return ema_update(graph, pairwise_redundancy(fm, metric, scale));
}

RunReport run_pipeline(const SyntheticNetSpec& spec, const PruningPlan& plan,
                       const PipelineOptions& options) {
  spec.validate();
  plan.validate();
  const auto& topology = spec.topology;
  const auto& layers = topology.layers();

  std::vector<LayerState> states;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!topology.group_prunable(topology.group_of(l))) continue;
    LayerState s;
    s.layer = l;
    for (std::uint32_t c = 0; c < layers[l].out_channels; ++c) s.alive.push_back(c);
    s.graph = ema_init(layers[l].out_channels, plan.alpha, layers[l].id);
    states.push_back(std::move(s));
  }

  RunReport report;
  report.seed = spec.seed;
  report.plan = plan;
  report.topology = topology;
  report.base_flops = FlopsModel(topology).total_base();

  for (std::size_t stage = 0; stage < plan.t_step(); ++stage) {
    const auto started = std::chrono::steady_clock::now();
    const double target = plan_stage_target(plan, stage);

    parallel_for(states.size(), options.threads, [&](std::size_t k) {
      LayerState& s = states[k];
      const auto& id = layers[s.layer].id;
      for (std::uint32_t step = 0; step < spec.steps_per_stage; ++step) {
        const std::uint64_t global_step = std::uint64_t{stage} * spec.steps_per_stage + step;
        const auto fm = generate_layer_features(spec, id, global_step, s.alive);
        s.graph = ema_update(*s.graph, pairwise_redundancy(fm, plan.metric, plan.resolution_scale));
      }
      if (s.alive.size() >= 2) {
        s.trace = to_importance_trace(id, layers[s.layer].out_channels, importance_trace(*s.graph),
                                      s.alive);
      } else {
        s.trace = ImportanceTrace{id, layers[s.layer].out_channels, {}, s.alive.front()};
      }
    });

    std::vector<ImportanceTrace> traces;
    for (const auto& s : states) traces.push_back(*s.trace);
    const Allocation alloc = threshold_allocate(topology, traces, target, plan.max_channel_sparsity);

    StageReport sr;
    sr.stage = stage;
    sr.target = target;
    sr.achieved_reduction = alloc.achieved_reduction;
    sr.flops = alloc.flops;
    const bool last = stage + 1 == plan.t_step();
    std::size_t k = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const LayerAllocation& a = alloc.layers[l];
      LayerStageReport lr{a.layer_id, a.keep_count, 0.0};
      if (k < states.size() && states[k].layer == l) {
        LayerState& s = states[k++];
        const auto local = local_positions(s.alive, a.kept);
        lr.objective = clique_objective(*s.graph, local);
        if (last) report.final_graphs.push_back({s.alive, *s.graph});
        s.history.insert(s.history.end(), a.newly_pruned.begin(), a.newly_pruned.end());
        s.graph = ema_shrink(*s.graph, local);
        s.alive = a.kept;
      }
      sr.layers.push_back(std::move(lr));
    }
    sr.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    if (options.log) {
      char line[160];
      std::snprintf(line, sizeof line, "stage %zu: target %.4f achieved %.4f (%zu channels cut)",
                    stage, target, alloc.achieved_reduction, alloc.cut);
      options.log(line);
    }
    report.stages.push_back(std::move(sr));
  }

  std::size_t k = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::uint32_t width = layers[l].out_channels;
    if (k < states.size() && states[k].layer == l) {
      const LayerState& s = states[k++];
      std::vector<ChannelIndex> pruned;
      for (const auto& e : s.history) pruned.push_back(e.index);
      report.masks.emplace_back(layers[l].id, width, s.alive, std::move(pruned), s.history);
    } else {
      std::vector<ChannelIndex> all(width);
      for (std::uint32_t c = 0; c < width; ++c) all[c] = c;
      report.masks.emplace_back(layers[l].id, width, std::move(all), std::vector<ChannelIndex>{},
                                RemovalTrace{});
    }
  }
  return report;
}

std::vector<std::uint32_t> keep_counts_from_masks(const RunReport& report) {
  std::vector<std::uint32_t> counts;
  for (const auto& layer : report.topology.layers()) {
    const auto it = std::find_if(report.masks.begin(), report.masks.end(),
                                 [&](const PruneDecision& d) { return d.layer_id() == layer.id; });
    if (it == report.masks.end()) fail(Errc::InvalidArgument, "report has no mask for '" + layer.id + "'");
    counts.push_back(static_cast<std::uint32_t>(it->kept().size()));
  }
  return counts;
}

std::string write_report(const RunReport& report, bool include_timings) {
  nlohmann::ordered_json j;
  j["format"] = "sirfp-report";
  j["version"] = 1;
  j["seed"] = report.seed;
  j["plan"] = detail::plan_to_json(report.plan);
  j["topology"] = detail::topology_to_json(report.topology);
  j["base_flops"] = report.base_flops;
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : report.stages) {
    nlohmann::ordered_json e;
    e["stage"] = s.stage;
    e["target"] = s.target;
    e["achieved_reduction"] = s.achieved_reduction;
    e["flops"] = s.flops;
    auto ls = nlohmann::ordered_json::array();
    for (const auto& l : s.layers) {
      ls.push_back({{"layer_id", l.layer_id}, {"keep_count", l.keep_count}, {"objective", l.objective}});
    }
    e["layers"] = std::move(ls);
    if (include_timings) e["wall_clock_ms"] = s.wall_clock_ms;
    stages.push_back(std::move(e));
  }
  j["stages"] = std::move(stages);
  auto masks = nlohmann::ordered_json::array();
  for (const auto& m : report.masks) masks.push_back(detail::mask_to_json(m));
  j["masks"] = std::move(masks);
  return j.dump(2) + "\n";
}

RunReport read_report(std::string_view text) {
  using detail::field;
  using detail::field_or;
  using detail::json;
  const auto j = detail::parse_json(text, "run report");
  if (field_or<std::string>(j, "format", "sirfp-report") != "sirfp-report") {
    fail(Errc::Parse, "not a run report");
  }
  RunReport r;
  r.seed = field<std::uint64_t>(j, "seed");
  r.plan = detail::plan_from_json(field<json>(j, "plan"));
  r.topology = detail::topology_from_json(field<json>(j, "topology"));
  r.base_flops = field<double>(j, "base_flops");
  for (const auto& e : field<json>(j, "stages")) {
    StageReport s;
    s.stage = field<std::size_t>(e, "stage");
    s.target = field<double>(e, "target");
    s.achieved_reduction = field<double>(e, "achieved_reduction");
    s.flops = field<double>(e, "flops");
    s.wall_clock_ms = field_or<double>(e, "wall_clock_ms", 0.0);
    for (const auto& l : field<json>(e, "layers")) {
      s.layers.push_back({field<std::string>(l, "layer_id"), field<std::uint32_t>(l, "keep_count"),
                          field<double>(l, "objective")});
    }
    r.stages.push_back(std::move(s));
  }
  for (const auto& m : field<json>(j, "masks")) r.masks.push_back(detail::mask_from_json(m));
  return r;
}

std::string format_report(const RunReport& report) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "seed %llu  metric %s  resolution %s  alpha %.4g  max sparsity %.3g\n",
                static_cast<unsigned long long>(report.seed),
                std::string(to_string(report.plan.metric)).c_str(),
                std::string(to_string(report.plan.resolution_scale)).c_str(), report.plan.alpha,
                report.plan.max_channel_sparsity);
  out << buf;
  std::snprintf(buf, sizeof buf, "base FLOPs %.6g\n\n", report.base_flops);
  out << buf;
  for (const auto& s : report.stages) {
    std::snprintf(buf, sizeof buf, "stage %zu  target %.2f%%  achieved %.2f%%  FLOPs %.6g\n", s.stage,
                  100.0 * s.target, 100.0 * s.achieved_reduction, s.flops);
    out << buf;
    for (const auto& l : s.layers) {
      std::snprintf(buf, sizeof buf, "  %-24s kept %6u  objective %.6g\n", l.layer_id.c_str(),
                    l.keep_count, l.objective);
      out << buf;
    }
  }
  out << "\nfinal masks\n";
  for (const auto& m : report.masks) {
    std::snprintf(buf, sizeof buf, "  %-24s %u / %u kept\n", m.layer_id().c_str(),
                  static_cast<unsigned>(m.kept().size()), m.channels());
    out << buf;
  }
  return out.str();
}

}  // namespace sirfp
