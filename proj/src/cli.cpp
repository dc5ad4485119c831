#include "sirfp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "sirfp/allocator.hpp"
#include "sirfp/ema_graph.hpp"
#include "sirfp/error.hpp"
#include "sirfp/formats.hpp"
#include "sirfp/mewcp.hpp"
#include "sirfp/pipeline.hpp"

namespace sirfp::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  // shared
  bool verbose = false;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string output_dir;
  std::string metric = "js";
  std::string resolution = "full";
  double alpha = kDefaultAlpha;
  double max_sparsity = kDefaultMaxChannelSparsity;
  // accumulate
  std::vector<std::string> dumps;
  bool resume = false;
  // solve
  std::string graph_path;
  std::uint32_t keep = 0;
  std::uint32_t prune = 0;
  bool importance = false;
  std::string solver = "greedy";
  std::string output;
  // prune
  std::string topology_path;
  std::vector<std::string> trace_paths;
  double target = 0.0;
  // simulate
  std::string spec_path;
  std::string plan_path;
  std::vector<double> targets;
  std::uint64_t seed = 42;
  std::uint32_t steps = 0;
  bool timings = false;
  // report
  std::string report_path;
};

void log(const Config& cfg, std::ostream& err, std::string_view line) {
  if (cfg.verbose) err << line << '\n';
}

std::string describe_decision(const PruneDecision& d) {
  std::string s = d.layer_id() + ": kept " + std::to_string(d.kept().size()) + "/" +
                  std::to_string(d.channels()) + " {";
  for (std::size_t k = 0; k < d.kept().size(); ++k) {
    if (k) s += ",";
    s += std::to_string(d.kept()[k]);
  }
  return s + "}";
}

PruneDecision decision_from_solution(const EdgeWeightMatrix& m, const CliqueSolution& sol) {
  std::vector<std::uint8_t> kept(m.size(), 0);
  for (auto c : sol.kept) kept[c] = 1;
  std::vector<ChannelIndex> pruned;
  for (std::uint32_t c = 0; c < m.size(); ++c) {
    if (!kept[c]) pruned.push_back(c);
  }
  RemovalTrace trace = sol.removal_trace;
  if (trace.empty() && !pruned.empty()) {
    // Exact solutions have no removal order: score each pruned channel by its
    // edge sum into the kept clique and list them ascending.
    for (auto c : pruned) {
      double s = 0.0;
      for (auto k : sol.kept) s += m(c, k);
      trace.push_back({c, s});
    }
    std::stable_sort(trace.begin(), trace.end(),
                     [](const TraceEntry& a, const TraceEntry& b) { return a.score < b.score; });
  }
  return PruneDecision(m.layer_id(), m.size(), sol.kept, std::move(pruned), std::move(trace));
}

int cmd_accumulate(const Config& cfg, std::ostream& out, std::ostream& err) {
  const Metric metric = parse_metric(cfg.metric);
  const ResolutionScale scale = parse_resolution(cfg.resolution);
  fs::create_directories(cfg.output_dir);

  std::vector<std::string> order;
  std::map<std::string, EdgeWeightMatrix> graphs;
  for (const auto& path : cfg.dumps) {
    const FeatureMapSet fm = read_feature_dump(read_file_bytes(path));
    auto it = graphs.find(fm.layer_id());
    if (it == graphs.end()) {
      const fs::path existing = fs::path(cfg.output_dir) / (file_stem_for(fm.layer_id()) + ".sirm");
      EdgeWeightMatrix start = cfg.resume && fs::exists(existing)
                                   ? read_edge_matrix(read_file_bytes(existing))
                                   : ema_init(fm.channels(), cfg.alpha, fm.layer_id());
      it = graphs.emplace(fm.layer_id(), std::move(start)).first;
      order.push_back(fm.layer_id());
    }
    it->second = accumulate_features(it->second, fm, metric, scale);
    log(cfg, err, "accumulated " + path + " into '" + fm.layer_id() + "'");
  }
  for (const auto& id : order) {
    const auto& g = graphs.at(id);
    const fs::path path = fs::path(cfg.output_dir) / (file_stem_for(id) + ".sirm");
    write_file(path, write_edge_matrix(g));
    out << id << ": " << g.size() << " channels, " << g.update_count() << " updates -> "
        << path.string() << '\n';
  }
  return kOk;
}

int cmd_solve(const Config& cfg, bool has_keep, bool has_prune, std::ostream& out, std::ostream& err) {
  if (int(has_keep) + int(has_prune) + int(cfg.importance) != 1) {
    throw UsageError("solve needs exactly one of --keep, --prune or --importance");
  }
  if (cfg.solver != "greedy" && cfg.solver != "exact") {
    throw UsageError("--solver must be greedy or exact");
  }
  const EdgeWeightMatrix m = read_edge_matrix(read_file_bytes(cfg.graph_path));
  const std::uint32_t n = m.size();

  CliqueSolution sol;
  if (cfg.importance) {
    if (cfg.solver == "exact") throw UsageError("--importance is a greedy trace");
    sol = importance_trace(m);
  } else {
    std::uint32_t keep = 0;
    if (has_keep) {
      if (cfg.keep < 1 || cfg.keep > n) fail(Errc::BadCardinality, "--keep outside [1, n]");
      keep = cfg.keep;
    } else {
      if (cfg.prune > n - 1) fail(Errc::BadCardinality, "--prune must be at most n - 1");
      keep = n - cfg.prune;
    }
    sol = cfg.solver == "exact" ? exact_mewcp(m, keep) : ehgp(m, n - keep);
  }
  const PruneDecision d = decision_from_solution(m, sol);
  const std::string doc = write_mask(d);
  if (cfg.output.empty()) {
    out << doc;
  } else {
    write_file(cfg.output, doc);
    out << describe_decision(d) << '\n';
  }
  log(cfg, err, "objective " + std::to_string(sol.objective));
  return kOk;
}

int cmd_prune(const Config& cfg, std::ostream& out, std::ostream& err) {
  const LayerTopology topology = read_topology(read_file_text(cfg.topology_path));
  std::vector<ImportanceTrace> traces;
  for (const auto& path : cfg.trace_paths) {
    const PruneDecision d = read_mask(read_file_text(path));
    if (d.kept().size() != 1) {
      fail(Errc::InvalidArgument, "'" + path + "' is not a full importance trace (expected one "
                                  "surviving channel; produce it with solve --importance)");
    }
    traces.push_back({d.layer_id(), d.channels(), d.removal_trace(), d.kept().front()});
  }
  const Allocation alloc = threshold_allocate(topology, traces, cfg.target, cfg.max_sparsity);

  fs::create_directories(cfg.output_dir);
  for (const auto& a : alloc.layers) {
    std::vector<ChannelIndex> pruned;
    for (const auto& e : a.newly_pruned) pruned.push_back(e.index);
    const PruneDecision d(a.layer_id, a.channels, a.kept, std::move(pruned), a.newly_pruned);
    const fs::path path = fs::path(cfg.output_dir) / (file_stem_for(a.layer_id) + ".mask.json");
    write_file(path, write_mask(d));
    log(cfg, err, "wrote " + path.string());
    out << describe_decision(d) << '\n';
  }
  char line[128];
  std::snprintf(line, sizeof line, "target %.6f achieved %.6f flops %.6g / %.6g\n", cfg.target,
                alloc.achieved_reduction, alloc.flops, alloc.base_flops);
  out << line;
  return kOk;
}

int cmd_simulate(const CLI::App& sub, const Config& cfg, std::ostream& out, std::ostream& err) {
  SyntheticNetSpec spec = read_synthetic_spec(read_file_text(cfg.spec_path));
  PruningPlan plan;
  if (!cfg.plan_path.empty()) {
    plan = read_plan(read_file_text(cfg.plan_path));
  } else if (sub.count("--targets") == 0) {
    throw UsageError("simulate needs --plan or --targets");
  }
  // Flags (and config-file values) override the plan document.
  if (sub.count("--targets")) plan.stage_targets = cfg.targets;
  if (sub.count("--metric")) plan.metric = parse_metric(cfg.metric);
  if (sub.count("--resolution")) plan.resolution_scale = parse_resolution(cfg.resolution);
  if (sub.count("--alpha")) plan.alpha = cfg.alpha;
  if (sub.count("--max-sparsity")) plan.max_channel_sparsity = cfg.max_sparsity;
  if (sub.count("--seed")) spec.seed = cfg.seed;
  if (sub.count("--steps")) spec.steps_per_stage = cfg.steps;
  plan.validate();

  PipelineOptions options;
  options.threads = cfg.threads;
  options.log = [&](std::string_view line) { log(cfg, err, line); };
  const RunReport report = run_pipeline(spec, plan, options);

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir / "masks");
  write_file(dir / "report.json", write_report(report, cfg.timings));
  for (const auto& m : report.masks) {
    write_file(dir / "masks" / (file_stem_for(m.layer_id()) + ".mask.json"), write_mask(m));
  }
  const auto& last = report.stages.back();
  char line[128];
  std::snprintf(line, sizeof line, "final reduction %.6f (target %.6f), report %s\n",
                last.achieved_reduction, last.target, (dir / "report.json").string().c_str());
  out << line;
  return kOk;
}

int cmd_report(const Config& cfg, std::ostream& out) {
  const RunReport report = read_report(read_file_text(cfg.report_path));
  out << format_report(report);
  if (!report.stages.empty() && !report.topology.layers().empty()) {
    const double flops = total_flops(report.topology, keep_counts_from_masks(report));
    const double reported = report.stages.back().flops;
    const bool consistent = std::abs(flops - reported) <= 1e-9 * std::max(1.0, std::abs(reported));
    char line[160];
    std::snprintf(line, sizeof line, "\nFLOPs recomputed from masks: %.6g (%s)\n", flops,
                  consistent ? "matches final stage" : "MISMATCH with final stage");
    out << line;
    if (!consistent) return kDataError;
  }
  return kOk;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Spatial-redundancy channel pruning engine", "sirfp"};
  app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");
  app.add_flag("-v,--verbose", cfg.verbose, "Diagnostics on standard error");
  app.require_subcommand(1);

  auto add_metric_flags = [&](CLI::App* sub) {
    sub->add_option("--metric", cfg.metric, "js | kl | dice | dot")
        ->check(CLI::IsMember({"js", "kl", "dice", "dot"}));
    sub->add_option("--resolution", cfg.resolution, "full | half | quarter | pooled | double");
    sub->add_option("--alpha", cfg.alpha, "EMA coefficient in (0,1)");
  };

  auto* accumulate = app.add_subcommand("accumulate", "Fold SIRF feature dumps into SIRM edge graphs");
  accumulate->add_option("-i,--input", cfg.dumps, "SIRF dump files, in stream order")->required();
  accumulate->add_option("-o,--output-dir", cfg.output_dir, "Directory for <layer>.sirm")->required();
  accumulate->add_flag("--resume", cfg.resume, "Continue from existing graphs in the output directory");
  add_metric_flags(accumulate);

  auto* solve = app.add_subcommand("solve", "Prune one edge graph into a mask document");
  solve->add_option("-i,--input", cfg.graph_path, "SIRM edge graph")->required();
  auto* keep_opt = solve->add_option("--keep", cfg.keep, "Channels to keep");
  auto* prune_opt = solve->add_option("--prune", cfg.prune, "Channels to prune");
  keep_opt->excludes(prune_opt);
  solve->add_flag("--importance", cfg.importance, "Emit the full greedy importance trace");
  solve->add_option("--solver", cfg.solver, "greedy | exact")
      ->check(CLI::IsMember({"greedy", "exact"}));
  solve->add_option("-o,--output", cfg.output, "Mask file (default: standard output)");

  auto* prune = app.add_subcommand("prune", "Allocate keep counts from importance traces");
  prune->add_option("--topology", cfg.topology_path, "Topology document")->required();
  prune->add_option("--traces", cfg.trace_paths, "Importance traces (solve --importance)")->required();
  prune->add_option("--target", cfg.target, "FLOPs reduction target in [0,1)")->required();
  prune->add_option("--max-sparsity", cfg.max_sparsity, "Per-layer pruned-fraction cap");
  prune->add_option("-o,--output-dir", cfg.output_dir, "Directory for mask documents")->required();

  auto* simulate = app.add_subcommand("simulate", "Run the progressive pipeline on a synthetic network description");
  simulate->add_option("--spec", cfg.spec_path, "Synthetic network spec")->required();
  simulate->add_option("--plan", cfg.plan_path, "Plan document");
  simulate->add_option("--targets", cfg.targets, "Cumulative stage targets, e.g. 0.3,0.6")->delimiter(',');
  simulate->add_option("--max-sparsity", cfg.max_sparsity, "Per-layer pruned-fraction cap");
  simulate->add_option("--seed", cfg.seed, "Seed for every random stream");
  simulate->add_option("--steps", cfg.steps, "Feature batches per stage");
  simulate->add_option("--threads", cfg.threads, "Worker threads (output is independent of this)")
      ->check(CLI::PositiveNumber);
  simulate->add_flag("--timings", cfg.timings, "Include wall-clock times in the report");
  simulate->add_option("-o,--output-dir", cfg.output_dir, "Directory for report.json and masks/")->required();
  add_metric_flags(simulate);

  auto* report = app.add_subcommand("report", "Pretty-print a run report");
  report->add_option("-i,--input", cfg.report_path, "report.json")->required();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*accumulate) return cmd_accumulate(cfg, out, err);
    if (*solve) return cmd_solve(cfg, keep_opt->count() > 0, prune_opt->count() > 0, out, err);
    if (*prune) return cmd_prune(cfg, out, err);
    if (*simulate) return cmd_simulate(*simulate, cfg, out, err);
    if (*report) return cmd_report(cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::Infeasible ? kInfeasible : kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace sirfp::cli
