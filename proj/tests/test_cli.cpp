#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "sirfp/cli.hpp"
#include "sirfp/formats.hpp"
#include "sirfp/mewcp.hpp"
#include "sirfp/pipeline.hpp"
#include "sirfp/synthetic.hpp"
#include "support.hpp"

using namespace sirfp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

EdgeWeightMatrix matrix_a() {
  return EdgeWeightMatrix("a", 4, {0, .9, .1, .2, .9, 0, .3, .4, .1, .3, 0, .8, .2, .4, .8, 0}, 1, 0.99);
}

}  // namespace

TEST_CASE("cli: help and usage errors") {
  auto r = run({"--help"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("simulate") != std::string::npos);

  r = run({});
  CHECK(r.code == cli::kUsage);
  r = run({"solve"});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("--input") != std::string::npos);
  r = run({"frobnicate"});
  CHECK(r.code == cli::kUsage);
  r = run({"solve", "--input", "x.sirm", "--keep", "2", "--prune", "2"});
  CHECK(r.code == cli::kUsage);
  r = run({"solve", "--input", "x.sirm", "--keep", "2", "--solver", "annealing"});
  CHECK(r.code == cli::kUsage);
}

TEST_CASE("cli: solve") {
  testing::TempDir dir("solve");
  const auto graph = dir.path / "layer.sirm";
  write_file(graph, write_edge_matrix(matrix_a()));

  auto r = run({"solve", "--input", graph.string(), "--prune", "2", "--solver", "exact"});
  REQUIRE(r.code == cli::kOk);
  auto mask = read_mask(r.out);
  CHECK(mask.kept() == std::vector<ChannelIndex>{0, 1});
  CHECK(mask.pruned() == std::vector<ChannelIndex>{2, 3});

  const auto out = dir.path / "greedy.mask.json";
  r = run({"solve", "--input", graph.string(), "--keep", "2", "--output", out.string()});
  REQUIRE(r.code == cli::kOk);
  mask = read_mask(read_file_text(out));
  CHECK(mask.kept() == std::vector<ChannelIndex>{2, 3});
  CHECK(mask.removal_trace().front().index == 0);

  r = run({"solve", "--input", graph.string(), "--importance"});
  REQUIRE(r.code == cli::kOk);
  CHECK(read_mask(r.out).kept().size() == 1);

  r = run({"solve", "--input", graph.string(), "--keep", "9"});
  CHECK(r.code == cli::kDataError);
  r = run({"solve", "--input", (dir.path / "missing.sirm").string(), "--keep", "1"});
  CHECK(r.code == cli::kDataError);
  write_file(dir.path / "junk.sirm", std::string("junk"));
  r = run({"solve", "--input", (dir.path / "junk.sirm").string(), "--keep", "1"});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("BadMagic") != std::string::npos);
}

TEST_CASE("cli: accumulate then solve then prune") {
  testing::TempDir dir("flow");
  const auto spec = coincident_pairs_spec(42);
  std::vector<std::string> args{"accumulate", "--output-dir", (dir.path / "graphs").string()};
  for (std::uint64_t step = 0; step < 6; ++step) {
    const auto path = dir.path / ("dump" + std::to_string(step) + ".sirf");
    write_file(path, write_feature_dump(generate_features(spec, step)[0]));
    args.push_back("--input");
    args.push_back(path.string());
  }
  auto r = run(args);
  REQUIRE(r.code == cli::kOk);
  const auto graph_path = dir.path / "graphs" / "features.sirm";
  const auto graph = read_edge_matrix(read_file_bytes(graph_path));
  CHECK(graph.update_count() == 6);

  // Resuming adds to the stored history.
  r = run({"accumulate", "--resume", "--input", (dir.path / "dump0.sirf").string(), "--output-dir",
           (dir.path / "graphs").string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(read_edge_matrix(read_file_bytes(graph_path)).update_count() == 7);

  const auto trace_path = dir.path / "features.trace.json";
  r = run({"solve", "--input", graph_path.string(), "--importance", "--output", trace_path.string()});
  REQUIRE(r.code == cli::kOk);

  const auto topo_path = dir.path / "topology.json";
  write_file(topo_path, write_topology(spec.topology));
  r = run({"prune", "--topology", topo_path.string(), "--traces", trace_path.string(), "--target", "0.5",
           "--output-dir", (dir.path / "masks").string()});
  REQUIRE(r.code == cli::kOk);
  const auto mask = read_mask(read_file_text(dir.path / "masks" / "features.mask.json"));
  CHECK(mask.kept().size() == 4);

  r = run({"prune", "--topology", topo_path.string(), "--traces", trace_path.string(), "--target", "0.99",
           "--max-sparsity", "0.5", "--output-dir", (dir.path / "masks").string()});
  CHECK(r.code == cli::kInfeasible);

  // A kept-set mask is not a trace.
  r = run({"prune", "--topology", topo_path.string(), "--traces",
           (dir.path / "masks" / "features.mask.json").string(), "--target", "0.1", "--output-dir",
           (dir.path / "masks").string()});
  CHECK(r.code == cli::kDataError);
}

TEST_CASE("cli: simulate, report, config precedence") {
  testing::TempDir dir("sim");
  const auto spec_path = dir.path / "spec.json";
  write_file(spec_path, write_synthetic_spec(coincident_pairs_spec(42)));
  const auto plan_path = dir.path / "plan.json";
  write_file(plan_path, std::string(R"({"stage_targets":[0.25,0.5],"resolution_scale":"half"})"));

  auto r = run({"simulate", "--spec", spec_path.string(), "--plan", plan_path.string(), "--output-dir",
                (dir.path / "a").string(), "--threads", "2"});
  REQUIRE(r.code == cli::kOk);
  const auto report = read_report(read_file_text(dir.path / "a" / "report.json"));
  CHECK(report.plan.resolution_scale == ResolutionScale::Half);
  CHECK(report.stages.size() == 2);
  CHECK(fs::exists(dir.path / "a" / "masks" / "features.mask.json"));

  r = run({"report", "--input", (dir.path / "a" / "report.json").string()});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("matches") != std::string::npos);

  // Flags override the plan document; config values sit between the two.
  const auto cfg = dir.path / "run.ini";
  write_file(cfg, std::string("[simulate]\nresolution=quarter\nseed=7\n"));
  r = run({"--config", cfg.string(), "simulate", "--spec", spec_path.string(), "--plan", plan_path.string(),
           "--output-dir", (dir.path / "b").string()});
  REQUIRE(r.code == cli::kOk);
  auto b = read_report(read_file_text(dir.path / "b" / "report.json"));
  CHECK(b.plan.resolution_scale == ResolutionScale::Quarter);
  CHECK(b.seed == 7);
  r = run({"--config", cfg.string(), "simulate", "--spec", spec_path.string(), "--plan", plan_path.string(),
           "--resolution", "full", "--output-dir", (dir.path / "c").string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(read_report(read_file_text(dir.path / "c" / "report.json")).plan.resolution_scale == ResolutionScale::Full);

  r = run({"simulate", "--spec", spec_path.string(), "--targets", "0.9", "--max-sparsity", "0.5",
           "--output-dir", (dir.path / "d").string()});
  CHECK(r.code == cli::kInfeasible);
  r = run({"simulate", "--spec", spec_path.string(), "--output-dir", (dir.path / "e").string()});
  CHECK(r.code == cli::kUsage);
  r = run({"simulate", "--spec", spec_path.string(), "--targets", "0.5,0.3", "--output-dir",
           (dir.path / "f").string()});
  CHECK(r.code == cli::kDataError);
}
