#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "doctest.h"
#include "sirfp/formats.hpp"
#include "sirfp/topology.hpp"
#include "sirfp/types.hpp"
#include "support.hpp"
#include "test_helpers.hpp"

using namespace sirfp;

namespace {

// Hand-assembled little-endian streams, independent of the library writer.
struct Le {
  Bytes b;
  Le& raw(std::string_view s) {
    b.insert(b.end(), s.begin(), s.end());
    return *this;
  }
  Le& u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  Le& u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  Le& f32(float v) { return u32(std::bit_cast<std::uint32_t>(v)); }
  Le& f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }
  Le& name(std::string_view s) { return u32(static_cast<std::uint32_t>(s.size())).raw(s); }
};

Bytes sirf(std::string_view magic, std::uint32_t c, std::uint32_t h, std::uint32_t w,
           std::initializer_list<float> values, std::uint32_t version = 1) {
  Le le;
  le.raw(magic).u32(version).name("conv1").u32(c).u32(h).u32(w);
  for (float v : values) le.f32(v);
  return le.b;
}

Bytes sirm(std::uint32_t n, std::initializer_list<float> values, double alpha = 0.99) {
  Le le;
  le.raw("SIRM").u32(1).name("layer").u32(n).u64(3).f64(alpha);
  for (float v : values) le.f32(v);
  return le.b;
}

}  // namespace

TEST_CASE("feature dump: minimal file") {
  const auto fm = read_feature_dump(sirf("SIRF", 1, 1, 1, {0.5f}));
  CHECK(fm.layer_id() == "conv1");
  CHECK(fm.channels() == 1);
  CHECK(fm.height() == 1);
  CHECK(fm.width() == 1);
  CHECK(fm.data()[0] == 0.5);
}

TEST_CASE("feature dump: rejects bad streams") {
  CHECK_ERRC(read_feature_dump(sirf("SIRF", 2, 2, 2, {1, 2, 3, 4, 5, 6, 7})), Errc::LengthMismatch);
  CHECK_ERRC(read_feature_dump(sirf("SIRF", 1, 1, 1, {0.5f, 0.5f})), Errc::LengthMismatch);
  CHECK_ERRC(read_feature_dump(sirf("XXXX", 1, 1, 1, {0.5f})), Errc::BadMagic);
  CHECK_ERRC(read_feature_dump(sirf("SIRF", 1, 1, 1, {0.5f}, 2)), Errc::VersionUnsupported);
  CHECK_ERRC(read_feature_dump(sirf("SIRF", 1, 1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()})),
             Errc::NonFiniteValue);
  CHECK_ERRC(read_feature_dump(sirf("SIRF", 1, 1, 1, {std::numeric_limits<float>::infinity()})),
             Errc::NonFiniteValue);
  CHECK_ERRC(read_feature_dump(sirf("SIRF", 0, 1, 1, {})), Errc::LengthMismatch);
  auto cut = sirf("SIRF", 1, 1, 1, {0.5f});
  cut.resize(10);
  CHECK_ERRC(read_feature_dump(cut), Errc::Truncated);
  CHECK_ERRC(read_feature_dump(Bytes{}), Errc::BadMagic);
}

TEST_CASE("feature dump: writer emits the documented layout") {
  const FeatureMapSet fm("conv1", 2, 1, 2, {1.0, -2.0, 0.25, 3.5});
  CHECK(write_feature_dump(fm) == sirf("SIRF", 2, 1, 2, {1.0f, -2.0f, 0.25f, 3.5f}));
  CHECK(read_feature_dump(write_feature_dump(fm)) == fm);
}

TEST_CASE("feature map set validates construction") {
  CHECK_ERRC(FeatureMapSet("x", 2, 2, 2, std::vector<double>(7, 0.0)), Errc::LengthMismatch);
  CHECK_ERRC(FeatureMapSet("x", 1, 1, 1, {std::nan("")}), Errc::NonFiniteValue);
  const FeatureMapSet fm("x", 2, 1, 2, {1, 2, 3, 4});
  CHECK(fm.channel(1)[0] == 3);
  CHECK_ERRC(fm.channel(2), Errc::IndexOutOfRange);
}

TEST_CASE("edge matrix: round trip and documented layout") {
  const EdgeWeightMatrix m("layer", 2, {0, 0.7, 0.7, 0}, 3, 0.99);
  const Bytes bytes = write_edge_matrix(m);
  CHECK(bytes == sirm(2, {0.0f, 0.7f, 0.7f, 0.0f}));
  const EdgeWeightMatrix back = read_edge_matrix(bytes);
  CHECK(back.size() == 2);
  CHECK(back.update_count() == 3);
  CHECK(back.alpha() == 0.99);
  CHECK(back(0, 1) == static_cast<double>(0.7f));
  // Second pass is the identity.
  CHECK(read_edge_matrix(write_edge_matrix(back)) == back);
  CHECK(write_edge_matrix(back) == bytes);
}

TEST_CASE("edge matrix: f32-representable values round trip exactly") {
  const EdgeWeightMatrix m("layer", 2, {0, 0.75, 0.75, 0}, 0, 0.5);
  CHECK(read_edge_matrix(write_edge_matrix(m)) == m);
}

TEST_CASE("edge matrix: rejects invariant violations") {
  CHECK_ERRC(read_edge_matrix(sirm(2, {0.0f, 0.7f, 0.6f, 0.0f})), Errc::AsymmetryDetected);
  CHECK_ERRC(read_edge_matrix(sirm(2, {0.1f, 0.7f, 0.7f, 0.0f})), Errc::NonZeroDiagonal);
  CHECK_ERRC(read_edge_matrix(sirm(2, {0.0f, 0.7f, 0.7f})), Errc::LengthMismatch);
  CHECK_ERRC(read_edge_matrix(sirm(2, {0.0f, 0.7f, 0.7f, 0.0f}, 1.0)), Errc::InvalidAlpha);
  CHECK_ERRC(read_edge_matrix(sirf("SIRF", 1, 1, 1, {0.5f})), Errc::BadMagic);
  CHECK_ERRC(EdgeWeightMatrix("x", 2, {0, 1, 2, 0}, 0, 0.99), Errc::AsymmetryDetected);
  CHECK_ERRC(EdgeWeightMatrix("x", 2, {1, 1, 1, 0}, 0, 0.99), Errc::NonZeroDiagonal);
  CHECK_ERRC(EdgeWeightMatrix("x", 2, {0, 1, 1, 0}, 0, 0.0), Errc::InvalidAlpha);
}

TEST_CASE("mask: round trip") {
  const PruneDecision d("conv", 3, {0, 2}, {1}, {{1, 0.42}});
  const std::string doc = write_mask(d);
  CHECK(read_mask(doc) == d);
  CHECK(doc.find("\"kept\"") != std::string::npos);
  CHECK(doc.find("\"removal_trace\"") != std::string::npos);
}

TEST_CASE("mask: rejects invalid decisions") {
  CHECK_ERRC(PruneDecision("c", 2, {0, 1}, {1}, {{1, 0.1}}), Errc::OverlapDetected);
  CHECK_ERRC(PruneDecision("c", 2, {0}, {}, {}), Errc::IncompleteCover);
  CHECK_ERRC(PruneDecision("c", 2, {0}, {2}, {{2, 0.0}}), Errc::IndexOutOfRange);
  CHECK_ERRC(PruneDecision("c", 3, {0}, {1, 2}, {{1, 0.0}}), Errc::TraceMismatch);
  CHECK_ERRC(PruneDecision("c", 3, {0}, {1, 2}, {{1, 0.0}, {1, 0.0}}), Errc::TraceMismatch);

  const std::string overlap =
      R"({"layer_id":"c","channels":2,"kept":[0,1],"pruned":[1],"removal_trace":[[1,0.1]]})";
  CHECK_ERRC(read_mask(overlap), Errc::OverlapDetected);
  const std::string gap = R"({"layer_id":"c","channels":2,"kept":[0],"pruned":[],"removal_trace":[]})";
  CHECK_ERRC(read_mask(gap), Errc::IncompleteCover);
  CHECK_ERRC(read_mask("{not json"), Errc::Parse);
  CHECK_ERRC(read_mask(R"({"layer_id":"c"})"), Errc::Parse);
}

TEST_CASE("serialization round trips on random instances") {
  testing::Rng rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    const std::uint32_t c = testing::uniform_int(rng, 1, 6);
    const std::uint32_t h = testing::uniform_int(rng, 1, 5);
    const std::uint32_t w = testing::uniform_int(rng, 1, 5);
    std::vector<double> data(std::size_t{c} * h * w);
    for (auto& v : data) v = static_cast<float>(testing::uniform(rng, -10, 10));
    const FeatureMapSet fm("layer/" + std::to_string(iter), c, h, w, data);
    CHECK(read_feature_dump(write_feature_dump(fm)) == fm);

    const std::uint32_t n = testing::uniform_int(rng, 1, 9);
    auto weights = testing::random_symmetric(rng, n);
    for (auto& v : weights) v = static_cast<float>(v);
    const EdgeWeightMatrix m("m", n, weights, rng() % 1000, testing::uniform(rng, 0.01, 0.99));
    CHECK(read_edge_matrix(write_edge_matrix(m)) == m);

    std::vector<ChannelIndex> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::uint32_t pruned_n = testing::uniform_int(rng, 0, n - 1);
    RemovalTrace trace;
    std::vector<ChannelIndex> pruned(perm.begin(), perm.begin() + pruned_n);
    for (auto k : pruned) trace.push_back({k, testing::uniform(rng, 0, 5)});
    const PruneDecision d("m", n, {perm.begin() + pruned_n, perm.end()}, pruned, trace);
    CHECK(read_mask(write_mask(d)) == d);
  }
}

TEST_CASE("plan documents") {
  PruningPlan p;
  p.stage_targets = {0.3, 0.6};
  p.metric = Metric::Dice;
  p.resolution_scale = ResolutionScale::Half;
  CHECK(read_plan(write_plan(p)) == p);

  const PruningPlan d = read_plan(R"({"stage_targets":[0.6]})");
  CHECK(d.alpha == 0.99);
  CHECK(d.max_channel_sparsity == 0.9);
  CHECK(d.metric == Metric::Js);
  CHECK(d.resolution_scale == ResolutionScale::Full);
  CHECK(d.t_step() == 1);

  CHECK_ERRC(read_plan(R"({"stage_targets":[0.6,0.3]})"), Errc::InvalidPlan);
  CHECK_ERRC(read_plan(R"({"stage_targets":[1.0]})"), Errc::InvalidPlan);
  CHECK_ERRC(read_plan(R"({"stage_targets":[]})"), Errc::InvalidPlan);
  CHECK_ERRC(read_plan(R"({"t_step":3,"stage_targets":[0.3,0.6]})"), Errc::InvalidPlan);
  CHECK_ERRC(read_plan(R"({"stage_targets":[0.5],"alpha":1.5})"), Errc::InvalidAlpha);
  CHECK_ERRC(read_plan(R"({"stage_targets":[0.5],"metric":"cosine"})"), Errc::InvalidArgument);
}

TEST_CASE("resolution spellings") {
  CHECK(parse_resolution("1") == ResolutionScale::Full);
  CHECK(parse_resolution("1/2") == ResolutionScale::Half);
  CHECK(parse_resolution("1/4") == ResolutionScale::Quarter);
  CHECK(parse_resolution("2") == ResolutionScale::Double);
  CHECK(parse_resolution("pooled-vector") == ResolutionScale::Pooled);
  CHECK(parse_resolution(to_string(ResolutionScale::Quarter)) == ResolutionScale::Quarter);
  CHECK_ERRC(parse_resolution("3"), Errc::InvalidArgument);
}

TEST_CASE("topology validation and coupling") {
  const std::vector<LayerSpec> layers{
      {"a", LayerKind::Conv, 3, 8, 3, 3, 4, 4, true},
      {"b", LayerKind::Conv, 8, 8, 3, 3, 4, 4, true},
      {"c", LayerKind::Conv, 8, 4, 1, 1, 4, 4, true},
      {"head", LayerKind::Linear, 4, 10, 1, 1, 1, 1, false},
  };
  const LayerTopology t(layers, {{"a", "b"}, {"a", "c"}, {"b", "c"}, {"c", "head"}});
  // a and b both feed c, so they share channels.
  CHECK(t.group_of(0) == t.group_of(1));
  CHECK(t.group_of(2) != t.group_of(0));
  CHECK(!t.group_prunable(t.group_of(3)));
  CHECK(t.input_group(2) == t.group_of(0));
  CHECK(!t.input_group(0).has_value());
  CHECK(read_topology(write_topology(t)) == t);

  CHECK_ERRC(LayerTopology(layers, {{"a", "head"}}), Errc::InvalidTopology);
  CHECK_ERRC(LayerTopology(layers, {{"a", "zzz"}}), Errc::InvalidTopology);
  CHECK_ERRC(LayerTopology({layers[0], layers[0]}, {}), Errc::InvalidTopology);
  const std::vector<LayerSpec> loop{{"x", LayerKind::Conv, 4, 4, 1, 1, 1, 1, true},
                                    {"y", LayerKind::Conv, 4, 4, 1, 1, 1, 1, true}};
  CHECK_ERRC(LayerTopology(loop, {{"x", "y"}, {"y", "x"}}), Errc::InvalidTopology);
  CHECK_ERRC(LayerTopology(loop, {}, {{"x", "q"}}), Errc::InvalidTopology);
  const LayerTopology coupled(loop, {}, {{"x", "y"}});
  CHECK(coupled.group_of(0) == coupled.group_of(1));
}

TEST_CASE("file stems are filesystem-safe") {
  const std::string stem = file_stem_for("backbone/layer1.0:conv");
  CHECK(stem.find('/') == std::string::npos);
  CHECK(stem.find(':') == std::string::npos);
  CHECK(!stem.empty());
}
