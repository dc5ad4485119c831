#include "sirfp/synthetic.hpp"

#include <cmath>
#include <random>

#include "json_io.hpp"
#include "sirfp/error.hpp"

namespace sirfp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t layer, std::uint64_t channel,
                          std::uint64_t step) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ layer);
  h = splitmix64(h ^ channel);
  return splitmix64(h ^ step);
}

}  // namespace

void SyntheticNetSpec::validate() const {
  if (steps_per_stage == 0) fail(Errc::InvalidArgument, "steps_per_stage must be >= 1");
  if (batch_size == 0) fail(Errc::InvalidArgument, "batch_size must be >= 1");
  std::vector<int> covered(topology.layers().size(), 0);
  for (const auto& g : generators) {
    const auto l = topology.find(g.layer_id);
    if (!l) fail(Errc::InvalidArgument, "generator for unknown layer '" + g.layer_id + "'");
    if (covered[*l]++) fail(Errc::InvalidArgument, "duplicate generator for '" + g.layer_id + "'");
    const auto& layer = topology.layers()[*l];
    if (g.channels.size() != layer.out_channels) {
      fail(Errc::InvalidArgument, "generator for '" + g.layer_id + "' describes " +
                                      std::to_string(g.channels.size()) + " channels, layer has " +
                                      std::to_string(layer.out_channels));
    }
    for (const auto& c : g.channels) {
      if (!(c.center_x >= 0.0 && c.center_x < layer.out_w && c.center_y >= 0.0 &&
            c.center_y < layer.out_h)) {
        fail(Errc::InvalidArgument, "blob centre outside the grid of '" + g.layer_id + "'");
      }
      if (!(c.sigma > 0.0)) fail(Errc::InvalidArgument, "blob sigma must be positive");
      if (!(c.noise >= 0.0) || !std::isfinite(c.amplitude)) {
        fail(Errc::InvalidArgument, "blob noise must be >= 0 and amplitude finite");
      }
    }
  }
  for (std::size_t l = 0; l < covered.size(); ++l) {
    if (!covered[l] && topology.group_prunable(topology.group_of(l))) {
      fail(Errc::InvalidArgument, "prunable layer '" + topology.layers()[l].id + "' has no generator");
    }
  }
}

const LayerGenerator& SyntheticNetSpec::generator_for(const std::string& layer_id) const {
  for (const auto& g : generators) {
    if (g.layer_id == layer_id) return g;
  }
  fail(Errc::InvalidArgument, "no generator for layer '" + layer_id + "'");
}

FeatureMapSet generate_layer_features(const SyntheticNetSpec& spec, const std::string& layer_id,
                                      std::uint64_t step, std::span<const ChannelIndex> channels) {
  const std::size_t layer_index = spec.topology.index_of(layer_id);
  const auto& layer = spec.topology.layers()[layer_index];
  const auto& gen = spec.generator_for(layer_id);
  const std::uint32_t h = layer.out_h;
  const std::uint32_t w = layer.out_w;
  const std::size_t plane = std::size_t{h} * w;

  std::vector<double> data(channels.size() * plane, 0.0);
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const ChannelIndex c = channels[k];
    if (c >= gen.channels.size()) fail(Errc::IndexOutOfRange, "channel " + std::to_string(c));
    const BlobChannel& blob = gen.channels[c];
    std::mt19937_64 rng(stream_seed(spec.seed, layer_index, c, step));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double inv_two_var = 1.0 / (2.0 * blob.sigma * blob.sigma);
    double* out = data.data() + k * plane;
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        const double dx = x - blob.center_x;
        const double dy = y - blob.center_y;
        out[std::size_t{y} * w + x] = blob.amplitude * std::exp(-(dx * dx + dy * dy) * inv_two_var);
      }
    }
    if (blob.noise > 0.0) {
      // Batch mean of independent noisy samples around the same blob.
      for (std::uint32_t b = 0; b < spec.batch_size; ++b) {
        for (std::size_t p = 0; p < plane; ++p) {
          out[p] += blob.noise * gauss(rng) / spec.batch_size;
        }
      }
    }
  }
  return FeatureMapSet(layer_id, static_cast<std::uint32_t>(channels.size()), h, w, std::move(data));
}

std::vector<FeatureMapSet> generate_features(const SyntheticNetSpec& spec, std::uint64_t step) {
  std::vector<FeatureMapSet> out;
  for (const auto& layer : spec.topology.layers()) {
    bool has_generator = false;
    for (const auto& g : spec.generators) has_generator |= g.layer_id == layer.id;
    if (!has_generator) continue;
    std::vector<ChannelIndex> all(layer.out_channels);
    for (std::uint32_t c = 0; c < layer.out_channels; ++c) all[c] = c;
    out.push_back(generate_layer_features(spec, layer.id, step, all));
  }
  return out;
}

SyntheticNetSpec coincident_pairs_spec(std::uint64_t seed, std::uint32_t pairs, std::uint32_t size,
                                       double noise) {
  if (pairs == 0 || size < 4) fail(Errc::InvalidArgument, "need at least one pair on a 4x4 grid");
  const auto cols = static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(pairs))));
  const std::uint32_t rows = (pairs + cols - 1) / cols;
  const double cell_w = static_cast<double>(size) / cols;
  const double cell_h = static_cast<double>(size) / rows;
  const double sigma = std::min(cell_w, cell_h) / 6.0;

  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);

  LayerGenerator gen{"features", {}};
  for (std::uint32_t p = 0; p < pairs; ++p) {
    BlobChannel blob;
    blob.center_x = (p % cols + 0.5) * cell_w + jitter(rng);
    blob.center_y = (p / cols + 0.5) * cell_h + jitter(rng);
    blob.sigma = sigma;
    blob.amplitude = 1.0;
    blob.noise = noise;
    gen.channels.push_back(blob);
    gen.channels.push_back(blob);
  }

  LayerSpec layer;
  layer.id = "features";
  layer.in_channels = 3;
  layer.out_channels = 2 * pairs;
  layer.kernel_h = 3;
  layer.kernel_w = 3;
  layer.out_h = size;
  layer.out_w = size;

  SyntheticNetSpec spec{LayerTopology({layer}, {}), {std::move(gen)}, seed, 16, 1};
  spec.validate();
  return spec;
}

std::string write_synthetic_spec(const SyntheticNetSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["steps_per_stage"] = spec.steps_per_stage;
  j["batch_size"] = spec.batch_size;
  j["topology"] = detail::topology_to_json(spec.topology);
  auto gens = nlohmann::ordered_json::array();
  for (const auto& g : spec.generators) {
    nlohmann::ordered_json e;
    e["layer_id"] = g.layer_id;
    auto channels = nlohmann::ordered_json::array();
    for (const auto& c : g.channels) {
      channels.push_back({{"center", {c.center_x, c.center_y}},
                          {"sigma", c.sigma},
                          {"amplitude", c.amplitude},
                          {"noise", c.noise}});
    }
    e["channels"] = std::move(channels);
    gens.push_back(std::move(e));
  }
  j["generators"] = std::move(gens);
  return j.dump(2) + "\n";
}

SyntheticNetSpec read_synthetic_spec(std::string_view text) {
  using detail::field;
  using detail::field_or;
  const auto j = detail::parse_json(text, "synthetic network");
  SyntheticNetSpec spec{detail::topology_from_json(field<detail::json>(j, "topology")), {},
                        field_or<std::uint64_t>(j, "seed", 42),
                        field_or<std::uint32_t>(j, "steps_per_stage", 16),
                        field_or<std::uint32_t>(j, "batch_size", 1)};
  for (const auto& e : field<detail::json>(j, "generators")) {
    LayerGenerator g{field<std::string>(e, "layer_id"), {}};
    for (const auto& c : field<detail::json>(e, "channels")) {
      const auto center = field<std::vector<double>>(c, "center");
      if (center.size() != 2) fail(Errc::Parse, "blob centre must be [x, y]");
      g.channels.push_back({center[0], center[1], field<double>(c, "sigma"),
                            field_or<double>(c, "amplitude", 1.0), field_or<double>(c, "noise", 0.0)});
    }
    spec.generators.push_back(std::move(g));
  }
  spec.validate();
  return spec;
}

}  // namespace sirfp
