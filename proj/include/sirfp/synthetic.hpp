#pragma once

// Synthetic feature streams with known redundancy structure.
//
// Every channel renders a Gaussian blob
//   v(x, y) = amplitude * exp(-((x - cx)^2 + (y - cy)^2) / (2 sigma^2)) + noise * N(0, 1)
// on the layer's out_h x out_w grid, averaged over `batch_size` noisy samples.
// Channels sharing a centre and radius are spatially redundant; channels far
// apart are not. The stream is a pure function of (seed, layer, channel, step).

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sirfp/topology.hpp"
#include "sirfp/types.hpp"

namespace sirfp {

struct BlobChannel {
  double center_x = 0.0;  // pixels, in [0, width)
  double center_y = 0.0;  // pixels, in [0, height)
  double sigma = 1.0;     // pixels, > 0
  double amplitude = 1.0;
  double noise = 0.0;     // standard deviation of additive noise, >= 0

  friend bool operator==(const BlobChannel&, const BlobChannel&) = default;
};

struct LayerGenerator {
  std::string layer_id;
  std::vector<BlobChannel> channels;

  friend bool operator==(const LayerGenerator&, const LayerGenerator&) = default;
};

struct SyntheticNetSpec {
  LayerTopology topology;
  std::vector<LayerGenerator> generators;  // every prunable layer needs one
  std::uint64_t seed = 42;
  std::uint32_t steps_per_stage = 16;
  std::uint32_t batch_size = 1;

  /// Throws InvalidArgument: generator/channel count mismatch, centre outside
  /// the grid, sigma <= 0, negative noise, missing generator for a prunable
  /// layer, zero steps or batch.
  void validate() const;

  const LayerGenerator& generator_for(const std::string& layer_id) const;
};

/// Feature maps of `channels` (original indices, in the given order) of one
/// layer at one step.
FeatureMapSet generate_layer_features(const SyntheticNetSpec& spec, const std::string& layer_id,
                                      std::uint64_t step, std::span<const ChannelIndex> channels);

/// All channels of every layer that has a generator, in topology order.
std::vector<FeatureMapSet> generate_features(const SyntheticNetSpec& spec, std::uint64_t step);

/// Single conv layer "features" with `pairs` pairs of coincident blobs on a
/// size x size grid: channels 2p and 2p+1 share centre and sigma. Pair centres
/// sit on a well-separated lattice with a seed-dependent jitter of at most one
/// pixel; `seed` also seeds the noise stream.
SyntheticNetSpec coincident_pairs_spec(std::uint64_t seed, std::uint32_t pairs = 4,
                                       std::uint32_t size = 24, double noise = 0.05);

std::string write_synthetic_spec(const SyntheticNetSpec& spec);
SyntheticNetSpec read_synthetic_spec(std::string_view text);

}  // namespace sirfp
