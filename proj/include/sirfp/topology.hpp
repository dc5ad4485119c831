#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sirfp {

enum class LayerKind { Conv, Linear };

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::Conv;
  std::uint32_t in_channels = 1;
  std::uint32_t out_channels = 1;
  std::uint32_t kernel_h = 1;
  std::uint32_t kernel_w = 1;
  std::uint32_t out_h = 1;
  std::uint32_t out_w = 1;
  // Classifier heads and similar layers whose width is fixed by the task.
  bool prunable = true;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Output channels of `producer` feed the input channels of `consumer`.
struct Link {
  std::string producer;
  std::string consumer;

  friend bool operator==(const Link&, const Link&) = default;
};

/// Layer graph with channel counts and spatial sizes.
///
/// Layers whose outputs are summed (several producers feeding one consumer,
/// or an explicit `coupled` group) must keep identical channel sets, so they
/// are merged into one coupling group. A group containing any non-prunable
/// layer is non-prunable as a whole.
class LayerTopology {
 public:
  /// Empty topology; only useful as a placeholder to assign into.
  LayerTopology() = default;

  /// Throws InvalidTopology on duplicate/unknown ids, a consumer whose
  /// in_channels differs from a producer's out_channels, coupled layers with
  /// different widths, zero sizes, or a cycle.
  LayerTopology(std::vector<LayerSpec> layers, std::vector<Link> links,
                std::vector<std::vector<std::string>> coupled = {});

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const std::vector<Link>& links() const noexcept { return links_; }
  const std::vector<std::vector<std::string>>& coupled() const noexcept { return coupled_; }

  std::optional<std::size_t> find(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;  // throws InvalidArgument

  std::size_t group_count() const noexcept { return groups_.size(); }
  /// Member layer indices of a coupling group, ascending.
  const std::vector<std::size_t>& group(std::size_t g) const { return groups_.at(g); }
  std::size_t group_of(std::size_t layer) const { return group_of_.at(layer); }
  bool group_prunable(std::size_t g) const { return group_prunable_.at(g); }
  std::uint32_t group_channels(std::size_t g) const;

  /// Coupling group whose output feeds this layer's input, if any.
  std::optional<std::size_t> input_group(std::size_t layer) const {
    return input_group_.at(layer);
  }

  friend bool operator==(const LayerTopology& a, const LayerTopology& b) {
    return a.layers_ == b.layers_ && a.links_ == b.links_ && a.coupled_ == b.coupled_;
  }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Link> links_;
  std::vector<std::vector<std::string>> coupled_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::size_t> group_of_;
  std::vector<bool> group_prunable_;
  std::vector<std::optional<std::size_t>> input_group_;
};

}  // namespace sirfp
