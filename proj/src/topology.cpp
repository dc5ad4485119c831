#include "sirfp/topology.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "sirfp/error.hpp"

namespace sirfp {
namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<std::size_t> parent;
};

}  // namespace

LayerTopology::LayerTopology(std::vector<LayerSpec> layers, std::vector<Link> links,
                             std::vector<std::vector<std::string>> coupled)
    : layers_(std::move(layers)), links_(std::move(links)), coupled_(std::move(coupled)) {
  if (layers_.empty()) fail(Errc::InvalidTopology, "topology has no layers");

  std::map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.id.empty()) fail(Errc::InvalidTopology, "layer id must not be empty");
    if (!ids.emplace(l.id, i).second) fail(Errc::InvalidTopology, "duplicate layer id '" + l.id + "'");
    if (l.in_channels == 0 || l.out_channels == 0 || l.kernel_h == 0 || l.kernel_w == 0 ||
        l.out_h == 0 || l.out_w == 0) {
      fail(Errc::InvalidTopology, "layer '" + l.id + "' has a zero size");
    }
    if (l.kind == LayerKind::Linear &&
        (l.kernel_h != 1 || l.kernel_w != 1 || l.out_h != 1 || l.out_w != 1)) {
      fail(Errc::InvalidTopology, "linear layer '" + l.id + "' must have 1x1 kernel and output");
    }
  }
  auto lookup = [&](const std::string& id) {
    auto it = ids.find(id);
    if (it == ids.end()) fail(Errc::InvalidTopology, "unknown layer '" + id + "'");
    return it->second;
  };

  const std::size_t n = layers_.size();
  std::vector<std::vector<std::size_t>> producers(n), consumers(n);
  for (const auto& link : links_) {
    const std::size_t p = lookup(link.producer);
    const std::size_t c = lookup(link.consumer);
    if (p == c) fail(Errc::InvalidTopology, "layer '" + link.producer + "' feeds itself");
    if (layers_[c].in_channels != layers_[p].out_channels) {
      fail(Errc::InvalidTopology, "'" + link.consumer + "' expects " +
                                      std::to_string(layers_[c].in_channels) +
                                      " input channels but '" + link.producer + "' emits " +
                                      std::to_string(layers_[p].out_channels));
    }
    if (std::find(producers[c].begin(), producers[c].end(), p) != producers[c].end()) {
      fail(Errc::InvalidTopology, "duplicate link " + link.producer + " -> " + link.consumer);
    }
    producers[c].push_back(p);
    consumers[p].push_back(c);
  }

  // Kahn's algorithm: every layer must be emitted.
  std::vector<std::size_t> indegree(n);
  for (std::size_t c = 0; c < n; ++c) indegree[c] = producers[c].size();
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::size_t emitted = 0;
  while (!ready.empty()) {
    const std::size_t u = ready.back();
    ready.pop_back();
    ++emitted;
    for (auto v : consumers[u]) {
      if (--indegree[v] == 0) ready.push_back(v);
    }
  }
  if (emitted != n) fail(Errc::InvalidTopology, "layer links contain a cycle");

  DisjointSets sets(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t k = 1; k < producers[c].size(); ++k) sets.unite(producers[c][0], producers[c][k]);
  }
  for (const auto& group : coupled_) {
    if (group.empty()) continue;
    const std::size_t first = lookup(group.front());
    for (const auto& id : group) {
      const std::size_t other = lookup(id);
      if (layers_[other].out_channels != layers_[first].out_channels) {
        fail(Errc::InvalidTopology, "coupled layers '" + group.front() + "' and '" + id +
                                        "' have different output widths");
      }
      sets.unite(first, other);
    }
  }

  std::map<std::size_t, std::size_t> root_to_group;
  group_of_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    auto [it, inserted] = root_to_group.emplace(root, groups_.size());
    if (inserted) {
      groups_.emplace_back();
      group_prunable_.push_back(true);
    }
    groups_[it->second].push_back(i);
    group_of_[i] = it->second;
    if (!layers_[i].prunable) group_prunable_[it->second] = false;
  }

  input_group_.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (!producers[c].empty()) input_group_[c] = group_of_[producers[c][0]];
  }
}

std::optional<std::size_t> LayerTopology::find(const std::string& id) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t LayerTopology::index_of(const std::string& id) const {
  if (auto i = find(id)) return *i;
  fail(Errc::InvalidArgument, "topology has no layer '" + id + "'");
}

std::uint32_t LayerTopology::group_channels(std::size_t g) const {
  return layers_[groups_.at(g).front()].out_channels;
}

}  // namespace sirfp
